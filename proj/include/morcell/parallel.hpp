#ifndef MORCELL_PARALLEL_HPP
#define MORCELL_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace morcell
{

/// Calls body(i) for i in [0, count) on up to `workers` threads. Work items are
/// handed out in index order. The first exception thrown (by lowest index) is
/// rethrown after all threads have finished.
template <typename Body> void parallel_for(std::size_t count, unsigned workers, Body &&body)
{
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++)
    {
      try
      {
        body(i);
      }
      catch (...)
      {
        const std::lock_guard lock(mutex);
        if (i < failed_index)
        {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w)
    threads.emplace_back(run);
  run();
  for (auto &t : threads)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace morcell

#endif // MORCELL_PARALLEL_HPP
