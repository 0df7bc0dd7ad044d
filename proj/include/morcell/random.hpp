#ifndef MORCELL_RANDOM_HPP
#define MORCELL_RANDOM_HPP

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace morcell
{

// The standard distributions are implementation-defined; these are not, so seeded
// geometries and parameter samples are identical across standard libraries.

/// Uniform draw from [0, bound) by rejection sampling.
inline std::uint64_t uniform_below(std::mt19937_64 &rng, std::uint64_t bound)
{
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  std::uint64_t x;
  do
    x = rng();
  while (x >= limit);
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64 &rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T> void shuffle(std::vector<T> &v, std::mt19937_64 &rng)
{
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

} // namespace morcell

#endif // MORCELL_RANDOM_HPP
