#ifndef MORCELL_BATTERY_MODEL_HPP
#define MORCELL_BATTERY_MODEL_HPP

#include <array>
#include <cmath>
#include <string>

#include "morcell/errors.hpp"
#include "morcell/geometry.hpp"

namespace morcell
{

struct PhysicalConstants
{
  double gas_constant = 8.314;
  double faraday = 9.6487e4;
};

/// Model parameter: charge rate I (A/cm^2) and temperature T (K).
struct Parameter
{
  double charge_rate = 0.0;
  double temperature = 298.0;

  bool operator==(const Parameter &) const = default;
};

/// Standard experiment box for (I, T).
struct ParameterBox
{
  Parameter lower{1e-4, 250.0};
  Parameter upper{1e-3, 350.0};

  bool contains(const Parameter &mu) const
  {
    return mu.charge_rate >= lower.charge_rate && mu.charge_rate <= upper.charge_rate &&
           mu.temperature >= lower.temperature && mu.temperature <= upper.temperature;
  }
};

enum class OcpCurve : std::uint8_t
{
  None,
  Negative,
  Positive
};

/// One row of the material table. gamma is affine in T: gamma + gamma_per_kelvin * T.
struct Material
{
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double gamma_per_kelvin = 0.0;
  double delta = 0.0;
  double c0 = 0.0;
  double c_max = 0.0;
  double reaction_rate = 0.0;
  OcpCurve ocp = OcpCurve::None;
};

struct FluxCoefficients
{
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;

  bool operator==(const FluxCoefficients &) const = default;
};

class MaterialTable
{
public:
  /// The constant-coefficient table of the reference experiment.
  static MaterialTable reference();

  const Material &operator[](Label l) const { return rows_[static_cast<std::size_t>(l)]; }
  Material &operator[](Label l) { return rows_[static_cast<std::size_t>(l)]; }

  FluxCoefficients coefficients(Label l, double temperature) const;

  /// Throws ConfigError if delta <= 0 or an electrode violates c_max > c0 > 0.
  void validate() const;

private:
  std::array<Material, 5> rows_{};
};

// Open-circuit potentials. x = c_s / c_max.

template <typename Scalar> Scalar u0_neg(Scalar x)
{
  using std::exp;
  return Scalar(-0.132) + Scalar(1.41) * exp(Scalar(-3.52) * x);
}

template <typename Scalar> Scalar u0_neg_derivative(Scalar x)
{
  using std::exp;
  return Scalar(1.41) * Scalar(-3.52) * exp(Scalar(-3.52) * x);
}

namespace detail
{
template <typename Scalar> void check_u0_pos_domain(Scalar x)
{
  if (!(x > Scalar(0) && x < Scalar(1.002)))
    throw DomainError("positive OCP evaluated at x = " + std::to_string(static_cast<double>(x)) +
                      " outside (0, 1.002)");
}
} // namespace detail

/// Positive-electrode OCP, evaluated term by term as tabulated. Throws DomainError
/// outside (0, 1.002).
template <typename Scalar> Scalar u0_pos(Scalar x)
{
  using std::exp;
  using std::pow;
  using std::tanh;
  detail::check_u0_pos_domain(x);
  const Scalar x2 = x * x;
  const Scalar x4 = x2 * x2;
  return Scalar(4) + Scalar(0.07) * tanh(Scalar(-22) * x + Scalar(12)) -
         Scalar(0.1) * (Scalar(1) / pow(Scalar(1.002) - x, Scalar(0.37)) - Scalar(1.6)) -
         Scalar(0.045) * exp(Scalar(-72) * x4 * x4) +
         Scalar(0.01) * exp(Scalar(-200) * (x - Scalar(0.19)));
}

template <typename Scalar> Scalar u0_pos_derivative(Scalar x)
{
  using std::exp;
  using std::pow;
  using std::tanh;
  detail::check_u0_pos_domain(x);
  const Scalar t = tanh(Scalar(-22) * x + Scalar(12));
  const Scalar x2 = x * x;
  const Scalar x4 = x2 * x2;
  const Scalar x7 = x4 * x2 * x;
  return Scalar(0.07) * (Scalar(1) - t * t) * Scalar(-22) -
         Scalar(0.037) * pow(Scalar(1.002) - x, Scalar(-1.37)) +
         Scalar(0.045) * Scalar(576) * x7 * exp(Scalar(-72) * x4 * x4) -
         Scalar(2) * exp(Scalar(-200) * (x - Scalar(0.19)));
}

template <typename Scalar> Scalar open_circuit_potential(OcpCurve curve, Scalar x)
{
  switch (curve)
  {
  case OcpCurve::Negative: return u0_neg(x);
  case OcpCurve::Positive: return u0_pos(x);
  case OcpCurve::None: break;
  }
  throw ConfigError("material has no open-circuit potential");
}

template <typename Scalar> Scalar open_circuit_potential_derivative(OcpCurve curve, Scalar x)
{
  switch (curve)
  {
  case OcpCurve::Negative: return u0_neg_derivative(x);
  case OcpCurve::Positive: return u0_pos_derivative(x);
  case OcpCurve::None: break;
  }
  throw ConfigError("material has no open-circuit potential");
}

/// Reaction data of one electrode at a fixed temperature.
struct Kinetics
{
  OcpCurve ocp = OcpCurve::None;
  double reaction_rate = 0.0;
  double c_max = 0.0;
  double temperature = 298.0;
  PhysicalConstants constants{};
};

struct ButlerVolmerGradient
{
  double value = 0.0;
  double d_c_e = 0.0;
  double d_c_s = 0.0;
  double d_phi_e = 0.0;
  double d_phi_s = 0.0;
};

/// Normal current density from particle into electrolyte,
///   2k sqrt(max(c_e c_s (c_max - c_s), 0)) sinh((phi_s - phi_e - U0(c_s/c_max)) F / (2RT)).
/// The companion mass flux is the result divided by F. The OCP is not evaluated
/// when the prefactor vanishes.
template <typename Scalar>
Scalar butler_volmer(const Kinetics &kin, Scalar c_e, Scalar c_s, Scalar phi_e, Scalar phi_s)
{
  using std::isfinite;
  using std::sinh;
  using std::sqrt;
  if (!(isfinite(c_e) && isfinite(c_s) && isfinite(phi_e) && isfinite(phi_s)))
    throw EvaluationError("non-finite Butler-Volmer input");
  const Scalar cm = Scalar(kin.c_max);
  const Scalar product = c_e * c_s * (cm - c_s);
  if (!(product > Scalar(0)))
    return Scalar(0);
  const Scalar kappa = Scalar(kin.constants.faraday) /
                       (Scalar(2) * Scalar(kin.constants.gas_constant) * Scalar(kin.temperature));
  const Scalar eta = phi_s - phi_e - open_circuit_potential(kin.ocp, c_s / cm);
  const Scalar j = Scalar(2) * Scalar(kin.reaction_rate) * sqrt(product) * sinh(kappa * eta);
  if (!isfinite(j))
    throw EvaluationError("Butler-Volmer flux overflow");
  return j;
}

/// Value and analytic partial derivatives of butler_volmer. Where the clamp is
/// active all derivatives are zero.
ButlerVolmerGradient butler_volmer_gradient(const Kinetics &kin, double c_e, double c_s,
                                            double phi_e, double phi_s);

} // namespace morcell

#endif // MORCELL_BATTERY_MODEL_HPP
