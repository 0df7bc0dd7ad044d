#include "morcell/battery_model.hpp"

#include <cmath>

namespace morcell
{

MaterialTable MaterialTable::reference()
{
  MaterialTable t;
  t[Label::Electrolyte] = {.alpha = 1.622e-6,
                           .beta = 0.0,
                           .gamma = 0.0,
                           .gamma_per_kelvin = -5.171e-5,
                           .delta = 0.02,
                           .c0 = 1.200e-3};
  t[Label::PosElectrode] = {.alpha = 1.0e-10,
                            .delta = 0.38,
                            .c0 = 2.057e-2,
                            .c_max = 2.367e-2,
                            .reaction_rate = 0.2,
                            .ocp = OcpCurve::Positive};
  t[Label::PosCollector] = {.delta = 0.38};
  t[Label::NegElectrode] = {.alpha = 1.0e-10,
                            .delta = 10.0,
                            .c0 = 2.639e-3,
                            .c_max = 2.468e-2,
                            .reaction_rate = 0.002,
                            .ocp = OcpCurve::Negative};
  t[Label::NegCollector] = {.delta = 10.0};
  return t;
}

FluxCoefficients MaterialTable::coefficients(Label l, double temperature) const
{
  const Material &m = (*this)[l];
  // gamma == 0 keeps table entries bit-exact (no 0 + x*T rounding)
  const double gamma = m.gamma_per_kelvin == 0.0
                         ? m.gamma
                         : (m.gamma == 0.0 ? m.gamma_per_kelvin * temperature
                                           : m.gamma + m.gamma_per_kelvin * temperature);
  return {m.alpha, m.beta, gamma, m.delta};
}

void MaterialTable::validate() const
{
  for (Label l : all_labels)
  {
    const Material &m = (*this)[l];
    const std::string name(label_token(l));
    if (!(m.delta > 0.0))
      throw ConfigError("material " + name + ": delta must be positive");
    if (m.alpha < 0.0)
      throw ConfigError("material " + name + ": alpha must be non-negative");
    if (is_electrode(l))
    {
      if (!(m.c_max > m.c0 && m.c0 > 0.0))
        throw ConfigError("material " + name + ": requires c_max > c0 > 0");
      if (!(m.reaction_rate > 0.0))
        throw ConfigError("material " + name + ": reaction rate must be positive");
      if (m.ocp == OcpCurve::None)
        throw ConfigError("material " + name + ": electrode needs an open-circuit potential");
    }
  }
}

ButlerVolmerGradient butler_volmer_gradient(const Kinetics &kin, double c_e, double c_s,
                                            double phi_e, double phi_s)
{
  if (!(std::isfinite(c_e) && std::isfinite(c_s) && std::isfinite(phi_e) && std::isfinite(phi_s)))
    throw EvaluationError("non-finite Butler-Volmer input");
  ButlerVolmerGradient g;
  const double cm = kin.c_max;
  const double product = c_e * c_s * (cm - c_s);
  if (!(product > 0.0))
    return g;

  const double kappa =
    kin.constants.faraday / (2.0 * kin.constants.gas_constant * kin.temperature);
  const double x = c_s / cm;
  const double eta = phi_s - phi_e - open_circuit_potential(kin.ocp, x);
  const double root = std::sqrt(product);
  const double two_k = 2.0 * kin.reaction_rate;
  const double sh = std::sinh(kappa * eta);
  const double ch = std::cosh(kappa * eta);

  g.value = two_k * root * sh;
  const double d_phi = two_k * root * ch * kappa;
  g.d_phi_s = d_phi;
  g.d_phi_e = -d_phi;
  // d sqrt(P) = dP / (2 sqrt(P))
  g.d_c_e = two_k * (c_s * (cm - c_s)) / (2.0 * root) * sh;
  g.d_c_s = two_k * (c_e * (cm - 2.0 * c_s)) / (2.0 * root) * sh -
            d_phi * open_circuit_potential_derivative(kin.ocp, x) / cm;

  if (!(std::isfinite(g.value) && std::isfinite(g.d_phi_s) && std::isfinite(g.d_c_e) &&
        std::isfinite(g.d_c_s)))
    throw EvaluationError("Butler-Volmer flux overflow");
  return g;
}

} // namespace morcell
