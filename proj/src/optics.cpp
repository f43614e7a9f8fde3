#include "spinloop/optics.hpp"

#include <cmath>

#include "spinloop/errors.hpp"

namespace spinloop {

bool StokesVector::physical(double rel_tol) const {
  const double pol = sx * sx + sy * sy + sz * sz;
  return pol <= s0 * s0 * (1.0 + rel_tol);
}

LinearizedField linearize(const StokesVector& stokes, double x_polarized_flux) {
  if (x_polarized_flux <= 0.0) throw ConfigError("linearize: carrier flux must be > 0");
  const double s0_bar = 0.5 * x_polarized_flux;
  LinearizedField f;
  f.mean_flux = x_polarized_flux;
  f.x_l = stokes.sy / std::sqrt(s0_bar);
  f.p_l = stokes.sz / std::sqrt(s0_bar);
  f.linear_regime = f.x_l * f.x_l + f.p_l * f.p_l <= 0.01 * x_polarized_flux;
  return f;
}

StokesVector delinearize(const LinearizedField& field) {
  const double s0_bar = 0.5 * field.mean_flux;
  StokesVector s;
  s.s0 = s0_bar;
  s.sx = s0_bar;
  s.sy = field.x_l * std::sqrt(s0_bar);
  s.sz = field.p_l * std::sqrt(s0_bar);
  return s;
}

StokesVector hwp(const StokesVector& s, double theta_h) {
  const double c = std::cos(4.0 * theta_h), sn = std::sin(4.0 * theta_h);
  StokesVector out;
  out.s0 = s.s0;
  out.sx = s.sx * c + s.sy * sn;
  out.sy = -s.sy * c + s.sx * sn;
  out.sz = -s.sz;
  return out;
}

StokesVector loop_phase_stack(const StokesVector& s, double phi) {
  const double c = std::cos(phi), sn = std::sin(phi);
  StokesVector out;
  out.s0 = s.s0;
  out.sx = s.sx;
  out.sy = s.sy * c - s.sz * sn;
  out.sz = s.sz * c + s.sy * sn;
  return out;
}

double interference_contrast(double phi, double omega_s, double tau) {
  const double c = std::cos(phi);
  const double arg = 1.0 + c * c + 2.0 * c * std::cos(2.0 * omega_s * tau);
  return std::sqrt(std::max(arg, 0.0));
}

bool QuadratureHistory::covers(double t) const {
  if (samples.empty() || dt <= 0.0) return false;
  const double t_max = t0 + dt * static_cast<double>(samples.size() - 1);
  return t >= t0 - 1e-12 * dt && t <= t_max + 1e-12 * dt;
}

double QuadratureHistory::at(double t) const {
  if (!covers(t)) throw ConfigError("quadrature history does not cover requested time");
  const double k = (t - t0) / dt;
  const long k0 = std::min(static_cast<long>(k), static_cast<long>(samples.size()) - 2);
  if (k0 < 0) return samples.front();
  const double frac = k - static_cast<double>(k0);
  return samples[static_cast<size_t>(k0)] * (1.0 - frac) +
         samples[static_cast<size_t>(k0) + 1] * frac;
}

namespace {

OutputField compose_output(const SystemModel& model, double x_s_now, double x_s_2tau,
                           double x_m_tau) {
  const auto& lp = model.loop;
  const double carrier = lp.eta12 * lp.eta23;
  const double c = std::cos(lp.phi), sn = std::sin(lp.phi);
  const double root_s = std::sqrt(model.spin.gamma_meas);
  const double root_m = std::sqrt(model.membrane.gamma_meas);
  OutputField out;
  out.x_l = 2.0 * carrier * (root_s * (x_s_now + c * x_s_2tau) - root_m * sn * x_m_tau);
  out.p_l = 2.0 * carrier * (root_s * sn * x_s_2tau + root_m * c * x_m_tau);
  out.vacuum_variance = 0.5;
  return out;
}

}  // namespace

OutputField output_quadrature(const SystemModel& model, const QuadratureHistory& spin_history,
                              const QuadratureHistory& membrane_history, double t) {
  const double tau = model.loop.tau;
  if (!spin_history.covers(t) || !spin_history.covers(t - 2.0 * tau) ||
      !membrane_history.covers(t - tau))
    throw ConfigError("output_quadrature: histories must cover [t - 2 tau, t]");
  return compose_output(model, spin_history.at(t), spin_history.at(t - 2.0 * tau),
                        membrane_history.at(t - tau));
}

OutputField output_quadrature_rwa(const SystemModel& model, double x_s, double p_s,
                                  double x_m_delayed) {
  const double arg = 2.0 * model.spin.omega * model.loop.tau;
  const double x_s_2tau = x_s * std::cos(arg) - p_s * std::sin(arg);
  return compose_output(model, x_s, x_s_2tau, x_m_delayed);
}

}  // namespace spinloop
