#include "spinloop/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "spinloop/constants.hpp"
#include "spinloop/errors.hpp"

namespace spinloop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

double wrap_phase(double phi) {
  double w = std::fmod(phi, constants::two_pi);
  if (w < 0) w += constants::two_pi;
  return w;
}

}  // namespace

void OscillatorMode::validate() const {
  const char* name = label == ModeLabel::membrane ? "membrane" : "spin";
  require(std::isfinite(omega), std::string(name) + ": frequency must be finite");
  require(gamma0 >= 0.0, std::string(name) + ": damping rate must be >= 0");
  require(nbar >= 0.0, std::string(name) + ": bath occupancy must be >= 0");
  require(gamma_meas >= 0.0, std::string(name) + ": measurement rate must be >= 0");
}

LoopConfig LoopConfig::uniform(double eta, double phi, double tau) {
  LoopConfig loop;
  loop.eta12 = eta;
  loop.eta23 = eta;
  loop.eta13 = eta * eta;
  loop.phi = wrap_phase(phi);
  loop.tau = tau;
  return loop;
}

void LoopConfig::validate() const {
  for (double eta : {eta12, eta23, eta13})
    require(eta >= 0.0 && eta <= 1.0, "loop: transmission coefficients must lie in [0, 1]");
  require(tau >= 0.0, "loop: delay must be >= 0");
  require(std::isfinite(phi), "loop: phase must be finite");
}

void SystemModel::validate() const {
  require(membrane.label == ModeLabel::membrane, "model: first mode must be the membrane");
  require(spin.label == ModeLabel::spin, "model: second mode must be the spin");
  membrane.validate();
  spin.validate();
  loop.validate();
  require(detector_noise_spin >= 0.0, "detector: added occupancy must be >= 0");
}

DerivedRates derive_rates(const SystemModel& model) {
  return derive_rates(model, LoopTarget::spin);
}

DerivedRates derive_rates(const SystemModel& model, LoopTarget target) {
  model.validate();
  const LoopConfig& lp = model.loop;
  const double gamma_m = model.membrane.gamma_meas;
  const double gamma_s = model.spin.gamma_meas;

  DerivedRates r;
  r.g = (lp.eta12 * lp.eta12 + lp.eta12 * lp.eta23 * lp.eta13) * std::sqrt(gamma_s * gamma_m);

  // Back-action: the singly-passed system keeps the full optical diffusion,
  // the doubly-passed one sees the loop interference factor.
  const double interf = 1.0 + lp.eta13 * lp.eta13 + 2.0 * lp.eta13 * lp.eta13 * std::cos(lp.phi);
  if (target == LoopTarget::spin) {
    r.gamma_ba_m = lp.eta12 * lp.eta12 * gamma_m;
    r.gamma_ba_s = gamma_s * interf;
  } else {
    r.gamma_ba_m = gamma_m * interf;
    r.gamma_ba_s = lp.eta12 * lp.eta12 * gamma_s;
  }

  r.gamma_th_m = model.membrane.gamma0 * (model.membrane.nbar + 0.5);
  r.gamma_th_s = model.spin.gamma0 * (model.spin.nbar + 0.5);
  r.gamma_tot_m = r.gamma_th_m + r.gamma_ba_m;
  r.gamma_tot_s = r.gamma_th_s + r.gamma_ba_s;

  const double gamma_tot_sum = r.gamma_tot_m + r.gamma_tot_s;
  r.coop = gamma_tot_sum > 0.0 ? 2.0 * r.g / gamma_tot_sum : kInf;

  const double gamma0_sum = model.membrane.gamma0 + model.spin.gamma0;
  if (gamma0_sum <= 0.0)
    throw NumericsError("derive_rates: undamped collective mode (gamma_m0 + gamma_s0 = 0)");
  r.nbar_eff = gamma_tot_sum / gamma0_sum - 0.5;
  r.xi_pred = 1.0 / (1.0 / (1.0 + 2.0 * r.nbar_eff) + r.coop);
  return r;
}

CooperativityBound cooperativity_bound(double eta_sq) {
  require(eta_sq > 0.0 && eta_sq <= 1.0, "cooperativity_bound: eta^2 must lie in (0, 1]");
  CooperativityBound b;
  const double eta = std::sqrt(eta_sq);
  const double loss = 1.0 - eta_sq * eta_sq;  // 1 - eta^4
  if (loss <= 0.0) {
    b.c_max = kInf;
    b.ratio_opt = kInf;
    b.unbounded = true;
    return b;
  }
  b.c_max = eta * (1.0 + eta_sq) / std::sqrt(loss);
  b.ratio_opt = eta_sq / loss;
  return b;
}

DoubleLoopCooperativity double_loop_cooperativity(double eta_sq) {
  require(eta_sq >= 0.0 && eta_sq <= 1.0, "double_loop_cooperativity: eta^2 must lie in [0, 1]");
  DoubleLoopCooperativity d;
  if (eta_sq >= 1.0) {
    d.c = kInf;
    d.unbounded = true;
    return d;
  }
  d.c = std::sqrt(eta_sq) / (1.0 - eta_sq);
  return d;
}

double larmor_frequency(double gamma_f, double b0, int orientation_sign) {
  require(b0 != 0.0, "larmor_frequency: b0 must be nonzero");
  require(orientation_sign == 1 || orientation_sign == -1,
          "larmor_frequency: orientation sign must be +1 or -1");
  return -static_cast<double>(orientation_sign) * gamma_f * std::abs(b0);
}

double thermal_occupancy(double temperature, double omega) {
  require(temperature >= 0.0, "thermal_occupancy: temperature must be >= 0");
  require(omega != 0.0, "thermal_occupancy: frequency must be nonzero");
  return constants::k_boltzmann * temperature / (constants::hbar * std::abs(omega));
}

void AtomCavityPhysical::validate() const {
  require(d0 > 0.0, "design: optical depth must be > 0");
  require(phi_flux > 0.0, "design: photon flux must be > 0");
  require(kappa > 0.0, "design: cavity linewidth must be > 0");
  require(g0 > 0.0, "design: vacuum optomechanical coupling must be > 0");
  require(eta_c >= 0.0 && eta_c <= 1.0, "design: cavity coupling efficiency must lie in [0, 1]");
  require(reference_detuning != 0.0, "design: reference detuning must be nonzero");
  require(alpha1_ref != 0.0, "design: alpha1 must be nonzero");
  require(n_atoms > 0.0, "design: atom number must be > 0");
  require(gamma_se > 0.0, "design: excited-state linewidth must be > 0");
}

std::vector<DesignPoint> design_study(const AtomCavityPhysical& phys,
                                      const OscillatorMode& mech,
                                      const LoopConfig& loop,
                                      std::span<const double> detuning_grid,
                                      LoopTarget target) {
  phys.validate();
  mech.validate();
  loop.validate();
  for (double d : detuning_grid)
    require(d != 0.0, "design: detuning grid must exclude zero");

  const double gamma_m_meas =
      phys.eta_c * phys.eta_c * std::pow(4.0 * phys.g0 / phys.kappa, 2) * phys.phi_flux;

  // With the loop on the spin the atoms see both passes of the beam; the
  // second pass carries eta13^2 of the flux, so scattering adds incoherently
  // as (1 + eta13^2). A single pass applies in the mirrored layout.
  const double pass_factor =
      target == LoopTarget::spin ? 1.0 + loop.eta13 * loop.eta13 : 1.0;

  std::vector<DesignPoint> table;
  table.reserve(detuning_grid.size());
  for (double delta_a : detuning_grid) {
    DesignPoint p;
    p.delta_a = delta_a;
    p.alpha1 = phys.alpha1_ref * (phys.reference_detuning / delta_a);
    p.gamma_s_meas = p.alpha1 * p.alpha1 * phys.n_atoms * phys.f_spin * phys.phi_flux / 8.0;
    p.gamma_m_meas = gamma_m_meas;
    // Spontaneous scattering via the single-pass atomic cooperativity
    // 4 Gamma_s / gamma_sc = d0 / 16, which holds per point at every detuning.
    p.gamma_sc = 64.0 * p.gamma_s_meas / phys.d0;
    p.cs_ratio = 4.0 * p.gamma_s_meas / p.gamma_sc;

    SystemModel m;
    m.membrane = mech;
    m.membrane.gamma_meas = gamma_m_meas;
    m.spin.label = ModeLabel::spin;
    m.spin.omega = -mech.omega;
    m.spin.gamma0 = phys.gamma_s_intrinsic + pass_factor * p.gamma_sc;
    m.spin.nbar = 0.0;
    m.spin.gamma_meas = p.gamma_s_meas;
    m.loop = loop;

    const DerivedRates r = derive_rates(m, target);
    p.g = r.g;
    p.gamma_th_m = r.gamma_th_m;
    p.gamma_th_s = r.gamma_th_s;
    p.gamma_tot_m = r.gamma_tot_m;
    p.gamma_tot_s = r.gamma_tot_s;
    p.coop = r.coop;
    p.nbar_eff = r.nbar_eff;
    p.xi_pred = r.xi_pred;
    p.margin_strong = p.g - 0.5 * (m.membrane.gamma0 + m.spin.gamma0);
    p.margin_qc = p.g - 0.5 * (r.gamma_tot_m + r.gamma_tot_s);
    p.strong_coupling = p.margin_strong > 0.0;
    p.quantum_coherent = p.margin_qc > 0.0;
    table.push_back(p);
  }
  return table;
}

}  // namespace spinloop
