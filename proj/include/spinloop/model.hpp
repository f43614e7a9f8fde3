#pragma once

#include <span>
#include <vector>

namespace spinloop {

enum class ModeLabel { membrane, spin };

// One harmonic mode. All frequencies and rates are angular (rad/s). The sign
// of omega carries the effective-mass sign: a spin oscillator prepared in its
// highest-energy state precesses backwards and is encoded as omega < 0.
struct OscillatorMode {
  ModeLabel label = ModeLabel::membrane;
  double omega = 0.0;       // signed angular frequency [rad/s]
  double gamma0 = 0.0;      // intrinsic energy damping rate [rad/s]
  double nbar = 0.0;        // thermal bath occupancy
  double gamma_meas = 0.0;  // measurement rate Gamma_i [rad/s]

  void validate() const;  // throws ConfigError on violated invariants
};

// Optical loop between the two light-matter interfaces: phase, amplitude
// transmissions eta12 (spin->membrane), eta23 (membrane->spin), eta13
// (first to second spin pass), and the one-way propagation delay.
struct LoopConfig {
  double phi = 0.0;  // loop phase [rad], kept in [0, 2pi)
  double eta12 = 1.0;
  double eta23 = 1.0;
  double eta13 = 1.0;
  double tau = 0.0;  // one-way delay [s]

  // Identical per-path transmissions: eta12 = eta23 = eta, eta13 = eta^2.
  static LoopConfig uniform(double eta, double phi = 0.0, double tau = 0.0);

  void validate() const;
};

struct SystemModel {
  OscillatorMode membrane;
  OscillatorMode spin;
  LoopConfig loop;
  double detector_noise_spin = 0.0;   // occupancy added at spin read-out
  double detector_phase_alpha = 0.0;  // spin demodulation basis rotation [rad]

  void validate() const;
};

// Closed-form rates of the coupled system.
//
//   g        = (eta12^2 + eta12 eta23 eta13) sqrt(Gamma_s Gamma_m)
//   ba_m     = eta12^2 Gamma_m
//   ba_s     = Gamma_s (1 + eta13^2 + 2 eta13^2 cos(phi))
//   th_i     = gamma_i0 (nbar_i + 1/2)
//   C        = 2g / (gamma_tot_m + gamma_tot_s)
//   nbar_eff = (gamma_tot_m + gamma_tot_s) / (gamma_m0 + gamma_s0) - 1/2
//   xi_pred  = 1 / (1/(1 + 2 nbar_eff) + C)
struct DerivedRates {
  double g = 0.0;
  double gamma_ba_m = 0.0;
  double gamma_ba_s = 0.0;
  double gamma_th_m = 0.0;
  double gamma_th_s = 0.0;
  double gamma_tot_m = 0.0;
  double gamma_tot_s = 0.0;
  double coop = 0.0;
  double nbar_eff = 0.0;
  double xi_pred = 0.0;
};

DerivedRates derive_rates(const SystemModel& model);

// Which system sits inside the double-pass loop. derive_rates() assumes the
// loop encloses the spin; the design study also evaluates the mirrored layout.
enum class LoopTarget { spin, membrane };

DerivedRates derive_rates(const SystemModel& model, LoopTarget target);

// Peak quantum cooperativity of the single-loop link at one-way power
// transmission eta^2, thermal noise set to zero:
//   C_max = eta (1 + eta^2) / sqrt(1 - eta^4)  at  Gamma_s/Gamma_m = eta^2/(1 - eta^4)
// eta_sq = 1 makes the spin back-action vanish; C_max is then reported as
// +infinity with the unbounded flag set (no exception, sweeps stay total).
struct CooperativityBound {
  double c_max = 0.0;
  double ratio_opt = 0.0;  // optimizing Gamma_s / Gamma_m
  bool unbounded = false;
};

CooperativityBound cooperativity_bound(double eta_sq);

// C = eta / (1 - eta^2) at Gamma_s = eta^2 Gamma_m for a symmetric scheme with
// back-action interference on both systems.
struct DoubleLoopCooperativity {
  double c = 0.0;
  bool unbounded = false;
};

DoubleLoopCooperativity double_loop_cooperativity(double eta_sq);

// Larmor frequency of the collective spin: omega_s = -sign(orientation) gamma_f |b0|.
// orientation_sign is the sign of the mean spin projection on the field.
double larmor_frequency(double gamma_f, double b0, int orientation_sign);

// High-temperature occupancy nbar = k_B T / (hbar |omega|).
double thermal_occupancy(double temperature, double omega);

// Atom and cavity parameters feeding the detuning design study.
struct AtomCavityPhysical {
  double alpha1_ref = 0.0;       // vector polarizability at reference_detuning
  double reference_detuning = 0.0;  // [rad/s], e.g. 2pi x 1 GHz
  double n_atoms = 0.0;
  double f_spin = 2.0;
  double gamma_se = 0.0;  // excited-state linewidth [rad/s]
  double d0 = 0.0;        // resonant optical depth
  double g0 = 0.0;        // vacuum optomechanical coupling [rad/s]
  double kappa = 0.0;     // cavity linewidth [rad/s]
  double eta_c = 0.0;     // cavity coupling efficiency
  double phi_flux = 0.0;  // photon flux [1/s]
  double gamma_f = 0.0;   // gyromagnetic ratio [rad/(s T)], optional
  double b0 = 0.0;        // magnetic field [T], optional
  double gamma_s_intrinsic = 0.0;  // residual spin damping added to scattering

  void validate() const;
};

struct DesignPoint {
  double delta_a = 0.0;  // laser-atom detuning [rad/s]
  double alpha1 = 0.0;
  double gamma_s_meas = 0.0;  // Gamma_s
  double gamma_m_meas = 0.0;  // Gamma_m
  double gamma_sc = 0.0;      // spontaneous-scattering decoherence rate
  double cs_ratio = 0.0;      // 4 Gamma_s / gamma_sc (single-pass cooperativity)
  double g = 0.0;
  double gamma_th_m = 0.0;
  double gamma_th_s = 0.0;
  double gamma_tot_m = 0.0;
  double gamma_tot_s = 0.0;
  double coop = 0.0;
  double nbar_eff = 0.0;
  double xi_pred = 0.0;
  double margin_strong = 0.0;  // g - (gamma_m0 + gamma_s0)/2
  double margin_qc = 0.0;      // g - (gamma_tot_m + gamma_tot_s)/2
  bool strong_coupling = false;
  bool quantum_coherent = false;
};

// Rates of the coupled system versus laser-atom detuning. `mech` carries the
// membrane frequency, intrinsic damping and bath occupancy; its measurement
// rate is recomputed from the cavity parameters. The spin damping per point is
// gamma_s_intrinsic plus the scattering rate (doubled-pass weighted when the
// loop encloses the spin).
std::vector<DesignPoint> design_study(const AtomCavityPhysical& phys,
                                      const OscillatorMode& mech,
                                      const LoopConfig& loop,
                                      std::span<const double> detuning_grid,
                                      LoopTarget target = LoopTarget::spin);

}  // namespace spinloop
