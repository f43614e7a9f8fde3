#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "spinloop/model.hpp"

namespace spinloop {

// Bare oscillator susceptibility chi(omega) = Omega_i / (Omega_i^2 - omega^2 - i omega gamma_i).
std::complex<double> bare_chi(double omega, double omega_i, double gamma_i);

// Coupled-mode parameters of the two-oscillator response theory. The force
// coefficients are directional:
//   Pdot_m -= f_ms X_s(t - tau)
//   Pdot_s += f_sm cos(phi) X_m(t - tau)
//   Pdot_s += self_coeff sin(phi) X_s(t - 2 tau)
// For a lossless loop both directions carry 2g; loss makes them unequal.
struct CoupledModeParams {
  double omega_m = 0.0;  // > 0
  double omega_s = 0.0;  // signed
  double gamma_m = 0.0;  // energy damping on momentum [rad/s]
  double gamma_s = 0.0;
  double f_ms = 0.0;
  double f_sm = 0.0;
  double self_coeff = 0.0;
  double tau = 0.0;
  double phi = 0.0;

  // Symmetric coupling as used by the spectroscopy fitting function.
  static CoupledModeParams symmetric(double g, double gamma_m, double gamma_s, double omega_m,
                                     double omega_s, double tau, double phi);
  // Directional coefficients of the lossy loop: f_ms = 4 eta12^2 sqrt(Gs Gm),
  // f_sm = 4 eta12 eta23 eta13 sqrt(Gs Gm), self = 4 Gamma_s eta13^2.
  static CoupledModeParams from_model(const SystemModel& model);

  // Effective coupling entering chi_eff and the normal modes; the eigenvalue
  // problem sees the product of the two directional forces.
  double coupling_sq() const { return f_ms * f_sm / 4.0; }
};

// Effective susceptibilities with the delayed feedback term,
//   chi_i_eff^{-1} = chi_i0^{-1} + 4 g^2 cos(phi) e^{2 i omega tau} chi_other,0.
struct EffectiveChi {
  std::complex<double> chi_m;
  std::complex<double> chi_s;
};

EffectiveChi effective_chi(const CoupledModeParams& p, double omega);
EffectiveChi effective_chi(const SystemModel& model, double omega);

// Rotating-wave normal modes: frequencies Omega_± and full energy damping
// rates gamma_±. A mode with gamma < 0 is amplified (unstable).
struct NormalModes {
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
  bool stable_plus = false;
  bool stable_minus = false;
};

NormalModes normal_modes(const CoupledModeParams& p);
NormalModes normal_modes(const SystemModel& model);

// Sweep over spin frequencies with branch continuity: labels follow each
// complex eigenvalue by nearest-neighbour continuation from the first grid
// point, so adjacent rows never swap branches.
std::vector<NormalModes> normal_mode_sweep(const CoupledModeParams& base,
                                           std::span<const double> omega_s_grid);

// Roots of the quartic denominator of chi_m_eff at tau = 0 (poles of the
// coupled response). Complex omega, lower-half-plane convention: a stable
// pole has Im omega = -gamma/2.
std::array<std::complex<double>, 4> chi_eff_poles(const CoupledModeParams& p);

// Symmetrized displacement spectrum of the membrane,
//   S_XX,m = |chi_m_eff|^2 [ 2 gamma_m S_Fm + f_ms^2 |chi_s0|^2 2 gamma_s S_Fs(omega) ]
// with white force spectra in the unit-variance vacuum convention
// (S = 1/2 at nbar = 0):
//   S_Fm = (nbar_m + 1/2) + gamma_ba_m / gamma_m
//   S_Fs = (nbar_s + 1/2) + Gamma_s/gamma_s [ |1 + eta13^2 cos(phi) e^{2 i omega tau}|^2
//                                             + eta13^2 (1 - eta13^2) cos^2(phi) ]
// The spin weight combines loop interference of the retained vacuum with the
// incoherent loss-port admixture; at omega tau -> 0 it integrates back to the
// master-equation back-action rate. Frequency integral over d omega / 2 pi
// reproduces the steady-state variance of a stable configuration.
struct SpectrumRecord {
  std::vector<double> omega;
  std::vector<double> psd;
};

SpectrumRecord displacement_psd(const SystemModel& model, std::span<const double> omega_grid);

// Delayed self-interaction of the doubly-passed spin:
//   delta Omega_s = 2 Gamma_s sin(phi) cos(2 Omega_s tau)
//   delta gamma_s = 4 Gamma_s sin(phi) sin(2 Omega_s tau)
struct SelfShift {
  double delta_omega_s = 0.0;
  double delta_gamma_s = 0.0;
};

SelfShift spin_self_shift(const SystemModel& model);

// Optional sinusoidal force pulse on one oscillator's momentum.
struct DrivePulse {
  ModeLabel target = ModeLabel::membrane;
  double amplitude = 0.0;  // force amplitude on Pdot [rad/s]
  double omega = 0.0;      // drive frequency [rad/s]
  double phase = 0.0;
  double t_on = 0.0;
  double t_off = 0.0;
};

struct MeanState {
  double x_m = 0.0, p_m = 0.0, x_s = 0.0, p_s = 0.0;
};

// Initial condition with given excitation numbers, amplitude in X.
MeanState excited_state(double n_m, double n_s);

struct MeanTrajectory {
  std::vector<double> t;
  std::vector<MeanState> lab;    // lab-frame quadrature expectation values
  std::vector<MeanState> demod;  // analytically demodulated (rotating-frame)
  std::vector<double> n_m;       // excitation numbers (X^2 + P^2)/2
  std::vector<double> n_s;
};

// Delay differential equations for the mean values,
//   Xdot_i = Omega_i P_i
//   Pdot_m = -Omega_m X_m - gamma_m P_m - f_ms X_s(t - tau) + drive
//   Pdot_s = -Omega_s X_s - gamma_s P_s + f_sm cos(phi) X_m(t - tau)
//            + self_coeff sin(phi) X_s(t - 2 tau) + drive
// integrated by RK4 with a linearly interpolated history buffer; the history
// before t = 0 is the prepared (constant) initial state. Damping acts on the
// momentum only, matching the coupled-mode fit model; this deviates from the
// symmetric Lindblad convention at O(gamma/Omega).
MeanTrajectory mean_value_trajectory(const CoupledModeParams& p, const MeanState& init,
                                     const std::optional<DrivePulse>& drive, double t_end,
                                     double dt = 0.0, int emit_every = 1);

}  // namespace spinloop
