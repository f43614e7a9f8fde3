#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spinloop/bilinear.hpp"
#include "spinloop/model.hpp"
#include "spinloop/rng.hpp"

namespace spinloop {

// Symmetrized covariance Sigma_jk = <Q_j Q_k + Q_k Q_j>/2 - <Q_j><Q_k> over
// (X_m, P_m, X_s, P_s), plus the mean vector and a timestamp.
struct CovarianceState {
  Eigen::Matrix4d sigma = Eigen::Matrix4d::Zero();
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  double t = 0.0;
};

// Uncorrelated thermal state: variance nbar + 1/2 per quadrature.
CovarianceState thermal_state(double nbar_m, double nbar_s);

// Minimum eigenvalue of Sigma + i J/2; physical states satisfy >= 0
// (Heisenberg bound), checked at 1e-9 tolerance by callers.
double heisenberg_defect(const CovarianceState& state);

struct IntegrationOptions {
  double dt = 0.0;     // 0 -> default_time_step
  int emit_every = 1;  // keep every n-th step (t = 0 always kept)
};

// Step size 0.02 x 2pi / ||F||_inf, which resolves both the fastest rotation
// and every rate present in the drift.
double default_time_step(const DriftDiffusion& fd);

// Classical fixed-step RK4 on the time-dependent Lyapunov equation
//   Sigma_dot = F Sigma + Sigma F^T + N,   m_dot = F m.
// Emitted states are re-symmetrized. Divergence (non-finite entries or trace
// beyond ~exp(30) growth head-room) aborts with NumericsError("unstable
// integration"), the expected outcome for parametric gain run too long.
std::vector<CovarianceState> integrate(const DriftDiffusion& fd, const CovarianceState& init,
                                       double t_end, const IntegrationOptions& opts = {});

// Steady state of F Sigma + Sigma F^T + N = 0 via the 16-dimensional
// Kronecker-vectorized linear solve. Requires F strictly Hurwitz; marginally
// stable drifts (max Re lambda > -1e-6 x ratemax) are rejected to avoid
// ill-conditioned solves. The error message carries max Re lambda.
CovarianceState steady_state(const DriftDiffusion& fd);

// Rotating-frame (demodulated) state: each mode's quadratures are rotated
// against its own free precession, X~ + iP~ = e^{i omega_i t} (X + iP), so a
// freely rotating mode is stationary. Signed frequencies handle the
// negative-mass spin (opposite demodulation sense).
CovarianceState demodulate(const CovarianceState& lab, double omega_m, double omega_s);

struct CollectiveVariances {
  double var_x_plus = 0.0;
  double var_x_minus = 0.0;
  double var_p_plus = 0.0;
  double var_p_minus = 0.0;
  double xi = 0.0;  // var_x_minus + var_p_plus
};

// Read-out model applied to a demodulated state: rotates the spin quadratures
// by the detector phase alpha (sense fixed by the sign of omega_s), adds the
// detector occupancy to the spin diagonal, then forms the collective
// X/P (s +/- m)/sqrt(2) variances and the non-separability parameter xi.
// Detector noise enters at read-out only; it never feeds the dynamics.
CollectiveVariances collective_variances(const CovarianceState& demod, double alpha, double n_det,
                                         int spin_sign);

// Full pipeline from a lab-frame sample: demodulate at the model frequencies,
// then read out with the model's detector settings.
CollectiveVariances collective_variances(const CovarianceState& lab, const SystemModel& model);

// Reduced rotating-wave dynamics of the collective X quadratures in the
// parametric-gain configuration (phi = pi, omega_s = -omega_m):
//   d<X+^2>/dt  = +(4g - gs0 - gm0)/2 <X+^2> + (gs0 - gm0)/2 <X+X-> + (gst + gmt)/2
//   d<X-^2>/dt  = -(4g + gs0 + gm0)/2 <X-^2> + (gs0 - gm0)/2 <X+X-> + (gst + gmt)/2
//   d<X+X->/dt  = -(gs0 + gm0)/2 <X+X-> + (gs0 - gm0)/4 (<X+^2> + <X-^2>) - (gst - gmt)/2
// with <P+-^2> = <X-+^2>. The cross covariance uses the sign convention in
// which <X+X->(0) = (var_m - var_s)/2 for an uncorrelated initial state.
struct RwaCollectiveTrajectory {
  std::vector<double> t;
  std::vector<double> x_plus_sq;
  std::vector<double> x_minus_sq;
  std::vector<double> x_cross;
  bool growth_flagged = false;  // <X+^2> unstable; <X-^2> remains meaningful
};

RwaCollectiveTrajectory rwa_collective_odes(const SystemModel& model, double t_end,
                                            double dt = 0.0, int emit_every = 1);

// Steady-state squeezed variance (gs0 - gm0 << 4g limit):
//   <X-^2> ~ (gamma_s_tot + gamma_m_tot) / (4g + gamma_s0 + gamma_m0)
double x_minus_sq_steady(const SystemModel& model);

// Gaussian sampling plumbing (Cholesky draw); no role in the deterministic
// pipelines.
Eigen::Vector4d sample_gaussian(const CovarianceState& state, SplitMix64& rng);

}  // namespace spinloop
