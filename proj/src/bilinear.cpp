#include "spinloop/bilinear.hpp"

#include <cmath>

#include "spinloop/errors.hpp"

namespace spinloop {

using std::complex;
namespace {
const complex<double> kI(0.0, 1.0);

// Thermal dissipators gamma (nbar+1) D[b] + gamma nbar D[b^dag] of one mode in
// quadrature form. A Lindblad operator L = c . Q contributes A += (1/2) c* c^T;
// with b = (X + iP)/sqrt(2) the two terms sum to
//   (gamma/4) [[2 nbar + 1, i], [-i, 2 nbar + 1]]
// on that mode's block: symmetric damping at gamma/2 per quadrature and
// diffusion gamma (nbar + 1/2) per quadrature.
Eigen::Matrix2cd thermal_block(double gamma, double nbar) {
  Eigen::Matrix2cd blk;
  const double d = gamma * (2.0 * nbar + 1.0) / 4.0;
  blk << complex<double>(d, 0.0), kI * (gamma / 4.0),  //
      -kI * (gamma / 4.0), complex<double>(d, 0.0);
  return blk;
}

}  // namespace

Eigen::Matrix4d quadrature_commutator() {
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j(0, 1) = 1.0;
  j(1, 0) = -1.0;
  j(2, 3) = 1.0;
  j(3, 2) = -1.0;
  return j;
}

CoefficientMatrix assemble_A(const SystemModel& model) {
  model.validate();
  const auto& lp = model.loop;
  const double gamma_m = model.membrane.gamma_meas;
  const double gamma_s = model.spin.gamma_meas;
  const complex<double> phase = std::exp(-kI * lp.phi);

  Eigen::Matrix4cd a = Eigen::Matrix4cd::Zero();

  // Free Hamiltonian H0 = sum_i hbar Omega_i (X_i^2 + P_i^2)/2 enters as
  // A += (i/2) diag(Omega_m, Omega_m, Omega_s, Omega_s).
  a(0, 0) += kI * 0.5 * model.membrane.omega;
  a(1, 1) += kI * 0.5 * model.membrane.omega;
  a(2, 2) += kI * 0.5 * model.spin.omega;
  a(3, 3) += kI * 0.5 * model.spin.omega;

  a.block<2, 2>(0, 0) += thermal_block(model.membrane.gamma0, model.membrane.nbar);
  a.block<2, 2>(2, 2) += thermal_block(model.spin.gamma0, model.spin.nbar);

  // Optical loop, coefficients of the lossy cascaded master equation:
  //   membrane diffusion   eta12^2 Gamma_m [X_m, X_m rho]
  //   spin diffusion/self  Gamma_s (1 + eta13^2 + 2 eta13^2 e^{-i phi}) [X_s, X_s rho]
  //   interaction          2i sqrt(Gs Gm) (eta12^2 [X_m, X_s rho]
  //                                        - eta12 eta23 eta13 e^{-i phi} [X_s, X_m rho])
  const double root = std::sqrt(gamma_s * gamma_m);
  a(0, 0) += lp.eta12 * lp.eta12 * gamma_m;
  a(2, 2) += gamma_s * (1.0 + lp.eta13 * lp.eta13 + 2.0 * lp.eta13 * lp.eta13 * phase);
  a(0, 2) += 2.0 * kI * root * lp.eta12 * lp.eta12;
  a(2, 0) += -2.0 * kI * root * lp.eta12 * lp.eta23 * lp.eta13 * phase;

  return CoefficientMatrix{a};
}

DriftDiffusion drift_diffusion(const CoefficientMatrix& a) {
  if (!a.a.allFinite()) throw NumericsError("drift_diffusion: non-finite coefficient matrix");
  const Eigen::Matrix4d j = quadrature_commutator();
  DriftDiffusion fd;
  fd.drift = 2.0 * j * a.a.imag();
  const Eigen::Matrix4d sym_re = (a.a + a.a.transpose()).real();
  fd.diffusion = j * sym_re * j.transpose();

  const double scale = std::max(fd.diffusion.cwiseAbs().maxCoeff(), 1.0);
  const double asym = (fd.diffusion - fd.diffusion.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw NumericsError("drift_diffusion: diffusion matrix asymmetric beyond tolerance");
  fd.diffusion = 0.5 * (fd.diffusion + fd.diffusion.transpose()).eval();
  return fd;
}

DriftDiffusion drift_diffusion(const SystemModel& model) {
  return drift_diffusion(assemble_A(model));
}

JumpOperator jump_coefficients(const SystemModel& model) {
  model.validate();
  JumpOperator op;
  op.c_m = std::sqrt(2.0 * model.membrane.gamma_meas);
  op.c_s = kI * (1.0 + std::exp(kI * model.loop.phi)) * std::sqrt(2.0 * model.spin.gamma_meas);
  return op;
}

}  // namespace spinloop
