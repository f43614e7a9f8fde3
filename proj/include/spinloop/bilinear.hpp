#pragma once

#include <Eigen/Dense>
#include <complex>

#include "spinloop/model.hpp"

namespace spinloop {

// Quadrature ordering is (X_m, P_m, X_s, P_s) throughout.

// Commutator matrix J_jk = -i [Q_j, Q_k]: antisymmetric, J^2 = -1.
Eigen::Matrix4d quadrature_commutator();

// Coefficient matrix of the master equation written as
//   rho_dot = -sum_jk A_jk [Q_j, Q_k rho] + h.c.
// It collects the free rotation, the thermal dissipators and the optical
// loop terms (diffusion, coherent and dissipative coupling, spin
// self-interaction). Propagation delay is dropped here: the adiabatic
// elimination of the light field is Markovian, delay effects live in the
// time-domain integrator of the langevin module.
struct CoefficientMatrix {
  Eigen::Matrix4cd a;
};

CoefficientMatrix assemble_A(const SystemModel& model);

// Drift/diffusion pair for first and second moments,
//   F = 2 J Im{A},   N = J Re{A + A^T} J^T,
// N symmetrized after evaluation; residual asymmetry above 1e-10 (relative)
// indicates a broken A and raises NumericsError.
struct DriftDiffusion {
  Eigen::Matrix4d drift;
  Eigen::Matrix4d diffusion;
};

DriftDiffusion drift_diffusion(const CoefficientMatrix& a);
DriftDiffusion drift_diffusion(const SystemModel& model);

// Lossless collective jump operator J = c_m X_m + c_s X_s with
// c_m = sqrt(2 Gamma_m), c_s = i (1 + e^{i phi}) sqrt(2 Gamma_s).
// Diagnostic only: lossy dynamics always flow through assemble_A, which has
// no single-jump-operator form.
struct JumpOperator {
  std::complex<double> c_m;
  std::complex<double> c_s;
};

JumpOperator jump_coefficients(const SystemModel& model);

}  // namespace spinloop
