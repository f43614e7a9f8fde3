#include "spinloop/lyapunov.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "spinloop/constants.hpp"
#include "spinloop/errors.hpp"

namespace spinloop {

namespace {

Eigen::Matrix2d rotation2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Eigen::Matrix4d lyapunov_rhs(const Eigen::Matrix4d& f, const Eigen::Matrix4d& sigma,
                             const Eigen::Matrix4d& n) {
  return f * sigma + sigma * f.transpose() + n;
}

}  // namespace

CovarianceState thermal_state(double nbar_m, double nbar_s) {
  CovarianceState st;
  st.sigma = Eigen::Vector4d(nbar_m + 0.5, nbar_m + 0.5, nbar_s + 0.5, nbar_s + 0.5).asDiagonal();
  return st;
}

double heisenberg_defect(const CovarianceState& state) {
  Eigen::Matrix4cd h = state.sigma.cast<std::complex<double>>();
  h += std::complex<double>(0.0, 0.5) * quadrature_commutator().cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double default_time_step(const DriftDiffusion& fd) {
  const double norm = fd.drift.cwiseAbs().rowwise().sum().maxCoeff();
  if (norm <= 0.0) throw NumericsError("default_time_step: drift matrix is zero");
  return 0.02 * constants::two_pi / norm;
}

std::vector<CovarianceState> integrate(const DriftDiffusion& fd, const CovarianceState& init,
                                       double t_end, const IntegrationOptions& opts) {
  if (t_end < 0.0) throw ConfigError("integrate: t_end must be >= 0");
  const double dt = opts.dt > 0.0 ? opts.dt : default_time_step(fd);
  const int emit_every = opts.emit_every > 0 ? opts.emit_every : 1;
  const long n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));

  const Eigen::Matrix4d& f = fd.drift;
  const Eigen::Matrix4d& n = fd.diffusion;
  // trace(Sigma) beyond this marks runaway parametric gain
  const double blow_up = std::max(init.sigma.trace(), 1.0) * 1e26;

  std::vector<CovarianceState> out;
  out.reserve(static_cast<size_t>(n_steps / emit_every) + 2);

  Eigen::Matrix4d sigma = 0.5 * (init.sigma + init.sigma.transpose());
  Eigen::Vector4d mean = init.mean;
  double t = init.t;

  auto emit = [&](void) {
    CovarianceState st;
    st.sigma = 0.5 * (sigma + sigma.transpose());
    st.mean = mean;
    st.t = t;
    out.push_back(st);
  };
  emit();

  for (long i = 0; i < n_steps; ++i) {
    const Eigen::Matrix4d k1 = lyapunov_rhs(f, sigma, n);
    const Eigen::Matrix4d k2 = lyapunov_rhs(f, sigma + 0.5 * dt * k1, n);
    const Eigen::Matrix4d k3 = lyapunov_rhs(f, sigma + 0.5 * dt * k2, n);
    const Eigen::Matrix4d k4 = lyapunov_rhs(f, sigma + dt * k3, n);
    sigma += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const Eigen::Vector4d m1 = f * mean;
    const Eigen::Vector4d m2 = f * (mean + 0.5 * dt * m1);
    const Eigen::Vector4d m3 = f * (mean + 0.5 * dt * m2);
    const Eigen::Vector4d m4 = f * (mean + dt * m3);
    mean += dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);

    t = init.t + (i + 1) * dt;
    if (!sigma.allFinite() || !mean.allFinite() || sigma.trace() > blow_up)
      throw NumericsError("unstable integration");
    if ((i + 1) % emit_every == 0 || i + 1 == n_steps) emit();
  }
  return out;
}

CovarianceState steady_state(const DriftDiffusion& fd) {
  const Eigen::Matrix4d& f = fd.drift;
  Eigen::EigenSolver<Eigen::Matrix4d> es(f);
  const double max_re = es.eigenvalues().real().maxCoeff();
  const double ratemax = std::max(f.cwiseAbs().maxCoeff(), 1e-300);
  if (max_re > -1e-6 * ratemax) {
    std::ostringstream msg;
    msg << "no steady state (unstable configuration): max Re eigenvalue = " << max_re
        << " rad/s";
    throw NumericsError(msg.str());
  }

  // vec(F S) = (I (x) F) vec(S), vec(S F^T) = (F (x) I) vec(S), column-major
  Eigen::Matrix<double, 16, 16> k = Eigen::Matrix<double, 16, 16>::Zero();
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      k.block<4, 4>(4 * i, 4 * j) += id(i, j) * f;  // I (x) F
      k.block<4, 4>(4 * i, 4 * j) += f(i, j) * id;  // F (x) I
    }
  const Eigen::Map<const Eigen::Matrix<double, 16, 1>> n_vec(fd.diffusion.data());
  Eigen::Matrix<double, 16, 1> s_vec = k.partialPivLu().solve(-n_vec);

  CovarianceState st;
  st.sigma = Eigen::Map<Eigen::Matrix4d>(s_vec.data());
  st.sigma = 0.5 * (st.sigma + st.sigma.transpose()).eval();
  return st;
}

CovarianceState demodulate(const CovarianceState& lab, double omega_m, double omega_s) {
  Eigen::Matrix4d rot = Eigen::Matrix4d::Zero();
  rot.block<2, 2>(0, 0) = rotation2(omega_m * lab.t);
  rot.block<2, 2>(2, 2) = rotation2(omega_s * lab.t);
  CovarianceState out;
  out.sigma = rot * lab.sigma * rot.transpose();
  out.mean = rot * lab.mean;
  out.t = lab.t;
  return out;
}

CollectiveVariances collective_variances(const CovarianceState& demod, double alpha, double n_det,
                                         int spin_sign) {
  if (spin_sign != 1 && spin_sign != -1)
    throw ConfigError("collective_variances: spin sign must be +1 or -1");
  Eigen::Matrix4d rot = Eigen::Matrix4d::Identity();
  rot.block<2, 2>(2, 2) = rotation2(-spin_sign * alpha);
  Eigen::Matrix4d s = rot * demod.sigma * rot.transpose();
  s(2, 2) += n_det;
  s(3, 3) += n_det;

  CollectiveVariances v;
  v.var_x_plus = 0.5 * (s(2, 2) + s(0, 0) + 2.0 * s(2, 0));
  v.var_x_minus = 0.5 * (s(2, 2) + s(0, 0) - 2.0 * s(2, 0));
  v.var_p_plus = 0.5 * (s(3, 3) + s(1, 1) + 2.0 * s(3, 1));
  v.var_p_minus = 0.5 * (s(3, 3) + s(1, 1) - 2.0 * s(3, 1));
  v.xi = v.var_x_minus + v.var_p_plus;
  return v;
}

CollectiveVariances collective_variances(const CovarianceState& lab, const SystemModel& model) {
  const CovarianceState demod = demodulate(lab, model.membrane.omega, model.spin.omega);
  const int sign = model.spin.omega < 0.0 ? -1 : 1;
  return collective_variances(demod, model.detector_phase_alpha, model.detector_noise_spin, sign);
}

RwaCollectiveTrajectory rwa_collective_odes(const SystemModel& model, double t_end, double dt,
                                            int emit_every) {
  if (std::cos(model.loop.phi) > -1.0 + 1e-9)
    throw ConfigError("rwa_collective_odes: requires phi = pi");
  if (model.spin.omega >= 0.0)
    throw ConfigError("rwa_collective_odes: requires a negative-mass spin (omega_s < 0)");

  const DerivedRates r = derive_rates(model);
  const double g = r.g;
  const double gm0 = model.membrane.gamma0, gs0 = model.spin.gamma0;
  const double gmt = r.gamma_tot_m, gst = r.gamma_tot_s;

  if (dt <= 0.0) {
    const double ratemax = std::max({4.0 * g + gs0 + gm0, gst + gmt, 1e-300});
    dt = 0.02 / ratemax;
  }
  if (emit_every <= 0) emit_every = 1;

  double xp = 0.5 * (model.membrane.nbar + model.spin.nbar + 1.0);
  double xm = xp;
  double xc = 0.5 * (model.membrane.nbar - model.spin.nbar);

  auto rhs = [&](double a, double b, double c, double* da, double* db, double* dc) {
    *da = 0.5 * (4.0 * g - gs0 - gm0) * a + 0.5 * (gs0 - gm0) * c + 0.5 * (gst + gmt);
    *db = -0.5 * (4.0 * g + gs0 + gm0) * b + 0.5 * (gs0 - gm0) * c + 0.5 * (gst + gmt);
    *dc = -0.5 * (gs0 + gm0) * c + 0.25 * (gs0 - gm0) * (a + b) - 0.5 * (gst - gmt);
  };

  const long n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  RwaCollectiveTrajectory traj;
  traj.t.push_back(0.0);
  traj.x_plus_sq.push_back(xp);
  traj.x_minus_sq.push_back(xm);
  traj.x_cross.push_back(xc);

  double k1a, k1b, k1c, k2a, k2b, k2c, k3a, k3b, k3c, k4a, k4b, k4c;
  for (long i = 0; i < n_steps; ++i) {
    rhs(xp, xm, xc, &k1a, &k1b, &k1c);
    rhs(xp + 0.5 * dt * k1a, xm + 0.5 * dt * k1b, xc + 0.5 * dt * k1c, &k2a, &k2b, &k2c);
    rhs(xp + 0.5 * dt * k2a, xm + 0.5 * dt * k2b, xc + 0.5 * dt * k2c, &k3a, &k3b, &k3c);
    rhs(xp + dt * k3a, xm + dt * k3b, xc + dt * k3c, &k4a, &k4b, &k4c);
    xp += dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    xm += dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    xc += dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
    if (!std::isfinite(xp) || !std::isfinite(xm) || !std::isfinite(xc))
      throw NumericsError("unstable integration");
    if ((i + 1) % emit_every == 0 || i + 1 == n_steps) {
      traj.t.push_back((i + 1) * dt);
      traj.x_plus_sq.push_back(xp);
      traj.x_minus_sq.push_back(xm);
      traj.x_cross.push_back(xc);
    }
  }
  traj.growth_flagged = 4.0 * g > gs0 + gm0;
  return traj;
}

double x_minus_sq_steady(const SystemModel& model) {
  const DerivedRates r = derive_rates(model);
  return (r.gamma_tot_s + r.gamma_tot_m) /
         (4.0 * r.g + model.spin.gamma0 + model.membrane.gamma0);
}

Eigen::Vector4d sample_gaussian(const CovarianceState& state, SplitMix64& rng) {
  // small jitter keeps the factorization alive for semidefinite states
  Eigen::Matrix4d s = state.sigma;
  const double jitter = 1e-12 * std::max(s.trace(), 1.0);
  s += jitter * Eigen::Matrix4d::Identity();
  Eigen::LLT<Eigen::Matrix4d> llt(s);
  if (llt.info() != Eigen::Success)
    throw NumericsError("sample_gaussian: covariance is not positive semidefinite");
  Eigen::Vector4d z;
  for (int i = 0; i < 4; ++i) z(i) = rng.next_normal();
  return state.mean + llt.matrixL() * z;
}

}  // namespace spinloop
