#include "spinloop/langevin.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "spinloop/constants.hpp"
#include "spinloop/errors.hpp"

namespace spinloop {

using std::complex;

namespace {
const complex<double> kI(0.0, 1.0);
}

std::complex<double> bare_chi(double omega, double omega_i, double gamma_i) {
  return omega_i / (omega_i * omega_i - omega * omega - kI * omega * gamma_i);
}

CoupledModeParams CoupledModeParams::symmetric(double g, double gamma_m, double gamma_s,
                                               double omega_m, double omega_s, double tau,
                                               double phi) {
  CoupledModeParams p;
  p.omega_m = omega_m;
  p.omega_s = omega_s;
  p.gamma_m = gamma_m;
  p.gamma_s = gamma_s;
  p.f_ms = 2.0 * g;
  p.f_sm = 2.0 * g;
  p.self_coeff = 0.0;
  p.tau = tau;
  p.phi = phi;
  return p;
}

CoupledModeParams CoupledModeParams::from_model(const SystemModel& model) {
  model.validate();
  const auto& lp = model.loop;
  const double root = std::sqrt(model.spin.gamma_meas * model.membrane.gamma_meas);
  CoupledModeParams p;
  p.omega_m = model.membrane.omega;
  p.omega_s = model.spin.omega;
  p.gamma_m = model.membrane.gamma0;
  p.gamma_s = model.spin.gamma0;
  p.f_ms = 4.0 * lp.eta12 * lp.eta12 * root;
  p.f_sm = 4.0 * lp.eta12 * lp.eta23 * lp.eta13 * root;
  p.self_coeff = 4.0 * model.spin.gamma_meas * lp.eta13 * lp.eta13;
  p.tau = lp.tau;
  p.phi = lp.phi;
  return p;
}

EffectiveChi effective_chi(const CoupledModeParams& p, double omega) {
  const complex<double> chi_m0 = bare_chi(omega, p.omega_m, p.gamma_m);
  const complex<double> chi_s0 = bare_chi(omega, p.omega_s, p.gamma_s);
  const complex<double> feedback =
      4.0 * p.coupling_sq() * std::cos(p.phi) * std::exp(2.0 * kI * omega * p.tau);
  EffectiveChi eff;
  eff.chi_m = 1.0 / (1.0 / chi_m0 + feedback * chi_s0);
  eff.chi_s = 1.0 / (1.0 / chi_s0 + feedback * chi_m0);
  return eff;
}

EffectiveChi effective_chi(const SystemModel& model, double omega) {
  return effective_chi(CoupledModeParams::from_model(model), omega);
}

namespace {

// Complex eigenvalue pair lambda_± = Omega_± + i gamma_±/2 in the rotating
// frame at Obar = (Omega_m + |Omega_s|)/2. For the inverted spin the
// substitution b_s -> b_s^dag flips the sign of the coupling product.
std::array<complex<double>, 2> rwa_eigenvalues(const CoupledModeParams& p) {
  if (p.omega_m <= 0.0) throw ConfigError("normal_modes: membrane frequency must be > 0");
  if (p.omega_s == 0.0) throw ConfigError("normal_modes: spin frequency must be nonzero");
  const double sign = p.omega_s < 0.0 ? -1.0 : 1.0;
  const double abs_os = std::abs(p.omega_s);
  const double obar = 0.5 * (p.omega_m + abs_os);
  const double delta = abs_os - p.omega_m;
  const complex<double> root = std::sqrt(
      std::pow(0.5 * delta + kI * 0.25 * (p.gamma_m - p.gamma_s), 2) -
      sign * p.coupling_sq() * std::exp(2.0 * kI * obar * p.tau) * std::cos(p.phi));
  const complex<double> center = obar + kI * 0.25 * (p.gamma_m + p.gamma_s);
  return {center + root, center - root};
}

NormalModes from_eigenvalues(const std::array<complex<double>, 2>& lam) {
  NormalModes nm;
  nm.omega_plus = lam[0].real();
  nm.omega_minus = lam[1].real();
  nm.gamma_plus = 2.0 * lam[0].imag();
  nm.gamma_minus = 2.0 * lam[1].imag();
  nm.stable_plus = nm.gamma_plus > 0.0;
  nm.stable_minus = nm.gamma_minus > 0.0;
  return nm;
}

}  // namespace

NormalModes normal_modes(const CoupledModeParams& p) {
  return from_eigenvalues(rwa_eigenvalues(p));
}

NormalModes normal_modes(const SystemModel& model) {
  return normal_modes(CoupledModeParams::from_model(model));
}

std::vector<NormalModes> normal_mode_sweep(const CoupledModeParams& base,
                                           std::span<const double> omega_s_grid) {
  std::vector<NormalModes> out;
  out.reserve(omega_s_grid.size());
  std::array<complex<double>, 2> prev{};
  bool have_prev = false;
  for (double omega_s : omega_s_grid) {
    CoupledModeParams p = base;
    p.omega_s = omega_s;
    auto lam = rwa_eigenvalues(p);
    if (have_prev) {
      const double keep = std::abs(lam[0] - prev[0]) + std::abs(lam[1] - prev[1]);
      const double swap = std::abs(lam[0] - prev[1]) + std::abs(lam[1] - prev[0]);
      if (swap < keep) std::swap(lam[0], lam[1]);
    }
    prev = lam;
    have_prev = true;
    out.push_back(from_eigenvalues(lam));
  }
  return out;
}

std::array<complex<double>, 4> chi_eff_poles(const CoupledModeParams& p) {
  // (Omega_m^2 - w^2 - i w gamma_m)(Omega_s^2 - w^2 - i w gamma_s)
  //   + f_ms f_sm cos(phi) Omega_m Omega_s = 0, monic in w^4:
  const complex<double> c3 = kI * (p.gamma_m + p.gamma_s);
  const complex<double> c2 =
      -(p.omega_m * p.omega_m + p.omega_s * p.omega_s) - p.gamma_m * p.gamma_s;
  const complex<double> c1 =
      -kI * (p.gamma_s * p.omega_m * p.omega_m + p.gamma_m * p.omega_s * p.omega_s);
  const complex<double> c0 = p.omega_m * p.omega_m * p.omega_s * p.omega_s +
                             p.f_ms * p.f_sm * std::cos(p.phi) * p.omega_m * p.omega_s;
  Eigen::Matrix4cd companion = Eigen::Matrix4cd::Zero();
  companion(0, 3) = -c0;
  companion(1, 3) = -c1;
  companion(2, 3) = -c2;
  companion(3, 3) = -c3;
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(companion);
  std::array<complex<double>, 4> roots;
  for (int i = 0; i < 4; ++i) roots[i] = es.eigenvalues()(i);
  std::sort(roots.begin(), roots.end(),
            [](const complex<double>& a, const complex<double>& b) { return a.real() < b.real(); });
  return roots;
}

SpectrumRecord displacement_psd(const SystemModel& model, std::span<const double> omega_grid) {
  const CoupledModeParams p = CoupledModeParams::from_model(model);
  const DerivedRates rates = derive_rates(model);
  const double eta13_sq = model.loop.eta13 * model.loop.eta13;
  const double cphi = std::cos(p.phi);
  const double s_fm = (model.membrane.nbar + 0.5) + rates.gamma_ba_m / p.gamma_m;
  const double gamma_s_meas = model.spin.gamma_meas;

  SpectrumRecord rec;
  rec.omega.assign(omega_grid.begin(), omega_grid.end());
  rec.psd.resize(omega_grid.size());
  for (size_t i = 0; i < omega_grid.size(); ++i) {
    const double w = omega_grid[i];
    const EffectiveChi eff = effective_chi(p, w);
    const complex<double> chi_s0 = bare_chi(w, p.omega_s, p.gamma_s);
    const double interf = std::norm(1.0 + eta13_sq * cphi * std::exp(2.0 * kI * w * p.tau)) +
                          eta13_sq * (1.0 - eta13_sq) * cphi * cphi;
    const double s_fs = (model.spin.nbar + 0.5) + gamma_s_meas / p.gamma_s * interf;
    rec.psd[i] = std::norm(eff.chi_m) *
                 (2.0 * p.gamma_m * s_fm +
                  p.f_ms * p.f_ms * std::norm(chi_s0) * 2.0 * p.gamma_s * s_fs);
  }
  return rec;
}

SelfShift spin_self_shift(const SystemModel& model) {
  SelfShift s;
  const double gs = model.spin.gamma_meas;
  const double arg = 2.0 * model.spin.omega * model.loop.tau;
  s.delta_omega_s = 2.0 * gs * std::sin(model.loop.phi) * std::cos(arg);
  s.delta_gamma_s = 4.0 * gs * std::sin(model.loop.phi) * std::sin(arg);
  return s;
}

MeanState excited_state(double n_m, double n_s) {
  MeanState st;
  st.x_m = std::sqrt(2.0 * std::max(n_m, 0.0));
  st.x_s = std::sqrt(2.0 * std::max(n_s, 0.0));
  return st;
}

namespace {

struct History {
  double dt = 0.0;
  const std::vector<Eigen::Vector4d>* states = nullptr;
  Eigen::Vector4d initial;

  // linear interpolation on the uniform grid; before t = 0 the prepared state
  Eigen::Vector4d at(double tq, long known) const {
    if (tq <= 0.0) return initial;
    const double k = tq / dt;
    long k0 = static_cast<long>(k);
    if (k0 >= known) return (*states)[known];
    const double frac = k - static_cast<double>(k0);
    return (*states)[k0] * (1.0 - frac) + (*states)[k0 + 1] * frac;
  }
};

}  // namespace

MeanTrajectory mean_value_trajectory(const CoupledModeParams& p, const MeanState& init,
                                     const std::optional<DrivePulse>& drive, double t_end,
                                     double dt, int emit_every) {
  if (t_end < 0.0) throw ConfigError("mean_value_trajectory: t_end must be >= 0");
  if (dt <= 0.0) {
    const double omega_max = std::max(std::abs(p.omega_m), std::abs(p.omega_s));
    if (omega_max <= 0.0) throw ConfigError("mean_value_trajectory: zero frequencies");
    dt = 0.02 * constants::two_pi / omega_max;
    const double ratemax =
        std::max({p.gamma_m, p.gamma_s, 0.5 * p.f_ms, 0.5 * p.f_sm, std::abs(p.self_coeff)});
    if (ratemax > 0.0) dt = std::min(dt, 0.02 / ratemax);
    if (p.tau > 0.0) dt = std::min(dt, p.tau / 4.0);
  }
  if (p.tau > 0.0 && dt > p.tau / 4.0 * (1.0 + 1e-12))
    throw ConfigError("mean_value_trajectory: dt must not exceed tau/4");
  if (emit_every <= 0) emit_every = 1;

  const long n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  std::vector<Eigen::Vector4d> states(static_cast<size_t>(n_steps) + 1);
  states[0] << init.x_m, init.p_m, init.x_s, init.p_s;

  History hist{dt, &states, states[0]};
  const double cphi = std::cos(p.phi), sphi = std::sin(p.phi);

  auto drive_force = [&](double t) -> std::pair<double, double> {
    if (!drive || t < drive->t_on || t >= drive->t_off) return {0.0, 0.0};
    const double f = drive->amplitude * std::cos(drive->omega * t + drive->phase);
    return drive->target == ModeLabel::membrane ? std::pair{f, 0.0} : std::pair{0.0, f};
  };

  auto rhs = [&](const Eigen::Vector4d& y, double xs_tau, double xm_tau, double xs_2tau,
                 double t) -> Eigen::Vector4d {
    const auto [fm, fs] = drive_force(t);
    Eigen::Vector4d dy;
    dy(0) = p.omega_m * y(1);
    dy(1) = -p.omega_m * y(0) - p.gamma_m * y(1) - p.f_ms * xs_tau + fm;
    dy(2) = p.omega_s * y(3);
    dy(3) = -p.omega_s * y(2) - p.gamma_s * y(3) + p.f_sm * cphi * xm_tau +
            p.self_coeff * sphi * xs_2tau + fs;
    return dy;
  };

  MeanTrajectory traj;
  auto emit = [&](long i, double t) {
    const Eigen::Vector4d& y = states[i];
    MeanState lab{y(0), y(1), y(2), y(3)};
    // analytic demodulation against each mode's own free rotation
    const double cm = std::cos(p.omega_m * t), sm = std::sin(p.omega_m * t);
    const double cs = std::cos(p.omega_s * t), ss = std::sin(p.omega_s * t);
    MeanState dem;
    dem.x_m = cm * y(0) - sm * y(1);
    dem.p_m = sm * y(0) + cm * y(1);
    dem.x_s = cs * y(2) - ss * y(3);
    dem.p_s = ss * y(2) + cs * y(3);
    traj.t.push_back(t);
    traj.lab.push_back(lab);
    traj.demod.push_back(dem);
    traj.n_m.push_back(0.5 * (y(0) * y(0) + y(1) * y(1)));
    traj.n_s.push_back(0.5 * (y(2) * y(2) + y(3) * y(3)));
  };
  emit(0, 0.0);

  const bool instantaneous = p.tau <= 0.0;
  for (long i = 0; i < n_steps; ++i) {
    const double t = i * dt;
    const Eigen::Vector4d& y = states[i];
    Eigen::Vector4d k1, k2, k3, k4;
    if (instantaneous) {
      // no history: couple through the stage values to keep full RK4 order
      auto rhs0 = [&](const Eigen::Vector4d& ys, double ts) {
        return rhs(ys, ys(2), ys(0), ys(2), ts);
      };
      k1 = rhs0(y, t);
      k2 = rhs0(y + 0.5 * dt * k1, t + 0.5 * dt);
      k3 = rhs0(y + 0.5 * dt * k2, t + 0.5 * dt);
      k4 = rhs0(y + dt * k3, t + dt);
    } else {
      auto delayed = [&](double tq) -> std::array<double, 3> {
        const Eigen::Vector4d y1 = hist.at(tq - p.tau, i);
        const Eigen::Vector4d y2 = hist.at(tq - 2.0 * p.tau, i);
        return {y1(2), y1(0), y2(2)};
      };
      const auto d1 = delayed(t);
      const auto d2 = delayed(t + 0.5 * dt);
      const auto d4 = delayed(t + dt);
      k1 = rhs(y, d1[0], d1[1], d1[2], t);
      k2 = rhs(y + 0.5 * dt * k1, d2[0], d2[1], d2[2], t + 0.5 * dt);
      k3 = rhs(y + 0.5 * dt * k2, d2[0], d2[1], d2[2], t + 0.5 * dt);
      k4 = rhs(y + dt * k3, d4[0], d4[1], d4[2], t + dt);
    }
    states[i + 1] = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!states[i + 1].allFinite() || states[i + 1].cwiseAbs().maxCoeff() > 1e150)
      throw NumericsError("unstable integration");
    if ((i + 1) % emit_every == 0 || i + 1 == n_steps) emit(i + 1, (i + 1) * dt);
  }
  return traj;
}

}  // namespace spinloop
