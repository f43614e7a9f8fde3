#include "spinloop/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "spinloop/constants.hpp"
#include "spinloop/errors.hpp"
#include "spinloop/rng.hpp"

namespace spinloop {

namespace {

constexpr int kMaxParams = 8;

double wrap_pi(double x) { return std::remainder(x, constants::two_pi); }

std::complex<double> chi_m_eff_at(const FitParams& p, const FitSettings& s, double omega) {
  const CoupledModeParams cm = CoupledModeParams::symmetric(p.g, p.gamma_m, p.gamma_s, s.omega_m,
                                                            p.omega_s, p.tau, s.phi);
  return effective_chi(cm, omega).chi_m;
}

bool offset_active(const FitSettings& s) {
  return s.fit_offset || s.kind == ResponseModelKind::psd_abs_chi_sq;
}

// Active-parameter indirection: maps the optimizer vector onto FitParams.
struct ParamMap {
  std::vector<double FitParams::*> members;
  std::vector<double> scales;

  static ParamMap build(const FitSettings& s, bool with_phase, const FitParams& init,
                        double data_scale) {
    ParamMap m;
    auto add = [&](double FitParams::* mem, double scale) {
      m.members.push_back(mem);
      m.scales.push_back(scale);
    };
    add(&FitParams::scale, std::max(std::abs(init.scale), data_scale));
    if (offset_active(s)) add(&FitParams::offset, std::max(std::abs(init.offset), data_scale));
    const double rate_scale = s.omega_m * 1e-3;
    add(&FitParams::g, rate_scale);
    add(&FitParams::gamma_m, rate_scale);
    add(&FitParams::gamma_s, rate_scale);
    add(&FitParams::omega_s, s.omega_m);
    add(&FitParams::tau, 1e-8);
    if (with_phase) add(&FitParams::phase_offset, 1.0);
    return m;
  }

  size_t size() const { return members.size(); }

  Eigen::VectorXd pack(const FitParams& p) const {
    Eigen::VectorXd x(size());
    for (size_t i = 0; i < size(); ++i) x(i) = p.*(members[i]) / scales[i];
    return x;
  }

  FitParams unpack(const Eigen::VectorXd& x, const FitParams& base) const {
    FitParams p = base;
    for (size_t i = 0; i < size(); ++i) p.*(members[i]) = x(i) * scales[i];
    return p;
  }
};

struct Objective {
  const ResponseDataset* data;
  const FitSettings* settings;
  const ParamMap* map;
  FitParams base;
  Eigen::VectorXd lo, hi;  // scaled bounds
  std::vector<double> weights;
  bool with_phase = false;
  double phase_scale = 0.0;  // puts phase residuals on the amplitude scale

  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }

  void residuals(const Eigen::VectorXd& x_raw, Eigen::VectorXd& r) const {
    const Eigen::VectorXd x = clamp(x_raw);
    const FitParams p = map->unpack(x, base);
    const size_t n = data->omega.size();
    const size_t total = with_phase ? 2 * n : n;
    if (r.size() != static_cast<long>(total)) r.resize(total);
    for (size_t i = 0; i < n; ++i) {
      const double w = std::sqrt(weights[i]);
      const std::complex<double> chi = chi_m_eff_at(p, *settings, data->omega[i]);
      double pred = settings->kind == ResponseModelKind::amplitude_abs_chi
                        ? p.scale * std::abs(chi)
                        : p.offset + p.scale * std::norm(chi);
      if (settings->kind == ResponseModelKind::amplitude_abs_chi && offset_active(*settings))
        pred += p.offset;
      r(i) = w * (pred - data->amplitude[i]);
      if (with_phase) {
        const double dphi = wrap_pi(std::arg(chi) + p.phase_offset - data->phase[i]);
        r(n + i) = w * phase_scale * dphi;
      }
    }
  }

  double sse(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r;
    residuals(x, r);
    double penalty = 0.0;
    for (long i = 0; i < x.size(); ++i) {
      const double below = lo(i) - x(i);
      const double above = x(i) - hi(i);
      if (below > 0) penalty += below * below;
      if (above > 0) penalty += above * above;
    }
    return r.squaredNorm() * (1.0 + penalty) + penalty;
  }
};

int nelder_mead(const Objective& obj, Eigen::VectorXd& x, int max_iter) {
  const long n = x.size();
  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> value;
  simplex.push_back(x);
  value.push_back(obj.sse(x));
  for (long i = 0; i < n; ++i) {
    Eigen::VectorXd v = x;
    v(i) += (v(i) >= 0 ? 1.0 : -1.0) * std::max(0.05 * std::abs(v(i)), 0.02);
    simplex.push_back(v);
    value.push_back(obj.sse(v));
  }

  auto order = [&]() {
    std::vector<size_t> idx(simplex.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return value[a] < value[b]; });
    std::vector<Eigen::VectorXd> s2(simplex.size());
    std::vector<double> v2(simplex.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      s2[i] = simplex[idx[i]];
      v2[i] = value[idx[i]];
    }
    simplex.swap(s2);
    value.swap(v2);
  };

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    order();
    if (value[0] <= 0.0) break;
    const double spread = std::abs(value.back() - value[0]) / std::max(value[0], 1e-300);
    double geo = 0.0;
    for (size_t i = 1; i < simplex.size(); ++i) geo += (simplex[i] - simplex[0]).norm();
    if (spread < 1e-14 && geo < 1e-12 * (1.0 + simplex[0].norm())) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex.back());
    const double fr = obj.sse(reflected);
    if (fr < value[0]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex.back());
      const double fe = obj.sse(expanded);
      if (fe < fr) {
        simplex.back() = expanded;
        value.back() = fe;
      } else {
        simplex.back() = reflected;
        value.back() = fr;
      }
    } else if (fr < value[value.size() - 2]) {
      simplex.back() = reflected;
      value.back() = fr;
    } else {
      const Eigen::VectorXd contracted = centroid + 0.5 * (simplex.back() - centroid);
      const double fc = obj.sse(contracted);
      if (fc < value.back()) {
        simplex.back() = contracted;
        value.back() = fc;
      } else {
        for (size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          value[i] = obj.sse(simplex[i]);
        }
      }
    }
  }
  order();
  x = simplex[0];
  return iter;
}

struct LmOutcome {
  double sse = 0.0;
  double grad_inf = 0.0;
  double grad_cos = 0.0;  // max cosine between the residual and a model column
  Eigen::MatrixXd jtj;
  int iterations = 0;
};

LmOutcome levenberg_marquardt(const Objective& obj, Eigen::VectorXd& x, int max_iter) {
  const long n = x.size();
  Eigen::VectorXd r, r_trial, r_h;
  obj.residuals(x, r);
  double sse = r.squaredNorm();
  Eigen::MatrixXd jac(r.size(), n);
  double lambda = 1e-3;
  LmOutcome out;

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    for (long j = 0; j < n; ++j) {
      const double h = std::max(std::abs(x(j)), 0.1) * 1e-6;
      Eigen::VectorXd xh = x;
      xh(j) += h;
      obj.residuals(xh, r_h);
      jac.col(j) = (r_h - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    out.jtj = jtj;
    out.grad_inf = grad.cwiseAbs().maxCoeff();
    if (out.grad_inf <= 1e-12 * std::max(1.0, sse)) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (long d = 0; d < n; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      const Eigen::VectorXd x_trial = obj.clamp(x + step);
      obj.residuals(x_trial, r_trial);
      const double sse_trial = r_trial.squaredNorm();
      if (sse_trial < sse) {
        const double rel = (sse - sse_trial) / std::max(sse, 1e-300);
        x = x_trial;
        r = r_trial;
        sse = sse_trial;
        lambda = std::max(lambda / 5.0, 1e-12);
        accepted = true;
        if (rel < 1e-14) iter = max_iter - 1;  // converged in value
        break;
      }
      lambda *= 5.0;
      if (lambda > 1e12) break;
    }
    if (!accepted) break;
  }
  out.sse = sse;
  out.iterations = iter;
  // final gradient via central differences: the forward-difference bias of
  // the working Jacobian is too coarse for a convergence verdict
  Eigen::VectorXd r_lo;
  for (long j = 0; j < n; ++j) {
    const double h = std::max(std::abs(x(j)), 0.1) * 1e-6;
    Eigen::VectorXd xh = x;
    xh(j) += h;
    obj.residuals(xh, r_h);
    xh(j) = x(j) - h;
    obj.residuals(xh, r_lo);
    jac.col(j) = (r_h - r_lo) / (2.0 * h);
  }
  out.jtj = jac.transpose() * jac;
  const Eigen::VectorXd grad = jac.transpose() * r;
  const double r_norm = r.norm();
  out.grad_inf = 0.0;
  out.grad_cos = 0.0;
  for (long j = 0; j < n; ++j) {
    // projected gradient: directions pinned at a bound with an outward pull
    // cannot be improved and do not count against convergence
    const double eps = 1e-12 * (1.0 + std::abs(x(j)));
    const bool at_lo = x(j) <= obj.lo(j) + eps;
    const bool at_hi = x(j) >= obj.hi(j) - eps;
    if ((at_lo && grad(j) > 0.0) || (at_hi && grad(j) < 0.0)) continue;
    out.grad_inf = std::max(out.grad_inf, std::abs(grad(j)));
    const double col = jac.col(j).norm();
    if (col > 0.0 && r_norm > 0.0)
      out.grad_cos = std::max(out.grad_cos, std::abs(grad(j)) / (col * r_norm));
  }
  return out;
}

}  // namespace

void ResponseDataset::validate() const {
  if (omega.size() < 2) throw ConfigError("response dataset: needs at least two points");
  if (omega.size() != amplitude.size())
    throw ConfigError("response dataset: omega and amplitude sizes differ");
  if (!phase.empty() && phase.size() != omega.size())
    throw ConfigError("response dataset: phase size differs from omega");
  if (!weights.empty() && weights.size() != omega.size())
    throw ConfigError("response dataset: weights size differs from omega");
  for (size_t i = 1; i < omega.size(); ++i)
    if (omega[i] <= omega[i - 1])
      throw ConfigError("response dataset: omega must be strictly increasing");
  for (double a : amplitude)
    if (a < 0.0) throw ConfigError("response dataset: amplitudes must be >= 0");
}

FitBounds FitSettings::default_bounds(const ResponseDataset& data) const {
  FitBounds b;
  const double amax = data.amplitude.empty()
                          ? 1.0
                          : *std::max_element(data.amplitude.begin(), data.amplitude.end());
  b.lo.scale = 0.0;
  b.hi.scale = 1e12 * std::max(amax, 1e-300);
  b.lo.offset = -10.0 * amax;
  b.hi.offset = 10.0 * amax;
  b.lo.g = 1e-9 * omega_m;
  b.hi.g = 0.1 * omega_m;
  b.lo.gamma_m = 1e-9 * omega_m;
  b.hi.gamma_m = 0.1 * omega_m;
  b.lo.gamma_s = 1e-9 * omega_m;
  b.hi.gamma_s = 0.1 * omega_m;
  b.lo.omega_s = 0.9 * omega_m;
  b.hi.omega_s = 1.1 * omega_m;
  b.lo.tau = 0.0;
  b.hi.tau = 100e-9;
  b.lo.phase_offset = -constants::two_pi;
  b.hi.phase_offset = constants::two_pi;
  return b;
}

double response_amplitude(const FitParams& p, const FitSettings& settings, double omega) {
  const std::complex<double> chi = chi_m_eff_at(p, settings, omega);
  if (settings.kind == ResponseModelKind::amplitude_abs_chi) {
    double v = p.scale * std::abs(chi);
    if (offset_active(settings)) v += p.offset;
    return v;
  }
  return p.offset + p.scale * std::norm(chi);
}

double response_phase(const FitParams& p, const FitSettings& settings, double omega) {
  return std::arg(chi_m_eff_at(p, settings, omega)) + p.phase_offset;
}

FitResult fit_response(const ResponseDataset& data, const FitSettings& settings,
                       const FitParams& initial) {
  return fit_response(data, settings, initial, settings.default_bounds(data));
}

FitResult fit_response(const ResponseDataset& data, const FitSettings& settings,
                       const FitParams& initial, const FitBounds& bounds) {
  data.validate();
  if (settings.omega_m <= 0.0) throw ConfigError("fit: omega_m must be > 0");

  const double amax = *std::max_element(data.amplitude.begin(), data.amplitude.end());
  const double amin = *std::min_element(data.amplitude.begin(), data.amplitude.end());
  if (amax <= 0.0 || amax - amin <= 1e-12 * amax)
    throw FitError("fit: degenerate response data (flat)");

  const bool with_phase = settings.use_phase && !data.phase.empty();
  FitParams init = initial;

  // least-squares auto-init of the linear scale when left at zero
  if (init.scale == 0.0) {
    double num = 0.0, den = 0.0;
    FitParams shape = init;
    shape.scale = 1.0;
    shape.offset = 0.0;
    for (size_t i = 0; i < data.omega.size(); ++i) {
      const double m = response_amplitude(shape, settings, data.omega[i]);
      num += m * data.amplitude[i];
      den += m * m;
    }
    init.scale = den > 0.0 ? num / den : amax;
  }

  const ParamMap map = ParamMap::build(settings, with_phase, init, amax);
  const size_t n_par = map.size();
  const size_t n_res = data.omega.size() * (with_phase ? 2 : 1);
  if (data.omega.size() < 3 * n_par)
    throw ConfigError("fit: need at least 3x more data points than free parameters");

  Objective obj;
  obj.data = &data;
  obj.settings = &settings;
  obj.map = &map;
  obj.base = init;
  obj.with_phase = with_phase;
  obj.lo = map.pack(bounds.lo);
  obj.hi = map.pack(bounds.hi);
  for (long i = 0; i < obj.lo.size(); ++i)
    if (obj.lo(i) > obj.hi(i)) std::swap(obj.lo(i), obj.hi(i));

  obj.weights.resize(data.omega.size());
  if (!data.weights.empty()) {
    obj.weights = data.weights;
  } else if (settings.weighting == FitWeighting::inverse_amplitude_sq) {
    for (size_t i = 0; i < obj.weights.size(); ++i) {
      const double floor = 1e-3 * amax;
      obj.weights[i] = 1.0 / std::pow(std::max(data.amplitude[i], floor), 2);
    }
  } else {
    std::fill(obj.weights.begin(), obj.weights.end(), 1.0);
  }
  double amp_sq = 0.0;
  for (double a : data.amplitude) amp_sq += a * a;
  obj.phase_scale = std::sqrt(amp_sq / static_cast<double>(data.amplitude.size()));

  Eigen::VectorXd x = map.pack(init);
  for (long i = 0; i < x.size(); ++i)
    if (x(i) < obj.lo(i) - 1e-12 || x(i) > obj.hi(i) + 1e-12)
      throw ConfigError("fit: initial guess lies outside the bounds");

  const double sse_initial = obj.sse(x);
  Eigen::VectorXd x_best = x;
  double sse_best = sse_initial;

  const int nm_iters = nelder_mead(obj, x, settings.max_simplex_iterations);
  if (obj.sse(x) < sse_best) {
    x_best = x;
    sse_best = obj.sse(x);
  }

  Eigen::VectorXd x_lm = obj.clamp(x_best);
  const LmOutcome lm = levenberg_marquardt(obj, x_lm, settings.max_lm_iterations);
  if (lm.sse <= sse_best) {
    x_best = x_lm;
    sse_best = lm.sse;
  }

  FitResult result;
  result.params = map.unpack(obj.clamp(x_best), init);
  result.params.phase_offset = wrap_pi(result.params.phase_offset);
  result.residual_sse = sse_best;
  result.model_kind = settings.kind;
  result.iterations = nm_iters + lm.iterations;

  // converged when the residual is numerically orthogonal to every model
  // direction (scale-free MINPACK-style gtol), or the fit is exact
  const double data_floor = 1e-20 * amp_sq;
  result.converged = sse_best <= data_floor || lm.grad_cos <= 1e-5;

  {
    const CoupledModeParams cm = CoupledModeParams::symmetric(
        result.params.g, result.params.gamma_m, result.params.gamma_s, settings.omega_m,
        result.params.omega_s, result.params.tau, settings.phi);
    const NormalModes nm = normal_modes(cm);
    result.implies_instability = !(nm.stable_plus && nm.stable_minus);
  }

  // curvature-based uncertainties
  const long dof = std::max<long>(static_cast<long>(n_res) - static_cast<long>(n_par), 1);
  const double s2 = sse_best / static_cast<double>(dof);
  Eigen::MatrixXd cov =
      s2 * lm.jtj.completeOrthogonalDecomposition().pseudoInverse();
  FitParams sig;
  for (size_t i = 0; i < n_par; ++i) {
    const double v = cov(i, i) > 0.0 ? std::sqrt(cov(i, i)) * map.scales[i] : 0.0;
    sig.*(map.members[i]) = v;
  }
  result.sigmas = sig;
  return result;
}

ResponseDataset generate_synthetic(const FitParams& params, const FitSettings& settings,
                                   std::span<const double> omega_grid, const NoiseModel& noise,
                                   std::uint64_t seed) {
  ResponseDataset data;
  data.omega.assign(omega_grid.begin(), omega_grid.end());
  data.amplitude.resize(omega_grid.size());
  const bool with_phase = settings.use_phase;
  if (with_phase) data.phase.resize(omega_grid.size());
  SplitMix64 rng(seed);
  for (size_t i = 0; i < omega_grid.size(); ++i) {
    const double a = response_amplitude(params, settings, omega_grid[i]);
    const double z_mult = rng.next_normal();
    const double z_add = rng.next_normal();
    const double z_phase = rng.next_normal();
    data.amplitude[i] =
        std::max(a * (1.0 + noise.sigma_mult * z_mult) + noise.sigma_add * z_add, 0.0);
    if (with_phase)
      data.phase[i] = response_phase(params, settings, omega_grid[i]) + noise.sigma_phase * z_phase;
  }
  return data;
}

DelayConsistency delay_consistency_check(double tau_fit, double kappa, double path_length,
                                         double threshold) {
  if (kappa <= 0.0) throw ConfigError("delay_consistency_check: kappa must be > 0");
  DelayConsistency d;
  d.tau_fit = tau_fit;
  d.tau_calc = 2.0 / kappa + path_length / constants::speed_of_light;
  d.ratio = d.tau_calc > 0.0 ? tau_fit / d.tau_calc
                             : std::numeric_limits<double>::infinity();
  const double r = std::max(d.ratio, d.ratio > 0.0 ? 1.0 / d.ratio : 0.0);
  d.consistent = d.tau_calc == 0.0 ? tau_fit == 0.0 : (d.ratio > 0.0 && r <= threshold);
  return d;
}

}  // namespace spinloop
