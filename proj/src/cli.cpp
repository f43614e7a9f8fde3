#include "spinloop/cli.hpp"

#include <CLI11.hpp>
#include <cinttypes>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spinloop/config.hpp"
#include "spinloop/constants.hpp"
#include "spinloop/csvio.hpp"
#include "spinloop/errors.hpp"
#include "spinloop/fit.hpp"
#include "spinloop/grid.hpp"
#include "spinloop/langevin.hpp"
#include "spinloop/lyapunov.hpp"
#include "spinloop/optics.hpp"
#include "spinloop/sweep.hpp"
#include "spinloop/version.hpp"

namespace spinloop {

namespace {

namespace fs = std::filesystem;
using constants::two_pi;

double to_hz(double angular) { return angular / two_pi; }

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string data_path;
};

std::ofstream open_output(const CliOptions& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  const fs::path path = fs::path(opt.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path.string());
  return out;
}

std::string hex_hash(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

FitBounds bounds_from_config(const FitSpec& fit_spec, const FitSettings& settings,
                           const ResponseDataset& data) {
  FitBounds b = settings.default_bounds(data);
  if (fit_spec.g_min) b.lo.g = *fit_spec.g_min;
  if (fit_spec.g_max) b.hi.g = *fit_spec.g_max;
  if (fit_spec.gamma_min) b.lo.gamma_m = b.lo.gamma_s = *fit_spec.gamma_min;
  if (fit_spec.gamma_max) b.hi.gamma_m = b.hi.gamma_s = *fit_spec.gamma_max;
  if (fit_spec.omega_s_min) b.lo.omega_s = *fit_spec.omega_s_min;
  if (fit_spec.omega_s_max) b.hi.omega_s = *fit_spec.omega_s_max;
  if (fit_spec.tau_min) b.lo.tau = *fit_spec.tau_min;
  if (fit_spec.tau_max) b.hi.tau = *fit_spec.tau_max;
  return b;
}

// ---------------------------------------------------------------------------
// derive-rates

int cmd_derive_rates(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "spin", "loop"});
  const DerivedRates rates = derive_rates(cfg.model);
  const double eta_sq = cfg.model.loop.eta12 * cfg.model.loop.eta12;
  const CooperativityBound bound = cooperativity_bound(eta_sq);
  const DoubleLoopCooperativity dl = double_loop_cooperativity(eta_sq);
  const std::string report = format_rates_report(rates, bound, dl, config_hash(cfg));
  std::cout << report;
  auto out = open_output(opt, "derived_rates.txt");
  out << report;
  return 0;
}

// ---------------------------------------------------------------------------
// normal-modes

int cmd_normal_modes(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "spin", "loop", "sweep"});
  const auto grid = linspace(cfg.sweep.spin_start, cfg.sweep.spin_stop, cfg.sweep.spin_points);
  const CoupledModeParams base = CoupledModeParams::from_model(cfg.model);
  const auto modes = normal_mode_sweep(base, grid);

  auto out = open_output(opt, "normal_modes.csv");
  CsvWriter csv(out);
  csv.standard_header(config_hash(cfg));
  csv.columns({{"delta", "Hz"},
               {"omega_s", "Hz"},
               {"omega_plus", "Hz"},
               {"omega_minus", "Hz"},
               {"gamma_plus", "Hz"},
               {"gamma_minus", "Hz"},
               {"stable_plus", "1"},
               {"stable_minus", "1"}});
  for (size_t i = 0; i < grid.size(); ++i) {
    const NormalModes& nm = modes[i];
    const double delta = std::abs(grid[i]) - cfg.model.membrane.omega;
    csv.row(std::vector<double>{to_hz(delta), to_hz(grid[i]), to_hz(nm.omega_plus),
                                to_hz(nm.omega_minus), to_hz(nm.gamma_plus),
                                to_hz(nm.gamma_minus), nm.stable_plus ? 1.0 : 0.0,
                                nm.stable_minus ? 1.0 : 0.0});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep-spectra

int cmd_sweep_spectra(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "spin", "loop", "sweep"});
  if (cfg.sweep.omega_points < 2)
    throw ConfigError("[sweep]: omega_start/omega_stop/omega_points required");
  const auto spin_grid =
      linspace(cfg.sweep.spin_start, cfg.sweep.spin_stop, cfg.sweep.spin_points);
  const auto omega_grid =
      linspace(cfg.sweep.omega_start, cfg.sweep.omega_stop, cfg.sweep.omega_points);

  // density map rows computed in parallel, assembled in grid order
  std::vector<std::string> rows(spin_grid.size());
  parallel_for(spin_grid.size(), opt.threads, [&](size_t i) {
    SystemModel m = cfg.model;
    m.spin.omega = spin_grid[i];
    const NormalModes nm = normal_modes(m);
    const bool stable = nm.stable_plus && nm.stable_minus;
    std::ostringstream line;
    line << format_double(to_hz(spin_grid[i])) << "," << (stable ? 1 : 0);
    if (stable) {
      const SpectrumRecord rec = displacement_psd(m, omega_grid);
      for (double v : rec.psd) line << "," << format_double(v);
    } else {
      for (int k = 0; k < cfg.sweep.omega_points; ++k) line << ",";
    }
    rows[i] = line.str();
  });

  auto out = open_output(opt, "spectra.csv");
  CsvWriter csv(out);
  csv.standard_header(config_hash(cfg));
  std::ostringstream axis;
  axis << "omega axis [Hz]:";
  for (double w : omega_grid) axis << " " << format_double(to_hz(w));
  csv.comment(axis.str());
  std::vector<Column> cols{{"omega_s", "Hz"}, {"stable", "1"}};
  for (int k = 0; k < cfg.sweep.omega_points; ++k)
    cols.push_back({"psd_" + std::to_string(k), "s"});
  csv.columns(cols);
  for (const auto& r : rows) out << r << "\n";

  // overlay of the calculated normal-mode curves
  const auto modes = normal_mode_sweep(CoupledModeParams::from_model(cfg.model), spin_grid);
  auto out2 = open_output(opt, "spectra_modes.csv");
  CsvWriter csv2(out2);
  csv2.standard_header(config_hash(cfg));
  csv2.columns({{"omega_s", "Hz"},
                {"omega_plus", "Hz"},
                {"omega_minus", "Hz"},
                {"gamma_plus", "Hz"},
                {"gamma_minus", "Hz"},
                {"stable", "1"}});
  for (size_t i = 0; i < spin_grid.size(); ++i) {
    const NormalModes& nm = modes[i];
    csv2.row(std::vector<double>{to_hz(spin_grid[i]), to_hz(nm.omega_plus),
                                 to_hz(nm.omega_minus), to_hz(nm.gamma_plus),
                                 to_hz(nm.gamma_minus),
                                 (nm.stable_plus && nm.stable_minus) ? 1.0 : 0.0});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// covariance

int cmd_covariance(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "spin", "loop", "integrator"});
  if (cfg.integrator.t_end <= 0.0) throw ConfigError("[integrator] t_end must be > 0");

  const DriftDiffusion fd = drift_diffusion(cfg.model);
  const CovarianceState init = thermal_state(cfg.model.membrane.nbar, cfg.model.spin.nbar);
  IntegrationOptions io;
  io.dt = cfg.integrator.dt;
  io.emit_every = cfg.integrator.emit_every;
  const auto traj = integrate(fd, init, cfg.integrator.t_end, io);

  const int sign = cfg.model.spin.omega < 0.0 ? -1 : 1;
  auto out = open_output(opt, "covariance.csv");
  CsvWriter csv(out);
  csv.standard_header(config_hash(cfg));
  csv.columns({{"t", "s"},
               {"var_x_m", "1"},
               {"var_p_m", "1"},
               {"var_x_s", "1"},
               {"var_p_s", "1"},
               {"var_x_plus", "1"},
               {"var_x_minus", "1"},
               {"var_p_plus", "1"},
               {"var_p_minus", "1"},
               {"xi", "1"},
               {"var_x_plus_det", "1"},
               {"var_x_minus_det", "1"},
               {"var_p_plus_det", "1"},
               {"var_p_minus_det", "1"},
               {"xi_det", "1"}});
  for (const auto& st : traj) {
    const double tol = 1e-9 * std::max(1.0, st.sigma.cwiseAbs().maxCoeff());
    if (heisenberg_defect(st) < -tol)
      throw NumericsError("covariance trajectory violates the Heisenberg bound");
    const CovarianceState demod =
        demodulate(st, cfg.model.membrane.omega, cfg.model.spin.omega);
    const CollectiveVariances clean =
        collective_variances(demod, cfg.model.detector_phase_alpha, 0.0, sign);
    const CollectiveVariances noisy = collective_variances(
        demod, cfg.model.detector_phase_alpha, cfg.model.detector_noise_spin, sign);
    csv.row(std::vector<double>{st.t, st.sigma(0, 0), st.sigma(1, 1), st.sigma(2, 2),
                                st.sigma(3, 3), clean.var_x_plus, clean.var_x_minus,
                                clean.var_p_plus, clean.var_p_minus, clean.xi,
                                noisy.var_x_plus, noisy.var_x_minus, noisy.var_p_plus,
                                noisy.var_p_minus, noisy.xi});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// exchange

int cmd_exchange(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "spin", "loop", "exchange", "integrator"});
  if (cfg.integrator.t_end <= 0.0) throw ConfigError("[integrator] t_end must be > 0");

  CoupledModeParams p;
  if (cfg.exchange.g_override > 0.0) {
    p = CoupledModeParams::symmetric(cfg.exchange.g_override, cfg.model.membrane.gamma0,
                                     cfg.model.spin.gamma0, cfg.model.membrane.omega,
                                     cfg.model.spin.omega, cfg.model.loop.tau,
                                     cfg.model.loop.phi);
  } else {
    p = CoupledModeParams::from_model(cfg.model);
  }
  const MeanState init = excited_state(cfg.exchange.n_m0, cfg.exchange.n_s0);
  const auto traj = mean_value_trajectory(p, init, cfg.drive, cfg.integrator.t_end,
                                          cfg.integrator.dt, cfg.integrator.emit_every);

  auto out = open_output(opt, "exchange.csv");
  CsvWriter csv(out);
  csv.standard_header(config_hash(cfg));
  csv.columns({{"t", "s"},
               {"n_m", "1"},
               {"n_s", "1"},
               {"x_m_demod", "1"},
               {"p_m_demod", "1"},
               {"x_s_demod", "1"},
               {"p_s_demod", "1"}});
  for (size_t i = 0; i < traj.t.size(); ++i) {
    const MeanState& d = traj.demod[i];
    csv.row(std::vector<double>{traj.t[i], traj.n_m[i], traj.n_s[i], d.x_m, d.p_m, d.x_s,
                                d.p_s});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// interference

int cmd_interference(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"spin", "loop", "interference"});
  const auto phi_grid = linspace(0.0, two_pi, cfg.interference.points);

  auto out = open_output(opt, "interference.csv");
  CsvWriter csv(out);
  csv.standard_header(config_hash(cfg));
  csv.columns({{"phi", "rad"}, {"epsilon", "1"}});
  for (double phi : phi_grid)
    csv.row(std::vector<double>{
        phi, interference_contrast(phi, cfg.model.spin.omega, cfg.model.loop.tau)});

  if (cfg.interference.time_trace) {
    cfg.require_sections({"membrane"});
    const double t_end = cfg.interference.trace_t_end > 0.0 ? cfg.interference.trace_t_end
                                                            : 200.0 / cfg.model.spin.gamma0;
    const double omega_s = cfg.model.spin.omega;
    const double tau = cfg.model.loop.tau;
    const double dt = 0.02 * two_pi / std::abs(omega_s);
    const double t0 = -2.0 * tau - 2.0 * dt;
    const size_t n = static_cast<size_t>(std::ceil((t_end - t0) / dt)) + 1;

    // freely decaying spin precession after a short excitation pulse; the
    // membrane is decoupled (cavity detuned) and its history is zero
    QuadratureHistory x_s{t0, dt, std::vector<double>(n)};
    QuadratureHistory x_m{t0, dt, std::vector<double>(n, 0.0)};
    const double amp = std::sqrt(2.0 * cfg.interference.spin_excitation);
    for (size_t i = 0; i < n; ++i) {
      const double t = t0 + dt * static_cast<double>(i);
      const double decay = t > 0.0 ? std::exp(-0.5 * cfg.model.spin.gamma0 * t) : 1.0;
      x_s.samples[i] = amp * decay * std::cos(omega_s * t);
    }

    auto out2 = open_output(opt, "interference_trace.csv");
    CsvWriter csv2(out2);
    csv2.standard_header(config_hash(cfg));
    csv2.columns({{"t", "s"}, {"x_l_out", "1"}, {"p_l_out", "1"}});
    for (double t = 0.0; t <= t_end; t += 50.0 * dt) {
      const OutputField f = output_quadrature(cfg.model, x_s, x_m, t);
      csv2.row(std::vector<double>{t, f.x_l, f.p_l});
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fit + synth

ResponseDataset read_response_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file: " + path);
  ResponseDataset data;
  std::string line;
  bool header_seen = false;
  bool has_phase = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("omega", 0) == 0) {
        has_phase = line.find("phase") != std::string::npos;
        continue;  // named header row
      }
    }
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::atof(cell.c_str()));
    if (vals.size() < 2) throw ConfigError("data file: expected omega,amplitude[,phase] rows");
    data.omega.push_back(vals[0] * two_pi);  // file stores ordinary Hz
    data.amplitude.push_back(vals[1]);
    if (vals.size() >= 3 && (has_phase || vals.size() == 3)) data.phase.push_back(vals[2]);
  }
  if (!data.phase.empty() && data.phase.size() != data.omega.size())
    throw ConfigError("data file: inconsistent phase column");
  data.validate();
  return data;
}

FitSettings settings_from_config(const ScenarioConfig& cfg) {
  FitSettings s;
  s.kind = cfg.fit.kind;
  s.omega_m = cfg.model.membrane.omega;
  s.phi = cfg.has_section("loop") ? cfg.model.loop.phi : 3.14159265358979323846;
  s.use_phase = cfg.fit.use_phase;
  s.weighting = cfg.fit.weighting;
  return s;
}

int cmd_fit(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "fit"});
  if (opt.data_path.empty()) throw ConfigError("fit: --data <csv> is required");
  const ResponseDataset data = read_response_csv(opt.data_path);
  const FitSettings settings = settings_from_config(cfg);
  const FitBounds bounds = bounds_from_config(cfg.fit, settings, data);
  const FitResult result = fit_response(data, settings, cfg.fit.initial, bounds);

  std::ostringstream rep;
  rep << "# " << kToolName << " " << kVersion << "\n";
  rep << "# config_hash = " << hex_hash(config_hash(cfg)) << "\n";
  rep << "converged = " << (result.converged ? "true" : "false") << "\n";
  rep << "iterations = " << result.iterations << "\n";
  rep << "residual_sse = " << format_double(result.residual_sse) << "\n";
  rep << "model = "
      << (result.model_kind == ResponseModelKind::amplitude_abs_chi ? "amplitude_abs_chi"
                                                                    : "psd_abs_chi_sq")
      << "\n";
  auto line = [&rep](const char* name, double v, const char* unit) {
    rep << name << " = " << format_double(v) << " " << unit << "\n";
  };
  line("scale", result.params.scale, "arb");
  line("offset", result.params.offset, "arb");
  line("g", to_hz(result.params.g), "Hz");
  line("two_g", 2.0 * to_hz(result.params.g), "Hz");
  line("gamma_m", to_hz(result.params.gamma_m), "Hz");
  line("gamma_s", to_hz(result.params.gamma_s), "Hz");
  line("omega_s", to_hz(result.params.omega_s), "Hz");
  line("tau", result.params.tau * 1e9, "ns");
  line("phase_offset", result.params.phase_offset, "rad");
  line("sigma_g", to_hz(result.sigmas.g), "Hz");
  line("sigma_gamma_m", to_hz(result.sigmas.gamma_m), "Hz");
  line("sigma_gamma_s", to_hz(result.sigmas.gamma_s), "Hz");
  line("sigma_omega_s", to_hz(result.sigmas.omega_s), "Hz");
  line("sigma_tau", result.sigmas.tau * 1e9, "ns");
  if (cfg.fit.kappa > 0.0) {
    const DelayConsistency dc =
        delay_consistency_check(result.params.tau, cfg.fit.kappa, cfg.fit.path_length);
    line("tau_calc", dc.tau_calc * 1e9, "ns");
    line("tau_ratio", dc.ratio, "1");
    rep << "delay_consistent = " << (dc.consistent ? "true" : "false") << "\n";
  }
  rep << "stable_configuration = " << (result.implies_instability ? "false" : "true") << "\n";
  const bool refuse_psd =
      result.model_kind == ResponseModelKind::psd_abs_chi_sq && result.implies_instability;
  if (refuse_psd)
    rep << "# best-fit parameters imply an amplified normal mode: such spectra do\n"
           "# not reach a steady state; reuse parameters fitted in a stable\n"
           "# configuration\n";

  std::cout << rep.str();
  auto out = open_output(opt, "fit_report.txt");
  out << rep.str();
  return (result.converged && !refuse_psd) ? 0 : 4;
}

int cmd_synth(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "fit", "synthetic"});
  if (cfg.synthetic.points < 2)
    throw ConfigError("[synthetic]: omega_start/omega_stop/points required");
  const auto grid =
      linspace(cfg.synthetic.omega_start, cfg.synthetic.omega_stop, cfg.synthetic.points);
  const FitSettings settings = settings_from_config(cfg);
  NoiseModel noise;
  noise.sigma_mult = cfg.synthetic.noise_mult;
  noise.sigma_add = cfg.synthetic.noise_add;
  noise.sigma_phase = cfg.synthetic.noise_phase;
  const std::uint64_t seed = opt.seed_given ? opt.seed : cfg.synthetic.seed;
  const ResponseDataset data = generate_synthetic(cfg.fit.initial, settings, grid, noise, seed);

  auto out = open_output(opt, "response.csv");
  CsvWriter csv(out);
  csv.standard_header(config_hash(cfg));
  csv.comment("seed = " + std::to_string(seed));
  if (data.phase.empty()) {
    csv.columns({{"omega", "Hz"}, {"amplitude", "arb"}});
    for (size_t i = 0; i < data.omega.size(); ++i)
      csv.row(std::vector<double>{to_hz(data.omega[i]), data.amplitude[i]});
  } else {
    csv.columns({{"omega", "Hz"}, {"amplitude", "arb"}, {"phase", "rad"}});
    for (size_t i = 0; i < data.omega.size(); ++i)
      csv.row(std::vector<double>{to_hz(data.omega[i]), data.amplitude[i], data.phase[i]});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// design-study

int cmd_design_study(const ScenarioConfig& cfg, const CliOptions& opt) {
  cfg.require_sections({"membrane", "loop", "design"});
  if (cfg.design.points < 2)
    throw ConfigError("[design]: detuning_start/detuning_stop/points required");
  const auto grid =
      linspace(cfg.design.detuning_start, cfg.design.detuning_stop, cfg.design.points);

  OscillatorMode mech = cfg.model.membrane;
  if (cfg.design.membrane_quality > 0.0)
    mech.gamma0 = std::abs(mech.omega) / cfg.design.membrane_quality;
  if (cfg.design.membrane_temperature > 0.0)
    mech.nbar = thermal_occupancy(cfg.design.membrane_temperature, mech.omega);

  const auto write = [&](LoopTarget target, const std::string& name) {
    const auto table = design_study(cfg.design.phys, mech, cfg.model.loop, grid, target);
    auto out = open_output(opt, name);
    CsvWriter csv(out);
    csv.standard_header(config_hash(cfg));
    csv.columns({{"delta_a", "Hz"},
                 {"alpha1", "1"},
                 {"gamma_s_meas", "Hz"},
                 {"gamma_m_meas", "Hz"},
                 {"gamma_sc", "Hz"},
                 {"cs_ratio", "1"},
                 {"g", "Hz"},
                 {"gamma_th_m", "Hz"},
                 {"gamma_th_s", "Hz"},
                 {"gamma_tot_m", "Hz"},
                 {"gamma_tot_s", "Hz"},
                 {"coop", "1"},
                 {"nbar_eff", "1"},
                 {"xi_pred", "1"},
                 {"margin_strong", "Hz"},
                 {"margin_qc", "Hz"},
                 {"strong_coupling", "1"},
                 {"quantum_coherent", "1"}});
    for (const auto& p : table)
      csv.row(std::vector<double>{
          to_hz(p.delta_a), p.alpha1, to_hz(p.gamma_s_meas), to_hz(p.gamma_m_meas),
          to_hz(p.gamma_sc), p.cs_ratio, to_hz(p.g), to_hz(p.gamma_th_m), to_hz(p.gamma_th_s),
          to_hz(p.gamma_tot_m), to_hz(p.gamma_tot_s), p.coop, p.nbar_eff, p.xi_pred,
          to_hz(p.margin_strong), to_hz(p.margin_qc), p.strong_coupling ? 1.0 : 0.0,
          p.quantum_coherent ? 1.0 : 0.0});
  };
  write(LoopTarget::spin, "design_loop_on_spin.csv");
  write(LoopTarget::membrane, "design_loop_on_membrane.csv");
  return 0;
}

}  // namespace

std::string format_rates_report(const DerivedRates& rates, const CooperativityBound& bound,
                                const DoubleLoopCooperativity& double_loop,
                                std::uint64_t hash) {
  std::ostringstream rep;
  rep << "# " << kToolName << " " << kVersion << "\n";
  rep << "# config_hash = " << hex_hash(hash) << "\n";
  auto line = [&rep](const char* name, double v, const char* unit) {
    rep << name << " = " << format_double(v) << " " << unit << "\n";
  };
  line("g", to_hz(rates.g), "Hz");
  line("two_g", 2.0 * to_hz(rates.g), "Hz");
  line("gamma_ba_m", to_hz(rates.gamma_ba_m), "Hz");
  line("gamma_ba_s", to_hz(rates.gamma_ba_s), "Hz");
  line("gamma_th_m", to_hz(rates.gamma_th_m), "Hz");
  line("gamma_th_s", to_hz(rates.gamma_th_s), "Hz");
  line("gamma_tot_m", to_hz(rates.gamma_tot_m), "Hz");
  line("gamma_tot_s", to_hz(rates.gamma_tot_s), "Hz");
  line("cooperativity", rates.coop, "1");
  line("nbar_eff", rates.nbar_eff, "1");
  line("xi_pred", rates.xi_pred, "1");
  line("c_max_single_loop", bound.c_max, "1");
  line("ratio_opt", bound.ratio_opt, "1");
  line("c_double_loop", double_loop.c, "1");
  return rep.str();
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"coupled spin-membrane optical-loop simulator"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
  app.fallthrough();  // global flags may follow the subcommand name

  CliOptions opt;
  const char* env_out = std::getenv("SPINLOOP_OUT");
  opt.out_dir = env_out != nullptr ? env_out : ".";
  app.add_option("--config", opt.config_path, "scenario config file")->required();
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--threads", opt.threads, "worker threads (default: cores)");
  auto* seed_opt = app.add_option("--seed", opt.seed, "seed override for synthetic data");

  int (*handler)(const ScenarioConfig&, const CliOptions&) = nullptr;
  const std::pair<const char*, int (*)(const ScenarioConfig&, const CliOptions&)> commands[] = {
      {"derive-rates", cmd_derive_rates}, {"normal-modes", cmd_normal_modes},
      {"sweep-spectra", cmd_sweep_spectra}, {"covariance", cmd_covariance},
      {"exchange", cmd_exchange}, {"interference", cmd_interference},
      {"fit", cmd_fit}, {"synth", cmd_synth}, {"design-study", cmd_design_study}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name);
    if (std::string(name) == "fit")
      sub->add_option("--data", opt.data_path, "response data CSV");
    sub->callback([&handler, fn = fn]() { handler = fn; });
  }
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }
  opt.seed_given = seed_opt->count() > 0;

  try {
    const ScenarioConfig cfg = parse_config_file(opt.config_path);
    return handler(cfg, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return 4;
  } catch (const NumericsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace spinloop
