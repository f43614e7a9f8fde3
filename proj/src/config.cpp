#include "spinloop/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "spinloop/constants.hpp"
#include "spinloop/errors.hpp"

namespace spinloop {

namespace {

using constants::two_pi;

enum class Unit {
  frequency,   // Hz family, signed, -> rad/s
  time,        // s family
  angle,       // rad | deg
  temperature, // K
  field,       // G | T
  flux,        // 1/s
  gyro,        // Hz/G family -> rad/(s T)
  length,      // m | mm
  scalar,      // dimensionless
  count,       // non-negative integer
  boolean,     // true | false
  word,        // bare identifier
};

struct KeySpec {
  const char* section;
  const char* key;
  Unit unit;
};

// Schema order is the canonical serialization order.
const std::vector<KeySpec>& full_schema() {
  static const std::vector<KeySpec> all = {
    {"membrane", "frequency", Unit::frequency},
    {"membrane", "damping", Unit::frequency},
    {"membrane", "nbar", Unit::scalar},
    {"membrane", "measurement_rate", Unit::frequency},
    {"spin", "frequency", Unit::frequency},
    {"spin", "damping", Unit::frequency},
    {"spin", "nbar", Unit::scalar},
    {"spin", "measurement_rate", Unit::frequency},
    {"loop", "phi", Unit::angle},
    {"loop", "eta", Unit::scalar},
    {"loop", "eta12", Unit::scalar},
    {"loop", "eta23", Unit::scalar},
    {"loop", "eta13", Unit::scalar},
    {"loop", "tau", Unit::time},
    {"detector", "spin_noise_occupancy", Unit::scalar},
    {"detector", "alpha", Unit::angle},
    {"integrator", "t_end", Unit::time},
    {"integrator", "dt", Unit::time},
    {"integrator", "emit_every", Unit::count},
    {"sweep", "spin_frequency_start", Unit::frequency},
    {"sweep", "spin_frequency_stop", Unit::frequency},
    {"sweep", "spin_points", Unit::count},
    {"sweep", "omega_start", Unit::frequency},
    {"sweep", "omega_stop", Unit::frequency},
    {"sweep", "omega_points", Unit::count},
    {"exchange", "membrane_excitation", Unit::scalar},
    {"exchange", "spin_excitation", Unit::scalar},
    {"exchange", "g", Unit::frequency},
    {"drive", "target", Unit::word},
    {"drive", "amplitude", Unit::frequency},
    {"drive", "frequency", Unit::frequency},
    {"drive", "phase", Unit::angle},
    {"drive", "t_on", Unit::time},
    {"drive", "t_off", Unit::time},
    {"interference", "points", Unit::count},
    {"interference", "time_trace", Unit::boolean},
    {"interference", "trace_t_end", Unit::time},
    {"interference", "spin_excitation", Unit::scalar},
    {"fit", "model", Unit::word},
    {"fit", "use_phase", Unit::boolean},
    {"fit", "weighting", Unit::word},
    {"fit", "g_init", Unit::frequency},
    {"fit", "gamma_m_init", Unit::frequency},
    {"fit", "gamma_s_init", Unit::frequency},
    {"fit", "omega_s_init", Unit::frequency},
    {"fit", "tau_init", Unit::time},
    {"fit", "scale_init", Unit::scalar},
    {"fit", "offset_init", Unit::scalar},
    {"fit", "g_min", Unit::frequency},
    {"fit", "g_max", Unit::frequency},
    {"fit", "gamma_min", Unit::frequency},
    {"fit", "gamma_max", Unit::frequency},
    {"fit", "omega_s_min", Unit::frequency},
    {"fit", "omega_s_max", Unit::frequency},
    {"fit", "tau_min", Unit::time},
    {"fit", "tau_max", Unit::time},
    {"fit", "kappa", Unit::frequency},
    {"fit", "path_length", Unit::length},
    {"synthetic", "noise_mult", Unit::scalar},
    {"synthetic", "noise_add", Unit::scalar},
    {"synthetic", "noise_phase", Unit::scalar},
    {"synthetic", "omega_start", Unit::frequency},
    {"synthetic", "omega_stop", Unit::frequency},
    {"synthetic", "points", Unit::count},
    {"synthetic", "seed", Unit::count},
    {"design", "alpha1_ref", Unit::scalar},
    {"design", "reference_detuning", Unit::frequency},
    {"design", "n_atoms", Unit::scalar},
    {"design", "f_spin", Unit::scalar},
    {"design", "gamma_se", Unit::frequency},
    {"design", "d0", Unit::scalar},
    {"design", "g0", Unit::frequency},
    {"design", "kappa", Unit::frequency},
    {"design", "eta_c", Unit::scalar},
    {"design", "phi_flux", Unit::flux},
    {"design", "gamma_f", Unit::gyro},
    {"design", "b0", Unit::field},
    {"design", "detuning_start", Unit::frequency},
    {"design", "detuning_stop", Unit::frequency},
    {"design", "points", Unit::count},
    {"design", "membrane_temperature", Unit::temperature},
    {"design", "membrane_quality", Unit::scalar},
    {"design", "intrinsic_spin_damping", Unit::frequency},
  };
  return all;
}

const KeySpec* find_spec(const std::string& section, const std::string& key) {
  for (const auto& s : full_schema())
    if (section == s.section && key == s.key) return &s;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct UnitFactor {
  const char* name;
  double factor;
};

double convert(const std::string& literal, Unit unit, const std::string& where) {
  std::istringstream iss(literal);
  std::string num_tok, unit_tok, extra;
  iss >> num_tok >> unit_tok >> extra;
  if (!extra.empty()) throw ConfigError(where + ": trailing tokens in '" + literal + "'");

  auto parse_number = [&](const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == nullptr || *end != '\0' || tok.empty())
      throw ConfigError(where + ": invalid number '" + tok + "'");
    return v;
  };

  auto with_units = [&](std::initializer_list<UnitFactor> table) {
    if (unit_tok.empty())
      throw ConfigError(where + ": missing unit suffix in '" + literal + "'");
    for (const auto& u : table)
      if (unit_tok == u.name) return parse_number(num_tok) * u.factor;
    throw ConfigError(where + ": unknown unit '" + unit_tok + "'");
  };

  switch (unit) {
    case Unit::frequency:
      return with_units({{"Hz", two_pi},
                         {"kHz", two_pi * 1e3},
                         {"MHz", two_pi * 1e6},
                         {"GHz", two_pi * 1e9}});
    case Unit::time:
      return with_units({{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}});
    case Unit::angle:
      return with_units({{"rad", 1.0}, {"deg", two_pi / 360.0}});
    case Unit::temperature:
      return with_units({{"K", 1.0}});
    case Unit::field:
      return with_units({{"G", constants::gauss_to_tesla}, {"T", 1.0}});
    case Unit::flux:
      return with_units({{"1/s", 1.0}, {"/s", 1.0}});
    case Unit::gyro:
      return with_units({{"Hz/G", two_pi / constants::gauss_to_tesla},
                         {"kHz/G", two_pi * 1e3 / constants::gauss_to_tesla},
                         {"MHz/G", two_pi * 1e6 / constants::gauss_to_tesla}});
    case Unit::length:
      return with_units({{"m", 1.0}, {"mm", 1e-3}});
    case Unit::scalar:
    case Unit::count:
      if (!unit_tok.empty())
        throw ConfigError(where + ": dimensionless key must not carry a unit ('" + literal + "')");
      return parse_number(num_tok);
    default:
      throw ConfigError(where + ": not a numeric key");
  }
}

struct ParsedValues {
  std::map<std::pair<std::string, std::string>, std::string> literals;

  bool has(const std::string& sec, const std::string& key) const {
    return literals.count({sec, key}) > 0;
  }
  std::string where(const std::string& sec, const std::string& key) const {
    return "[" + sec + "] " + key;
  }
  double num(const std::string& sec, const std::string& key) const {
    const auto it = literals.find({sec, key});
    if (it == literals.end()) throw ConfigError(where(sec, key) + ": missing required key");
    return convert(it->second, find_spec(sec, key)->unit, where(sec, key));
  }
  double num_or(const std::string& sec, const std::string& key, double fallback) const {
    return has(sec, key) ? num(sec, key) : fallback;
  }
  long integer(const std::string& sec, const std::string& key, long fallback) const {
    if (!has(sec, key)) return fallback;
    const double v = num(sec, key);
    if (v < 0 || v != std::floor(v))
      throw ConfigError(where(sec, key) + ": expected a non-negative integer");
    return static_cast<long>(v);
  }
  bool flag(const std::string& sec, const std::string& key, bool fallback) const {
    const auto it = literals.find({sec, key});
    if (it == literals.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError(where(sec, key) + ": expected true or false");
  }
  std::string word(const std::string& sec, const std::string& key,
                   const std::string& fallback) const {
    const auto it = literals.find({sec, key});
    return it == literals.end() ? fallback : it->second;
  }
};

void fill_loop(const ParsedValues& v, LoopConfig* loop) {
  if (v.has("loop", "eta")) {
    if (v.has("loop", "eta12") || v.has("loop", "eta23") || v.has("loop", "eta13"))
      throw ConfigError("[loop]: give either eta or the individual eta_ij, not both");
    *loop = LoopConfig::uniform(v.num("loop", "eta"));
  } else {
    loop->eta12 = v.num_or("loop", "eta12", 1.0);
    loop->eta23 = v.num_or("loop", "eta23", 1.0);
    loop->eta13 = v.num_or("loop", "eta13", 1.0);
  }
  double phi = v.num_or("loop", "phi", 0.0);
  phi = std::fmod(phi, two_pi);
  if (phi < 0) phi += two_pi;
  loop->phi = phi;
  loop->tau = v.num_or("loop", "tau", 0.0);
}

void fill(const ParsedValues& v, ScenarioConfig* cfg) {
  auto& m = cfg->model;
  m.membrane.label = ModeLabel::membrane;
  m.spin.label = ModeLabel::spin;
  if (cfg->has_section("membrane")) {
    m.membrane.omega = v.num("membrane", "frequency");
    m.membrane.gamma0 = v.num_or("membrane", "damping", 0.0);
    m.membrane.nbar = v.num_or("membrane", "nbar", 0.0);
    m.membrane.gamma_meas = v.num_or("membrane", "measurement_rate", 0.0);
  }
  if (cfg->has_section("spin")) {
    m.spin.omega = v.num("spin", "frequency");
    m.spin.gamma0 = v.num_or("spin", "damping", 0.0);
    m.spin.nbar = v.num_or("spin", "nbar", 0.0);
    m.spin.gamma_meas = v.num_or("spin", "measurement_rate", 0.0);
  }
  if (cfg->has_section("loop")) fill_loop(v, &m.loop);
  m.detector_noise_spin = v.num_or("detector", "spin_noise_occupancy", 0.0);
  m.detector_phase_alpha = v.num_or("detector", "alpha", 0.0);

  cfg->integrator.t_end = v.num_or("integrator", "t_end", 0.0);
  cfg->integrator.dt = v.num_or("integrator", "dt", 0.0);
  cfg->integrator.emit_every = static_cast<int>(v.integer("integrator", "emit_every", 1));

  cfg->sweep.spin_start = v.num_or("sweep", "spin_frequency_start", 0.0);
  cfg->sweep.spin_stop = v.num_or("sweep", "spin_frequency_stop", 0.0);
  cfg->sweep.spin_points = static_cast<int>(v.integer("sweep", "spin_points", 0));
  cfg->sweep.omega_start = v.num_or("sweep", "omega_start", 0.0);
  cfg->sweep.omega_stop = v.num_or("sweep", "omega_stop", 0.0);
  cfg->sweep.omega_points = static_cast<int>(v.integer("sweep", "omega_points", 0));

  cfg->exchange.n_m0 = v.num_or("exchange", "membrane_excitation", 0.0);
  cfg->exchange.n_s0 = v.num_or("exchange", "spin_excitation", 0.0);
  cfg->exchange.g_override = v.num_or("exchange", "g", 0.0);

  if (cfg->has_section("drive")) {
    DrivePulse d;
    const std::string target = v.word("drive", "target", "membrane");
    if (target == "membrane")
      d.target = ModeLabel::membrane;
    else if (target == "spin")
      d.target = ModeLabel::spin;
    else
      throw ConfigError("[drive] target: expected membrane or spin");
    d.amplitude = v.num_or("drive", "amplitude", 0.0);
    d.omega = v.num_or("drive", "frequency", 0.0);
    d.phase = v.num_or("drive", "phase", 0.0);
    d.t_on = v.num_or("drive", "t_on", 0.0);
    d.t_off = v.num_or("drive", "t_off", 0.0);
    cfg->drive = d;
  }

  cfg->interference.points = static_cast<int>(v.integer("interference", "points", 181));
  cfg->interference.time_trace = v.flag("interference", "time_trace", false);
  cfg->interference.trace_t_end = v.num_or("interference", "trace_t_end", 0.0);
  cfg->interference.spin_excitation = v.num_or("interference", "spin_excitation", 1.0);

  const std::string kind = v.word("fit", "model", "amplitude_abs_chi");
  if (kind == "amplitude_abs_chi")
    cfg->fit.kind = ResponseModelKind::amplitude_abs_chi;
  else if (kind == "psd_abs_chi_sq")
    cfg->fit.kind = ResponseModelKind::psd_abs_chi_sq;
  else
    throw ConfigError("[fit] model: expected amplitude_abs_chi or psd_abs_chi_sq");
  cfg->fit.use_phase = v.flag("fit", "use_phase", true);
  const std::string weighting = v.word("fit", "weighting", "uniform");
  if (weighting == "uniform")
    cfg->fit.weighting = FitWeighting::uniform;
  else if (weighting == "inverse_amplitude_sq")
    cfg->fit.weighting = FitWeighting::inverse_amplitude_sq;
  else
    throw ConfigError("[fit] weighting: expected uniform or inverse_amplitude_sq");
  cfg->fit.initial.g = v.num_or("fit", "g_init", 0.0);
  cfg->fit.initial.gamma_m = v.num_or("fit", "gamma_m_init", 0.0);
  cfg->fit.initial.gamma_s = v.num_or("fit", "gamma_s_init", 0.0);
  cfg->fit.initial.omega_s = v.num_or("fit", "omega_s_init", 0.0);
  cfg->fit.initial.tau = v.num_or("fit", "tau_init", 0.0);
  cfg->fit.initial.scale = v.num_or("fit", "scale_init", 0.0);
  cfg->fit.initial.offset = v.num_or("fit", "offset_init", 0.0);
  auto opt_num = [&](const char* key) -> std::optional<double> {
    if (!v.has("fit", key)) return std::nullopt;
    return v.num("fit", key);
  };
  cfg->fit.g_min = opt_num("g_min");
  cfg->fit.g_max = opt_num("g_max");
  cfg->fit.gamma_min = opt_num("gamma_min");
  cfg->fit.gamma_max = opt_num("gamma_max");
  cfg->fit.omega_s_min = opt_num("omega_s_min");
  cfg->fit.omega_s_max = opt_num("omega_s_max");
  cfg->fit.tau_min = opt_num("tau_min");
  cfg->fit.tau_max = opt_num("tau_max");
  cfg->fit.kappa = v.num_or("fit", "kappa", 0.0);
  cfg->fit.path_length = v.num_or("fit", "path_length", 0.0);

  cfg->synthetic.noise_mult = v.num_or("synthetic", "noise_mult", 0.0);
  cfg->synthetic.noise_add = v.num_or("synthetic", "noise_add", 0.0);
  cfg->synthetic.noise_phase = v.num_or("synthetic", "noise_phase", 0.0);
  cfg->synthetic.omega_start = v.num_or("synthetic", "omega_start", 0.0);
  cfg->synthetic.omega_stop = v.num_or("synthetic", "omega_stop", 0.0);
  cfg->synthetic.points = static_cast<int>(v.integer("synthetic", "points", 0));
  cfg->synthetic.seed = static_cast<std::uint64_t>(v.integer("synthetic", "seed", 1));

  auto& d = cfg->design;
  d.phys.alpha1_ref = v.num_or("design", "alpha1_ref", 0.0);
  d.phys.reference_detuning = v.num_or("design", "reference_detuning", two_pi * 1e9);
  d.phys.n_atoms = v.num_or("design", "n_atoms", 0.0);
  d.phys.f_spin = v.num_or("design", "f_spin", 2.0);
  d.phys.gamma_se = v.num_or("design", "gamma_se", 0.0);
  d.phys.d0 = v.num_or("design", "d0", 0.0);
  d.phys.g0 = v.num_or("design", "g0", 0.0);
  d.phys.kappa = v.num_or("design", "kappa", 0.0);
  d.phys.eta_c = v.num_or("design", "eta_c", 0.0);
  d.phys.phi_flux = v.num_or("design", "phi_flux", 0.0);
  d.phys.gamma_f = v.num_or("design", "gamma_f", 0.0);
  d.phys.b0 = v.num_or("design", "b0", 0.0);
  d.phys.gamma_s_intrinsic = v.num_or("design", "intrinsic_spin_damping", 0.0);
  d.detuning_start = v.num_or("design", "detuning_start", 0.0);
  d.detuning_stop = v.num_or("design", "detuning_stop", 0.0);
  d.points = static_cast<int>(v.integer("design", "points", 0));
  d.membrane_temperature = v.num_or("design", "membrane_temperature", 0.0);
  d.membrane_quality = v.num_or("design", "membrane_quality", 0.0);
}

}  // namespace

void ScenarioConfig::require_sections(std::initializer_list<const char*> names) const {
  std::string missing;
  for (const char* n : names)
    if (!has_section(n)) missing += std::string(missing.empty() ? "" : ", ") + "[" + n + "]";
  if (!missing.empty())
    throw ConfigError("config: missing required section(s) " + missing);
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  ParsedValues values;
  std::istringstream iss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(iss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(at + ": empty section name");
      bool known = false;
      for (const auto& s : full_schema())
        if (section == s.section) known = true;
      if (!known) throw ConfigError(at + ": unknown section [" + section + "]");
      cfg.sections.insert(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + ": expected key = value");
    if (section.empty()) throw ConfigError(at + ": key before any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeySpec* spec = find_spec(section, key);
    if (spec == nullptr)
      throw ConfigError(at + ": unknown key '" + key + "' in section [" + section + "]");
    if (values.has(section, key)) throw ConfigError(at + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(at + ": empty value for '" + key + "'");
    // numeric validation happens immediately so errors carry the line number
    if (spec->unit != Unit::word && spec->unit != Unit::boolean)
      convert(value, spec->unit, at + " [" + section + "] " + key);
    values.literals[{section, key}] = value;
  }

  fill(values, &cfg);

  // canonical entry list in schema order
  for (const auto& s : full_schema()) {
    const auto it = values.literals.find({s.section, s.key});
    if (it != values.literals.end())
      cfg.entries.push_back({s.section, s.key, it->second});
  }
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& config) {
  std::ostringstream out;
  std::string current;
  for (const auto& e : config.entries) {
    if (e[0] != current) {
      if (!current.empty()) out << "\n";
      out << "[" << e[0] << "]\n";
      current = e[0];
    }
    out << e[1] << " = " << e[2] << "\n";
  }
  return out.str();
}

std::uint64_t config_hash(const ScenarioConfig& config) {
  const std::string text = serialize_config(config);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace spinloop
