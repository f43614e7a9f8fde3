#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spinloop/fit.hpp"
#include "spinloop/langevin.hpp"
#include "spinloop/model.hpp"

namespace spinloop {

// Scenario files are key = value text with [section] headers and '#'
// comments. Every physical quantity carries a unit suffix (Hz/kHz/MHz/GHz,
// s/ms/us/ns, rad/deg, K, G/T, 1/s, Hz/G multiples, m), validated at parse
// time; plain frequencies are ordinary (non-angular) and are multiplied by
// 2 pi on load, so all in-memory rates are angular. Unknown sections or keys
// are rejected.

struct IntegratorSpec {
  double t_end = 0.0;
  double dt = 0.0;  // 0 -> integrator default
  int emit_every = 1;
};

struct SweepSpec {
  double spin_start = 0.0, spin_stop = 0.0;
  int spin_points = 0;
  double omega_start = 0.0, omega_stop = 0.0;
  int omega_points = 0;
};

struct ExchangeSpec {
  double n_m0 = 0.0, n_s0 = 0.0;
  double g_override = 0.0;  // > 0: symmetric coupling instead of the loop's
};

struct InterferenceSpec {
  int points = 181;
  bool time_trace = false;
  double trace_t_end = 0.0;
  double spin_excitation = 1.0;
};

struct FitSpec {
  ResponseModelKind kind = ResponseModelKind::amplitude_abs_chi;
  bool use_phase = true;
  FitWeighting weighting = FitWeighting::uniform;
  FitParams initial;         // scale 0 -> auto
  std::optional<double> g_min, g_max, gamma_min, gamma_max, omega_s_min, omega_s_max, tau_min,
      tau_max;
  double kappa = 0.0;        // cavity linewidth for the delay consistency report
  double path_length = 0.0;  // optical propagation distance [m]
};

struct SyntheticSpec {
  double noise_mult = 0.0, noise_add = 0.0, noise_phase = 0.0;
  double omega_start = 0.0, omega_stop = 0.0;
  int points = 0;
  std::uint64_t seed = 1;
};

struct DesignSpec {
  AtomCavityPhysical phys;
  double detuning_start = 0.0, detuning_stop = 0.0;
  int points = 0;
  double membrane_temperature = 0.0;
  double membrane_quality = 0.0;
};

struct ScenarioConfig {
  SystemModel model;
  IntegratorSpec integrator;
  SweepSpec sweep;
  ExchangeSpec exchange;
  std::optional<DrivePulse> drive;
  InterferenceSpec interference;
  FitSpec fit;
  SyntheticSpec synthetic;
  DesignSpec design;

  std::set<std::string> sections;
  // canonical entries as (section, key, literal) in schema order
  std::vector<std::array<std::string, 3>> entries;

  bool has_section(const std::string& name) const { return sections.count(name) > 0; }
  void require_sections(std::initializer_list<const char*> names) const;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

// Canonical form: sections and keys in schema order, normalized spacing,
// original value literals preserved (so parse -> serialize -> parse is
// idempotent byte-for-byte after the first normalization).
std::string serialize_config(const ScenarioConfig& config);

// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const ScenarioConfig& config);

}  // namespace spinloop
