#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spinloop/langevin.hpp"

namespace spinloop {

// Measured (or synthetic) response curve. Phase is optional; weights default
// to the weighting rule of FitSettings when empty.
struct ResponseDataset {
  std::vector<double> omega;      // strictly increasing [rad/s]
  std::vector<double> amplitude;  // >= 0, arbitrary units
  std::vector<double> phase;      // [rad], empty if absent
  std::vector<double> weights;    // per-point, empty -> rule-based

  void validate() const;
};

enum class ResponseModelKind { amplitude_abs_chi, psd_abs_chi_sq };
enum class FitWeighting { uniform, inverse_amplitude_sq };

// Parameters of the coupled-mode response model
//   amplitude:  a |chi_m_eff(omega)|            (+ offset when enabled)
//   psd:        offset + a |chi_m_eff(omega)|^2
// with chi_m_eff built from (g, gamma_m, gamma_s, omega_s, tau) at fixed
// omega_m and phi. phase_offset is a nuisance parameter used only when phase
// data participate.
struct FitParams {
  double scale = 0.0;
  double offset = 0.0;
  double g = 0.0;
  double gamma_m = 0.0;
  double gamma_s = 0.0;
  double omega_s = 0.0;
  double tau = 0.0;
  double phase_offset = 0.0;
};

struct FitBounds {
  FitParams lo;
  FitParams hi;
};

struct FitSettings {
  ResponseModelKind kind = ResponseModelKind::amplitude_abs_chi;
  double omega_m = 0.0;  // known membrane frequency [rad/s]
  double phi = 3.14159265358979323846;
  bool fit_offset = false;  // forced on for the psd kind
  bool use_phase = true;    // fit phase jointly when the dataset carries it
  FitWeighting weighting = FitWeighting::uniform;
  int max_simplex_iterations = 4000;
  int max_lm_iterations = 200;

  // Default boxes: rates in (0, omega_m/10], tau in [0, 100 ns], omega_s
  // within 10% of omega_m.
  FitBounds default_bounds(const ResponseDataset& data) const;
};

struct FitResult {
  FitParams params;
  FitParams sigmas;  // curvature-based 1-sigma uncertainties
  double residual_sse = 0.0;
  bool converged = false;
  // Best-fit parameters describe an unstable configuration (an amplified
  // normal mode). Such spectra never reach the steady state a PSD fit
  // assumes; reuse parameters fitted in a stable configuration instead.
  bool implies_instability = false;
  ResponseModelKind model_kind = ResponseModelKind::amplitude_abs_chi;
  int iterations = 0;
};

// Derivative-free simplex warm start refined by damped Gauss-Newton
// (Levenberg-Marquardt, forward-difference Jacobian with relative step 1e-6).
// Deterministic for identical inputs. Non-convergence returns the best
// parameters found with converged = false; the reported SSE never exceeds the
// initial guess's.
FitResult fit_response(const ResponseDataset& data, const FitSettings& settings,
                       const FitParams& initial, const FitBounds& bounds);

FitResult fit_response(const ResponseDataset& data, const FitSettings& settings,
                       const FitParams& initial);

// Model prediction for one frequency (exposed for oracles and reports).
double response_amplitude(const FitParams& p, const FitSettings& settings, double omega);
double response_phase(const FitParams& p, const FitSettings& settings, double omega);

struct NoiseModel {
  double sigma_mult = 0.0;   // relative multiplicative amplitude noise
  double sigma_add = 0.0;    // additive noise in data units
  double sigma_phase = 0.0;  // phase noise [rad]
};

// Forward model plus seeded Gaussian noise; bit-reproducible per seed.
ResponseDataset generate_synthetic(const FitParams& params, const FitSettings& settings,
                                   std::span<const double> omega_grid, const NoiseModel& noise,
                                   std::uint64_t seed);

// Compares a fitted delay against the cavity + propagation estimate
// tau_calc = 2/kappa + d/c.
struct DelayConsistency {
  double tau_fit = 0.0;
  double tau_calc = 0.0;
  double ratio = 0.0;  // tau_fit / tau_calc
  bool consistent = false;
};

DelayConsistency delay_consistency_check(double tau_fit, double kappa, double path_length,
                                         double threshold = 1.5);

}  // namespace spinloop
