#pragma once

#include <vector>

#include "spinloop/model.hpp"

namespace spinloop {

// Stokes vector in photon-flux units [1/s]. s0 is the total flux over two;
// physical polarization states satisfy s0^2 >= sx^2 + sy^2 + sz^2.
struct StokesVector {
  double s0 = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double sz = 0.0;

  bool physical(double rel_tol = 1e-9) const;
};

// Linearization of the polarization fluctuations about a strong x-polarized
// carrier: S_y = sqrt(S0bar) X_L, S_z = sqrt(S0bar) P_L with S0bar = flux/2.
struct LinearizedField {
  double mean_flux = 0.0;  // Phi_L [1/s]
  double x_l = 0.0;
  double p_l = 0.0;
  bool linear_regime = true;  // fluctuation amplitude << sqrt(Phi_L)
};

LinearizedField linearize(const StokesVector& stokes, double x_polarized_flux);
StokesVector delinearize(const LinearizedField& field);

// Half-wave plate at angle theta_h to the carrier polarization:
//   S_x' =  S_x cos(4 th) + S_y sin(4 th)
//   S_y' = -S_y cos(4 th) + S_x sin(4 th)
//   S_z' = -S_z
StokesVector hwp(const StokesVector& s, double theta_h);

// QWP(pi/4) . HWP((pi + phi)/4) . QWP(pi/4): rotation about S_x by phi,
//   (S_x, S_y cos phi - S_z sin phi, S_z cos phi + S_y sin phi).
StokesVector loop_phase_stack(const StokesVector& s, double phi);

// RMS modulation of the spin signal in the loop output,
//   eps(phi) = sqrt(1 + cos^2 phi + 2 cos phi cos(2 Omega_s tau)).
double interference_contrast(double phi, double omega_s, double tau);

// Uniformly sampled quadrature record with linear interpolation; used to feed
// the delayed arguments of the output field.
struct QuadratureHistory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> samples;

  bool covers(double t) const;
  double at(double t) const;
};

// Output-field quadratures after the second spin pass. The mean carries the
// three signal terms X_s(t), X_s(t - 2 tau) e^{i phi} and X_m(t - tau) e^{i phi}
// scaled by the carrier transmission; loss-port vacua are zero-mean
// placeholders whose second moments enter only the vacuum_variance entry
// (eta^2 carrier vacuum + (1 - eta^2) loss-port vacuum = 1/2 per quadrature).
struct OutputField {
  double x_l = 0.0;
  double p_l = 0.0;
  double vacuum_variance = 0.5;
};

OutputField output_quadrature(const SystemModel& model, const QuadratureHistory& spin_history,
                              const QuadratureHistory& membrane_history, double t);

// Same composition with the sideband approximation
// X_s(t - 2 tau) ~ X_s cos(2 Omega_s tau) - P_s sin(2 Omega_s tau).
OutputField output_quadrature_rwa(const SystemModel& model, double x_s, double p_s,
                                  double x_m_delayed);

}  // namespace spinloop
