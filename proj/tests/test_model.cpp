#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spinloop/constants.hpp"
#include "spinloop/errors.hpp"
#include "spinloop/grid.hpp"
#include "spinloop/model.hpp"

using namespace spinloop;
using constants::two_pi;

namespace {

constexpr double kPi = 3.14159265358979323846;

SystemModel squeezing_params(double phi = kPi, double spin_sign = -1.0) {
  SystemModel m;
  m.membrane.label = ModeLabel::membrane;
  m.membrane.omega = two_pi * 1.957e6;
  m.membrane.gamma0 = two_pi * 0.4e3;
  m.membrane.nbar = 1.5e4;
  m.membrane.gamma_meas = two_pi * 7.5e3;
  m.spin.label = ModeLabel::spin;
  m.spin.omega = spin_sign * two_pi * 1.957e6;
  m.spin.gamma0 = two_pi * 1.0e3;
  m.spin.nbar = 0.0;
  m.spin.gamma_meas = two_pi * 0.43e3;
  m.loop = LoopConfig::uniform(0.9, phi);
  return m;
}

}  // namespace

TEST_CASE("coupling rate at the squeezing-run parameters") {
  const DerivedRates r = derive_rates(squeezing_params());
  CHECK(2.0 * r.g / two_pi == doctest::Approx(5.2e3).epsilon(0.02));
}

TEST_CASE("lossless loop limits") {
  SystemModel m = squeezing_params();
  m.loop = LoopConfig::uniform(1.0, kPi);
  DerivedRates r = derive_rates(m);
  CHECK(r.g ==
        doctest::Approx(2.0 * std::sqrt(m.spin.gamma_meas * m.membrane.gamma_meas)).epsilon(1e-12));
  CHECK(r.gamma_ba_s == doctest::Approx(0.0).epsilon(1e-12));

  // constructive interference doubles the spin noise amplitude
  m.loop.phi = 0.0;
  r = derive_rates(m);
  CHECK(r.gamma_ba_s == doctest::Approx(4.0 * m.spin.gamma_meas).epsilon(1e-12));
}

TEST_CASE("uniform-transmission reduction over an eta grid") {
  for (int i = 0; i <= 100; ++i) {
    const double eta = i / 100.0;
    SystemModel m = squeezing_params();
    m.loop = LoopConfig::uniform(eta, kPi);
    const DerivedRates r = derive_rates(m);
    const double root = std::sqrt(m.spin.gamma_meas * m.membrane.gamma_meas);
    const double eta2 = eta * eta;
    CHECK(r.g == doctest::Approx((eta2 + eta2 * eta2) * root).epsilon(1e-13));
    CHECK(r.gamma_ba_s ==
          doctest::Approx((1.0 - eta2 * eta2) * m.spin.gamma_meas).epsilon(1e-12));
  }
}

TEST_CASE("rate totals and undamped-collective-mode guard") {
  const DerivedRates r = derive_rates(squeezing_params());
  CHECK(r.gamma_tot_m == r.gamma_th_m + r.gamma_ba_m);
  CHECK(r.gamma_tot_s == r.gamma_th_s + r.gamma_ba_s);
  CHECK(r.gamma_th_m == doctest::Approx(squeezing_params().membrane.gamma0 * (1.5e4 + 0.5)));

  SystemModel undamped = squeezing_params();
  undamped.membrane.gamma0 = 0.0;
  undamped.spin.gamma0 = 0.0;
  CHECK_THROWS_AS(derive_rates(undamped), NumericsError);
}

TEST_CASE("single-loop cooperativity bound") {
  const CooperativityBound b = cooperativity_bound(0.8);
  CHECK(b.c_max == doctest::Approx(2.7).epsilon(0.01));
  CHECK_FALSE(b.unbounded);

  CHECK(cooperativity_bound(1e-8).c_max < 2e-4);
  CHECK(cooperativity_bound(1.0).unbounded);
}

TEST_CASE("cooperativity bound agrees with a brute-force ratio search") {
  // independent oracle: scan Gamma_s/Gamma_m and evaluate C from the raw
  // rate formulas with zero thermal noise
  const double eta_sq = 0.5;
  const double eta = std::sqrt(eta_sq);
  double best_c = 0.0, best_ratio = 0.0;
  for (double log_r = -3.0; log_r <= 3.0; log_r += 1e-4) {
    const double ratio = std::pow(10.0, log_r);
    const double g = (eta_sq + eta_sq * eta_sq) * std::sqrt(ratio);
    const double ba_m = eta_sq;
    const double ba_s = ratio * (1.0 - eta_sq * eta_sq);
    const double c = 2.0 * g / (ba_m + ba_s);
    if (c > best_c) {
      best_c = c;
      best_ratio = ratio;
    }
  }
  const CooperativityBound b = cooperativity_bound(eta_sq);
  CHECK(b.c_max == doctest::Approx(best_c).epsilon(1e-3));
  CHECK(b.ratio_opt == doctest::Approx(best_ratio).epsilon(1e-2));

  // plugging the optimal ratio back through derive_rates reproduces c_max
  SystemModel m = squeezing_params();
  m.loop = LoopConfig::uniform(eta, kPi);
  m.membrane.gamma0 = 1e-30;  // keeps nbar_eff finite, thermally negligible
  m.spin.gamma0 = 0.0;
  m.membrane.nbar = 0.0;
  m.membrane.gamma_meas = two_pi * 1e3;
  m.spin.gamma_meas = b.ratio_opt * m.membrane.gamma_meas;
  CHECK(derive_rates(m).coop == doctest::Approx(b.c_max).epsilon(1e-9));
}

TEST_CASE("double-loop cooperativity") {
  CHECK(double_loop_cooperativity(0.9).c == doctest::Approx(9.4868).epsilon(1e-4));
  CHECK(double_loop_cooperativity(0.9).c > 9.0);
  CHECK(double_loop_cooperativity(0.9).c < 10.0);
  CHECK(double_loop_cooperativity(0.0).c == 0.0);
  CHECK(double_loop_cooperativity(0.8).c ==
        doctest::Approx(std::sqrt(0.8) / 0.2).epsilon(1e-12));
  CHECK(double_loop_cooperativity(1.0).unbounded);
}

TEST_CASE("entanglement prediction is monotone in cooperativity") {
  // xi < 1 iff C > 1 in the hot-collective-mode limit
  const double nbar_eff = 1e6;
  auto xi = [&](double coop) { return 1.0 / (1.0 / (1.0 + 2.0 * nbar_eff) + coop); };
  double prev = xi(0.01);
  for (double c = 0.02; c < 50.0; c *= 1.3) {
    const double v = xi(c);
    CHECK(v < prev);
    prev = v;
    if (c > 1.0) CHECK(v < 1.0);
    if (c < 1.0) CHECK(v > 1.0);
  }
}

TEST_CASE("larmor frequency") {
  const double gamma_f = two_pi * 0.69644128e6 / 1e-4;  // rad/(s T)
  const double b0 = 2.81e-4;                            // T
  const double up = larmor_frequency(gamma_f, b0, +1);
  const double down = larmor_frequency(gamma_f, -b0, -1);
  CHECK(up == -down);
  CHECK(std::abs(up) == doctest::Approx(two_pi * 1.957e6).epsilon(1e-4));
  CHECK(larmor_frequency(gamma_f, 2.0 * b0, +1) == doctest::Approx(2.0 * up));
  CHECK_THROWS_AS(larmor_frequency(gamma_f, 0.0, 1), ConfigError);
}

TEST_CASE("design study reproduces the upgrade estimates") {
  AtomCavityPhysical phys;
  phys.alpha1_ref = 1.36e-8;
  phys.reference_detuning = two_pi * 1e9;
  phys.n_atoms = 1e7;
  phys.f_spin = 2.0;
  phys.gamma_se = two_pi * 6.1e6;
  phys.d0 = 300.0;
  phys.g0 = two_pi * 220.0;
  phys.kappa = two_pi * 63e6;
  phys.eta_c = 0.9;
  phys.phi_flux = 3.93e15;

  OscillatorMode mech;
  mech.label = ModeLabel::membrane;
  mech.omega = two_pi * 1.957e6;
  mech.gamma0 = mech.omega / 5e7;  // Q = 5e7
  mech.nbar = thermal_occupancy(5.0, mech.omega);

  const LoopConfig loop = LoopConfig::uniform(0.9, kPi);
  const auto grid = linspace(-two_pi * 300e9, -two_pi * 10e9, 30);
  const auto table = design_study(phys, mech, loop, grid);

  // cold membrane with improved quality factor
  CHECK(table.front().gamma_th_m / two_pi == doctest::Approx(2e3).epsilon(0.10));
  // room-temperature occupancy
  CHECK(thermal_occupancy(295.0, mech.omega) == doctest::Approx(3e6).epsilon(0.05));

  // detuning scaling: doubling Delta_a cuts Gamma_s and gamma_sc by four
  const std::vector<double> pair = {-two_pi * 40e9, -two_pi * 80e9};
  const auto two = design_study(phys, mech, loop, pair);
  CHECK(two[1].gamma_s_meas == doctest::Approx(two[0].gamma_s_meas / 4.0).epsilon(1e-12));
  CHECK(two[1].gamma_sc == doctest::Approx(two[0].gamma_sc / 4.0).epsilon(1e-12));
  for (const auto& p : table) CHECK(p.cs_ratio == doctest::Approx(300.0 / 16.0).epsilon(1e-12));

  // photon-flux linearity of every optically induced rate
  AtomCavityPhysical phys2 = phys;
  phys2.phi_flux *= 2.0;
  const auto doubled = design_study(phys2, mech, loop, pair);
  CHECK(doubled[0].gamma_s_meas == doctest::Approx(2.0 * two[0].gamma_s_meas));
  CHECK(doubled[0].gamma_m_meas == doctest::Approx(2.0 * two[0].gamma_m_meas));
  CHECK(doubled[0].gamma_sc == doctest::Approx(2.0 * two[0].gamma_sc));
  CHECK(doubled[0].g == doctest::Approx(2.0 * two[0].g));

  CHECK_THROWS_AS(design_study(phys, mech, loop, std::vector<double>{0.0}), ConfigError);

  // mirrored layout suppresses membrane back-action instead
  const auto mirrored = design_study(phys, mech, loop, pair, LoopTarget::membrane);
  CHECK(mirrored[0].gamma_tot_s > 0.0);
  CHECK(mirrored[0].g == doctest::Approx(two[0].g));
}

TEST_CASE("validation rejects unphysical inputs") {
  SystemModel m = squeezing_params();
  m.spin.gamma0 = -1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = squeezing_params();
  m.loop.eta12 = 1.5;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = squeezing_params();
  m.loop.tau = -1e-9;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
