#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "starsim/starris.hpp"

using namespace starsim;
using std::numbers::pi;

TEST_CASE("coupled amplitude") {
  CHECK(starris::coupled_amplitude(1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(starris::coupled_amplitude(1.0 / std::sqrt(2.0)) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(starris::coupled_amplitude(0.6) == doctest::Approx(0.8).epsilon(1e-12));  // sqrt(1-0.36)
  CHECK_THROWS_AS(starris::coupled_amplitude(1.5), std::invalid_argument);
  CHECK_THROWS_AS(starris::coupled_amplitude(-0.1), std::invalid_argument);
}

TEST_CASE("energy conservation over the whole amplitude range") {
  for (double b = 0.0; b <= 1.0; b += 0.01) {
    const double t = starris::coupled_amplitude(b);
    CHECK(b * b + t * t == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("coupled phase") {
  CHECK(starris::coupled_phase(0.0, 1) == doctest::Approx(pi / 2).epsilon(1e-12));
  CHECK(starris::coupled_phase(3 * pi / 2, 1) == doctest::Approx(0.0).epsilon(1e-12));
  // pi/4 - pi/2 wrapped by hand
  CHECK(starris::coupled_phase(pi / 4, -1) == doctest::Approx(7 * pi / 4).epsilon(1e-12));
  CHECK_THROWS_AS(starris::coupled_phase(-0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(starris::coupled_phase(2 * pi, 1), std::invalid_argument);
}

TEST_CASE("build_theta examples") {
  starris::SurfaceState s;
  s.alpha = {0, 1, 1};
  s.beta_r = {0.5, 1.0, 0.6};
  s.theta_r = {1.0, 0.0, 0.0};
  s.phase_sign = {1, 1, 1};
  const auto pair = starris::build_theta(s);

  // off element annihilates both sides
  CHECK(std::abs(pair.r_diag[0]) == 0.0);
  CHECK(std::abs(pair.t_diag[0]) == 0.0);
  // full reflection boundary
  CHECK(pair.r_diag[1].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(pair.t_diag[1]) == doctest::Approx(0.0).epsilon(1e-12));
  // beta 0.6 -> reflection 0.6, transmission 0.8j
  CHECK(pair.r_diag[2].real() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(pair.t_diag[2].real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pair.t_diag[2].imag() == doctest::Approx(0.8).epsilon(1e-12));

  const auto m = pair.theta_t_matrix();
  CHECK(m.rows() == 3);
  CHECK(std::abs(m(0, 1)) == 0.0);  // diagonal structure
}

TEST_CASE("theta invariants over random states") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ub(0.0, 1.0);
  std::uniform_real_distribution<double> ut(0.0, 2 * pi);
  for (int trial = 0; trial < 200; ++trial) {
    starris::SurfaceState s;
    const int n = 8;
    for (int i = 0; i < n; ++i) {
      s.alpha.push_back(rng() % 2);
      s.beta_r.push_back(ub(rng));
      s.theta_r.push_back(std::min(ut(rng), std::nextafter(2 * pi, 0.0)));
      s.phase_sign.push_back(rng() % 2 ? 1 : -1);
    }
    const auto pair = starris::build_theta(s);
    for (int i = 0; i < n; ++i) {
      const double rr = std::norm(pair.r_diag[i]);
      const double tt = std::norm(pair.t_diag[i]);
      if (s.alpha[i] == 0) {
        CHECK(rr == 0.0);
        CHECK(tt == 0.0);
      } else {
        CHECK(rr + tt == doctest::Approx(1.0).epsilon(1e-12));
        if (s.beta_r[i] > 1e-6 && s.beta_r[i] < 1.0 - 1e-6) {
          // transmission phase sits exactly +/- pi/2 from the reflection phase
          double diff = std::arg(pair.t_diag[i]) - std::arg(pair.r_diag[i]);
          diff = std::remainder(diff, 2 * pi);
          CHECK(std::abs(std::abs(diff) - pi / 2) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("mode-switching degeneracy keeps the coupling") {
  // beta pinned to 0 or 1 is a pure-transmit or pure-reflect element
  starris::SurfaceState s;
  s.alpha = {1, 1};
  s.beta_r = {0.0, 1.0};
  s.theta_r = {pi / 3, pi / 3};
  s.phase_sign = {-1, 1};
  const auto pair = starris::build_theta(s);
  CHECK(std::abs(pair.r_diag[0]) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(pair.t_diag[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(pair.r_diag[1]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(pair.t_diag[1]) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("surface power") {
  starris::SurfaceState s = starris::SurfaceState::all_off(16);
  const double p = 0.0501187;  // 17 dBm
  CHECK(starris::surface_power_watt(s, p) == 0.0);
  for (int i = 0; i < 16; ++i) s.alpha[i] = 1;
  CHECK(starris::surface_power_watt(s, p) == doctest::Approx(0.8019).epsilon(1e-3));
  for (int i = 0; i < 8; ++i) s.alpha[i] = 0;
  CHECK(starris::surface_power_watt(s, p) == doctest::Approx(0.40095).epsilon(1e-3));
}

TEST_CASE("surface power is monotone in the on-count") {
  starris::SurfaceState s = starris::SurfaceState::all_off(10);
  double prev = starris::surface_power_watt(s, 0.05);
  for (int i = 0; i < 10; ++i) {
    s.alpha[i] = 1;
    const double cur = starris::surface_power_watt(s, 0.05);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("invalid states are rejected") {
  starris::SurfaceState s;
  s.alpha = {2};
  s.beta_r = {0.5};
  s.theta_r = {0.0};
  s.phase_sign = {1};
  CHECK_THROWS_AS(starris::build_theta(s), std::invalid_argument);
  s.alpha = {1};
  s.beta_r = {1.5};
  CHECK_THROWS_AS(starris::build_theta(s), std::invalid_argument);
}
