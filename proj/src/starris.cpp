#include "starsim/starris.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace starsim::starris {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double coupled_amplitude(double beta_r) {
  if (!(beta_r >= 0.0 && beta_r <= 1.0)) {
    throw std::invalid_argument("coupled_amplitude: beta_r outside [0,1]");
  }
  return std::sqrt(1.0 - beta_r * beta_r);
}

double coupled_phase(double theta_r, int sign) {
  if (!(theta_r >= 0.0 && theta_r < kTwoPi)) {
    throw std::invalid_argument("coupled_phase: theta_r outside [0,2*pi)");
  }
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("coupled_phase: sign must be +1 or -1");
  }
  return wrap_angle(theta_r + sign * (std::numbers::pi / 2.0));
}

void SurfaceState::validate() const {
  const std::size_t n = alpha.size();
  if (beta_r.size() != n || theta_r.size() != n || phase_sign.size() != n) {
    throw std::invalid_argument("surface state: field lengths disagree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] != 0 && alpha[i] != 1) {
      throw std::invalid_argument("surface state: alpha must be 0 or 1");
    }
    if (!(beta_r[i] >= 0.0 && beta_r[i] <= 1.0)) {
      throw std::invalid_argument("surface state: beta_r outside [0,1]");
    }
    if (!(theta_r[i] >= 0.0 && theta_r[i] < kTwoPi)) {
      throw std::invalid_argument("surface state: theta_r outside [0,2*pi)");
    }
    if (phase_sign[i] != 1 && phase_sign[i] != -1) {
      throw std::invalid_argument("surface state: phase_sign must be +1 or -1");
    }
  }
}

SurfaceState SurfaceState::all_off(int n) {
  SurfaceState s;
  s.alpha.assign(n, 0);
  s.beta_r.assign(n, 1.0);
  s.theta_r.assign(n, 0.0);
  s.phase_sign.assign(n, 1);
  return s;
}

ThetaPair build_theta(const SurfaceState& state) {
  state.validate();
  const int n = state.n();
  ThetaPair pair;
  pair.t_diag.resize(n);
  pair.r_diag.resize(n);
  for (int i = 0; i < n; ++i) {
    if (state.alpha[i] == 0) {
      pair.t_diag[i] = 0.0;
      pair.r_diag[i] = 0.0;
      continue;
    }
    const double beta_t = coupled_amplitude(state.beta_r[i]);
    const double theta_t = coupled_phase(state.theta_r[i], state.phase_sign[i]);
    pair.r_diag[i] = std::polar(state.beta_r[i], state.theta_r[i]);
    pair.t_diag[i] = std::polar(beta_t, theta_t);
  }
  return pair;
}

double surface_power_watt(const SurfaceState& state, double element_power_watt) {
  int on = 0;
  for (int a : state.alpha) on += a;
  return element_power_watt * on;
}

}  // namespace starsim::starris
