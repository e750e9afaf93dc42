#pragma once

#include <vector>

#include <Eigen/Dense>

namespace starsim::starris {

// Wrap an angle into the canonical [0, 2*pi) interval.
double wrap_angle(double a);

// Transmission amplitude coupled to the reflection amplitude by energy
// conservation: beta_t = sqrt(1 - beta_r^2).
double coupled_amplitude(double beta_r);

// Transmission phase coupled to the reflection phase: theta_r + sign * pi/2,
// wrapped into [0, 2*pi). sign must be +1 or -1.
double coupled_phase(double theta_r, int sign);

// Learnable per-surface state. The transmission-side quantities are always
// derived, never stored, so the coupling constraints hold by construction.
struct SurfaceState {
  std::vector<int> alpha;        // on-off, {0,1}
  std::vector<double> beta_r;    // reflection amplitude, [0,1]
  std::vector<double> theta_r;   // reflection phase, [0,2*pi)
  std::vector<int> phase_sign;   // selects +pi/2 or -pi/2 for the transmission phase

  int n() const { return static_cast<int>(alpha.size()); }
  void validate() const;  // throws std::invalid_argument

  static SurfaceState all_off(int n);
};

// Combined on-off + passive-beamforming response, one diagonal per side.
struct ThetaPair {
  Eigen::VectorXcd t_diag;  // transmission side
  Eigen::VectorXcd r_diag;  // reflection side

  Eigen::MatrixXcd theta_t_matrix() const { return t_diag.asDiagonal(); }
  Eigen::MatrixXcd theta_r_matrix() const { return r_diag.asDiagonal(); }
};

// Entry n is alpha_n * beta^u_n * exp(j theta^u_n) for each side u.
ThetaPair build_theta(const SurfaceState& state);

// Per-surface consumption: element_power * (number of active elements).
double surface_power_watt(const SurfaceState& state, double element_power_watt);

}  // namespace starsim::starris
