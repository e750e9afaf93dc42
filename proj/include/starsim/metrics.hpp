#pragma once

#include <vector>

#include <Eigen/Dense>

#include "starsim/scenario.hpp"
#include "starsim/starris.hpp"

namespace starsim::metrics {

// BS precoding matrices, one M x K_i block per region; column k serves user k.
struct BeamformerSet {
  std::vector<Eigen::MatrixXcd> w;

  int regions() const { return static_cast<int>(w.size()); }
  // sum_i tr(W_i W_i^H)
  double transmit_power_watt() const;
  int total_users() const;
  int flat_index(int region, int k) const;  // 0-based region
};

// Scale the whole set so the transmit power equals p_max exactly.
BeamformerSet normalize_beamformer(const BeamformerSet& w, double p_max_watt);

// SINR of user (region, k): own beam over same-region plus other-region
// interference, all measured through the victim's own effective channel.
// `region` and `k` are 0-based here; omegas are in flat user order.
double sinr(int region, int k, const std::vector<Eigen::RowVectorXcd>& omegas,
            const BeamformerSet& w, double noise_watt);

double sum_rate(const std::vector<double>& sinrs, double bandwidth_hz);

double total_power(const std::vector<starris::SurfaceState>& states,
                   const BeamformerSet& w, double element_power_watt);

struct LinkMetrics {
  std::vector<double> sinr;                           // flat user order
  double sum_rate_bps = 0.0;
  double total_power_watt = 0.0;
  double energy_efficiency = 0.0;                     // bits per joule
  std::vector<std::vector<double>> per_element_power; // [surface][element], watts
};

LinkMetrics evaluate(const std::vector<starris::SurfaceState>& states,
                     const BeamformerSet& w,
                     const std::vector<Eigen::RowVectorXcd>& omegas,
                     const scenario::ScenarioConfig& config);

double energy_efficiency(const std::vector<starris::SurfaceState>& states,
                         const BeamformerSet& w,
                         const std::vector<Eigen::RowVectorXcd>& omegas,
                         const scenario::ScenarioConfig& config);

}  // namespace starsim::metrics
