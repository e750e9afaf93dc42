#include "starsim/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace starsim::metrics {

double BeamformerSet::transmit_power_watt() const {
  double p = 0.0;
  for (const auto& wi : w) p += wi.squaredNorm();
  return p;
}

int BeamformerSet::total_users() const {
  int k = 0;
  for (const auto& wi : w) k += static_cast<int>(wi.cols());
  return k;
}

int BeamformerSet::flat_index(int region, int k) const {
  int base = 0;
  for (int i = 0; i < region; ++i) base += static_cast<int>(w[i].cols());
  return base + k;
}

BeamformerSet normalize_beamformer(const BeamformerSet& w, double p_max_watt) {
  if (!(p_max_watt > 0.0)) throw std::invalid_argument("normalize_beamformer: p_max must be > 0");
  const double power = w.transmit_power_watt();
  if (power <= 0.0) {
    throw std::invalid_argument("normalize_beamformer: all-zero beamformer");
  }
  const double scale = std::sqrt(p_max_watt / power);
  BeamformerSet out = w;
  for (auto& wi : out.w) wi *= scale;
  return out;
}

double sinr(int region, int k, const std::vector<Eigen::RowVectorXcd>& omegas,
            const BeamformerSet& w, double noise_watt) {
  const int flat = w.flat_index(region, k);
  const Eigen::RowVectorXcd& omega = omegas[flat];

  const double signal = std::norm((omega * w.w[region].col(k))(0));
  double interference = 0.0;
  for (int i = 0; i < w.regions(); ++i) {
    for (int kp = 0; kp < w.w[i].cols(); ++kp) {
      if (i == region && kp == k) continue;
      interference += std::norm((omega * w.w[i].col(kp))(0));
    }
  }
  const double denom = interference + noise_watt;
  if (denom <= 0.0) return 0.0;  // zero noise with no interference and no signal
  return signal / denom;
}

double sum_rate(const std::vector<double>& sinrs, double bandwidth_hz) {
  double rate = 0.0;
  for (double g : sinrs) {
    if (!(g >= 0.0)) throw std::invalid_argument("sum_rate: negative SINR");
    rate += bandwidth_hz * std::log2(1.0 + g);
  }
  return rate;
}

double total_power(const std::vector<starris::SurfaceState>& states,
                   const BeamformerSet& w, double element_power_watt) {
  double p = w.transmit_power_watt();
  for (const auto& s : states) p += starris::surface_power_watt(s, element_power_watt);
  return p;
}

LinkMetrics evaluate(const std::vector<starris::SurfaceState>& states,
                     const BeamformerSet& w,
                     const std::vector<Eigen::RowVectorXcd>& omegas,
                     const scenario::ScenarioConfig& config) {
  LinkMetrics out;
  const double noise = config.noise_watt();
  out.sinr.resize(config.total_users());
  for (int i = 0; i < config.i_regions; ++i) {
    for (int k = 0; k < config.users_per_region[i]; ++k) {
      out.sinr[config.user_flat_index(i, k)] = sinr(i, k, omegas, w, noise);
    }
  }
  out.sum_rate_bps = sum_rate(out.sinr, config.bandwidth_hz);
  out.total_power_watt = total_power(states, w, config.element_power_watt());
  out.energy_efficiency = out.total_power_watt > 0.0 ? out.sum_rate_bps / out.total_power_watt : 0.0;
  const double p_elem = config.element_power_watt();
  out.per_element_power.resize(states.size());
  for (std::size_t v = 0; v < states.size(); ++v) {
    out.per_element_power[v].resize(states[v].n());
    for (int n = 0; n < states[v].n(); ++n) {
      out.per_element_power[v][n] = p_elem * states[v].alpha[n];
    }
  }
  return out;
}

double energy_efficiency(const std::vector<starris::SurfaceState>& states,
                         const BeamformerSet& w,
                         const std::vector<Eigen::RowVectorXcd>& omegas,
                         const scenario::ScenarioConfig& config) {
  return evaluate(states, w, omegas, config).energy_efficiency;
}

}  // namespace starsim::metrics
