#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "starsim/scenario.hpp"
#include "starsim/starris.hpp"

namespace starsim::channel {

// All multi-hop signal routes: non-empty strictly increasing tuples of 1-based
// surface indices, grouped by hop count, lexicographic within a group.
struct PathTable {
  std::vector<std::vector<int>> paths;

  std::size_t size() const { return paths.size(); }
};

PathTable enumerate_paths(int v_surfaces);

// Distance-based pathloss: 32.4 + 20 log10(freq_GHz) + 21 log10(dist_m) dB.
// Distances below 1 m are clamped to 1 m (the log model diverges at 0).
double pathloss_db(double carrier_ghz, double distance_m);
double pathloss_linear(double carrier_ghz, double distance_m);

// One sampled set of all link matrices for a fixed geometry. Every link is
// Rician: H = (1/sqrt(rho)) * (sqrt(K/(K+1)) * LoS + sqrt(1/(K+1)) * NLoS).
struct ChannelRealization {
  int m = 0;  // BS antennas
  int n = 0;  // elements per surface
  int v = 0;  // surfaces
  std::vector<Eigen::VectorXcd> direct;                     // [flat user], M
  std::vector<std::vector<Eigen::VectorXcd>> transmit_link; // [surface][flat user], N
  std::vector<std::vector<Eigen::VectorXcd>> reflect_link;  // [surface][flat user], N
  std::vector<Eigen::MatrixXcd> bs_to_surface;              // [surface], M x N
  std::vector<Eigen::MatrixXcd> surface_to_surface;         // packed pairs v < v', N x N

  // Packed index of the ordered pair (v, v'), 1-based, v < v'.
  static int pair_index(int v, int v_prime, int v_surfaces);
  const Eigen::MatrixXcd& hop(int v, int v_prime) const;  // v < v', 1-based
};

ChannelRealization sample_channel(const scenario::Geometry& geometry,
                                  const scenario::ScenarioConfig& config,
                                  std::mt19937_64& rng);

// Cascaded product of one route: hop l feeds hop l+1 through the transmission
// response of the intermediate surface; a single-hop route is the BS link
// itself. Result is N x M.
Eigen::MatrixXcd cascade_product(const std::vector<int>& path,
                                 const ChannelRealization& realization,
                                 const std::vector<starris::ThetaPair>& thetas);

struct EffectiveChannel {
  Eigen::RowVectorXcd omega;  // 1 x M
};

// Effective BS->user channel: direct term plus every route, where the final
// surface transmits if its index is below the user's region and reflects
// otherwise. `region` is 1-based; `flat_user` is the region-major user index.
EffectiveChannel effective_channel(int region, int flat_user,
                                   const ChannelRealization& realization,
                                   const std::vector<starris::ThetaPair>& thetas,
                                   const PathTable& table);

// Same sum evaluated for every user at once, sharing the per-route cascades.
std::vector<Eigen::RowVectorXcd> effective_channels_all_users(
    const scenario::ScenarioConfig& config, const ChannelRealization& realization,
    const std::vector<starris::ThetaPair>& thetas, const PathTable& table);

// Binary dump for cross-implementation checks: dimensions header followed by
// row-major complex64 (float32 re, float32 im) blocks, little-endian.
void save_realization(const std::string& path, const ChannelRealization& realization);
ChannelRealization load_realization(const std::string& path);

}  // namespace starsim::channel
