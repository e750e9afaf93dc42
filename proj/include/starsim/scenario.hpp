#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace starsim::scenario {

// ---- unit conversions (all internal arithmetic is linear watts) ----

double dbm_to_watt(double level_dbm);
double watt_to_dbm(double watts);

// Thermal noise power for a given bandwidth: -174 + 10 log10(B) dBm.
double noise_power_watt(double bandwidth_hz);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

// All physical and topological constants of one deployment.
struct ScenarioConfig {
  int m_antennas = 5;                          // M
  int n_elements = 16;                         // N, uniform across surfaces
  int v_surfaces = 3;                          // V
  int i_regions = 4;                           // I, must equal V + 1
  std::vector<int> users_per_region = {3, 3, 2, 2};  // K_i
  double bandwidth_hz = 1e8;                   // B
  double carrier_ghz = 28.0;                   // operating frequency, GHz
  double bs_power_budget_dbm = 33.0;           // P_max
  double element_power_dbm = 17.0;             // p, per active element
  double rician_factor = 3.0;                  // K (linear); unstated in the source system, configurable
  double surface_spacing_m = 10.0;             // inter-surface distance
  std::uint64_t master_seed = 1;

  int total_users() const;
  double bs_power_budget_watt() const { return dbm_to_watt(bs_power_budget_dbm); }
  double element_power_watt() const { return dbm_to_watt(element_power_dbm); }
  double noise_watt() const { return noise_power_watt(bandwidth_hz); }

  // Flat user index, region-major: (i, k) -> sum(K_1..K_{i-1}) + k. Both 0-based.
  int user_flat_index(int region, int k) const;

  void validate() const;  // throws std::invalid_argument on any violated invariant

  // JSON round-trip. Unknown keys are a hard error (catches typos).
  static ScenarioConfig from_json(const nlohmann::json& j);
  static ScenarioConfig from_json_file(const std::string& path);
  nlohmann::json to_json() const;
};

// Node placement. Surfaces sit at y = spacing, x = (v-1) * spacing; the BS is at the origin.
struct Geometry {
  Point2 bs_position;
  std::vector<Point2> surface_positions;             // size V
  std::vector<std::vector<Point2>> user_positions;   // [region][k]
};

// Region of a point by x-coordinate: region i covers [(i-1)*spacing, i*spacing),
// the last region extends to the strip edge. Returns a 1-based region index.
int region_of_x(double x, double spacing_m, int i_regions);

Geometry make_geometry(const ScenarioConfig& config);  // BS + surfaces, no users

// Draw user positions uniformly over the strip [0, 5*spacing] x [0, spacing] and
// resample whole placements until the per-region counts match users_per_region.
Geometry sample_user_positions(const ScenarioConfig& config, std::mt19937_64& rng);

// Named, independently seeded random substreams. Two runs with the same master
// seed and config consume identical streams and are bit-identical.
enum class Stream : std::uint32_t {
  UserPlacement = 1,
  Channel = 2,
  Exploration = 3,
  Replay = 4,
  WeightInit = 5,
  OnOffPolicy = 6,
};

class RngStreams {
 public:
  explicit RngStreams(std::uint64_t master_seed) : master_seed_(master_seed) {}

  std::uint64_t master_seed() const { return master_seed_; }

  // A fresh engine for (stream, index); index separates per-agent streams.
  std::mt19937_64 make(Stream stream, std::uint32_t index = 0) const;

 private:
  std::uint64_t master_seed_;
};

}  // namespace starsim::scenario
