#include "starsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace starsim::scenario {

double dbm_to_watt(double level_dbm) {
  if (!std::isfinite(level_dbm)) {
    throw std::invalid_argument("dbm_to_watt: non-finite input");
  }
  return std::pow(10.0, (level_dbm - 30.0) / 10.0);
}

double watt_to_dbm(double watts) {
  if (!(watts > 0.0) || !std::isfinite(watts)) {
    throw std::invalid_argument("watt_to_dbm: input must be positive and finite");
  }
  return 30.0 + 10.0 * std::log10(watts);
}

double noise_power_watt(double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
    throw std::invalid_argument("noise_power_watt: bandwidth must be positive");
  }
  return dbm_to_watt(-174.0 + 10.0 * std::log10(bandwidth_hz));
}

double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

int ScenarioConfig::total_users() const {
  return std::accumulate(users_per_region.begin(), users_per_region.end(), 0);
}

int ScenarioConfig::user_flat_index(int region, int k) const {
  int base = 0;
  for (int i = 0; i < region; ++i) base += users_per_region[i];
  return base + k;
}

void ScenarioConfig::validate() const {
  if (m_antennas < 1) throw std::invalid_argument("config: m_antennas must be >= 1");
  if (n_elements < 1) throw std::invalid_argument("config: n_elements must be >= 1");
  if (v_surfaces < 1) throw std::invalid_argument("config: v_surfaces must be >= 1");
  if (i_regions != v_surfaces + 1) {
    throw std::invalid_argument("config: i_regions must equal v_surfaces + 1");
  }
  if (static_cast<int>(users_per_region.size()) != i_regions) {
    throw std::invalid_argument("config: users_per_region must have one entry per region");
  }
  for (int k : users_per_region) {
    if (k < 0) throw std::invalid_argument("config: negative user count");
  }
  if (total_users() < 1) throw std::invalid_argument("config: no users");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("config: bandwidth_hz must be > 0");
  if (!(carrier_ghz > 0.0)) throw std::invalid_argument("config: carrier_ghz must be > 0");
  if (!(surface_spacing_m > 0.0)) throw std::invalid_argument("config: surface_spacing_m must be > 0");
  if (!(rician_factor >= 0.0)) throw std::invalid_argument("config: rician_factor must be >= 0");
  if (!std::isfinite(bs_power_budget_dbm) || !std::isfinite(element_power_dbm)) {
    throw std::invalid_argument("config: power levels must be finite");
  }
  // Users are drawn over [0, 5*spacing]; a populated region must have positive
  // width inside the strip or placement resampling cannot terminate.
  for (int i = 0; i < i_regions; ++i) {
    if (users_per_region[i] > 0 && i >= 5) {
      throw std::invalid_argument("config: region " + std::to_string(i + 1) +
                                  " lies outside the [0, 5*spacing] strip but has users");
    }
  }
}

namespace {

const char* kConfigKeys[] = {
    "m_antennas",      "n_elements",        "v_surfaces",        "i_regions",
    "users_per_region", "bandwidth_hz",     "carrier_ghz",       "bs_power_budget_dbm",
    "element_power_dbm", "rician_factor",   "surface_spacing_m", "master_seed",
};

bool known_config_key(const std::string& key) {
  for (const char* k : kConfigKeys) {
    if (key == k) return true;
  }
  return false;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  for (const auto& item : j.items()) {
    if (!known_config_key(item.key())) {
      throw std::invalid_argument("config: unknown key '" + item.key() + "'");
    }
  }
  ScenarioConfig c;
  if (j.contains("m_antennas")) c.m_antennas = j.at("m_antennas").get<int>();
  if (j.contains("n_elements")) c.n_elements = j.at("n_elements").get<int>();
  if (j.contains("v_surfaces")) c.v_surfaces = j.at("v_surfaces").get<int>();
  if (j.contains("i_regions")) {
    c.i_regions = j.at("i_regions").get<int>();
  } else if (j.contains("v_surfaces")) {
    c.i_regions = c.v_surfaces + 1;
  }
  if (j.contains("users_per_region")) {
    c.users_per_region = j.at("users_per_region").get<std::vector<int>>();
  } else if (j.contains("v_surfaces") || j.contains("i_regions")) {
    // Re-spread the default total over the requested regions.
    int total = 10;
    c.users_per_region.assign(c.i_regions, total / c.i_regions);
    for (int i = 0; i < total % c.i_regions; ++i) c.users_per_region[i] += 1;
  }
  if (j.contains("bandwidth_hz")) c.bandwidth_hz = j.at("bandwidth_hz").get<double>();
  if (j.contains("carrier_ghz")) c.carrier_ghz = j.at("carrier_ghz").get<double>();
  if (j.contains("bs_power_budget_dbm")) c.bs_power_budget_dbm = j.at("bs_power_budget_dbm").get<double>();
  if (j.contains("element_power_dbm")) c.element_power_dbm = j.at("element_power_dbm").get<double>();
  if (j.contains("rician_factor")) c.rician_factor = j.at("rician_factor").get<double>();
  if (j.contains("surface_spacing_m")) c.surface_spacing_m = j.at("surface_spacing_m").get<double>();
  if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json ScenarioConfig::to_json() const {
  return nlohmann::json{
      {"m_antennas", m_antennas},
      {"n_elements", n_elements},
      {"v_surfaces", v_surfaces},
      {"i_regions", i_regions},
      {"users_per_region", users_per_region},
      {"bandwidth_hz", bandwidth_hz},
      {"carrier_ghz", carrier_ghz},
      {"bs_power_budget_dbm", bs_power_budget_dbm},
      {"element_power_dbm", element_power_dbm},
      {"rician_factor", rician_factor},
      {"surface_spacing_m", surface_spacing_m},
      {"master_seed", master_seed},
  };
}

int region_of_x(double x, double spacing_m, int i_regions) {
  int i = static_cast<int>(std::floor(x / spacing_m)) + 1;
  if (i < 1) i = 1;
  if (i > i_regions) i = i_regions;  // last region extends to the strip edge
  return i;
}

Geometry make_geometry(const ScenarioConfig& config) {
  Geometry g;
  g.bs_position = {0.0, 0.0};
  g.surface_positions.resize(config.v_surfaces);
  for (int v = 0; v < config.v_surfaces; ++v) {
    g.surface_positions[v] = {v * config.surface_spacing_m, config.surface_spacing_m};
  }
  g.user_positions.assign(config.i_regions, {});
  return g;
}

Geometry sample_user_positions(const ScenarioConfig& config, std::mt19937_64& rng) {
  config.validate();
  Geometry g = make_geometry(config);
  const int total = config.total_users();
  const double spacing = config.surface_spacing_m;
  std::uniform_real_distribution<double> ux(0.0, 5.0 * spacing);
  std::uniform_real_distribution<double> uy(0.0, spacing);

  std::vector<Point2> draw(total);
  std::vector<int> counts(config.i_regions);
  while (true) {
    for (auto& p : draw) p = {ux(rng), uy(rng)};
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& p : draw) {
      counts[region_of_x(p.x, spacing, config.i_regions) - 1] += 1;
    }
    bool match = true;
    for (int i = 0; i < config.i_regions; ++i) {
      if (counts[i] != config.users_per_region[i]) { match = false; break; }
    }
    if (match) break;
  }
  for (auto& region : g.user_positions) region.clear();
  for (const auto& p : draw) {
    g.user_positions[region_of_x(p.x, spacing, config.i_regions) - 1].push_back(p);
  }
  return g;
}

std::mt19937_64 RngStreams::make(Stream stream, std::uint32_t index) const {
  std::seed_seq seq{
      static_cast<std::uint32_t>(master_seed_ & 0xffffffffu),
      static_cast<std::uint32_t>(master_seed_ >> 32),
      static_cast<std::uint32_t>(stream),
      index,
  };
  return std::mt19937_64(seq);
}

}  // namespace starsim::scenario
