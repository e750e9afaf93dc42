#include "starsim/channel.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace starsim::channel {

using scenario::Point2;
using Complex = std::complex<double>;

PathTable enumerate_paths(int v_surfaces) {
  if (v_surfaces < 1) throw std::invalid_argument("enumerate_paths: need at least one surface");
  PathTable table;
  // Combinations of {1..V} in ascending order, grouped by length j,
  // lexicographic within each group.
  for (int j = 1; j <= v_surfaces; ++j) {
    std::vector<int> tuple(j);
    for (int i = 0; i < j; ++i) tuple[i] = i + 1;
    while (true) {
      table.paths.push_back(tuple);
      int pos = j - 1;
      while (pos >= 0 && tuple[pos] == v_surfaces - (j - 1 - pos)) --pos;
      if (pos < 0) break;
      tuple[pos] += 1;
      for (int i = pos + 1; i < j; ++i) tuple[i] = tuple[i - 1] + 1;
    }
  }
  return table;
}

double pathloss_db(double carrier_ghz, double distance_m) {
  if (!(carrier_ghz > 0.0) || !(distance_m > 0.0)) {
    throw std::invalid_argument("pathloss_db: inputs must be positive");
  }
  if (distance_m < 1.0) {
    std::cerr << "pathloss_db: clamping distance " << distance_m << " m to 1 m\n";
    distance_m = 1.0;
  }
  return 32.4 + 20.0 * std::log10(carrier_ghz) + 21.0 * std::log10(distance_m);
}

double pathloss_linear(double carrier_ghz, double distance_m) {
  return std::pow(10.0, pathloss_db(carrier_ghz, distance_m) / 10.0);
}

int ChannelRealization::pair_index(int v, int v_prime, int v_surfaces) {
  // Upper-triangular packing of (v, v'), v < v', both 1-based.
  const int a = v - 1;
  const int b = v_prime - 1;
  return a * v_surfaces - a * (a + 1) / 2 + (b - a - 1);
}

const Eigen::MatrixXcd& ChannelRealization::hop(int v_idx, int v_prime) const {
  return surface_to_surface[pair_index(v_idx, v_prime, v)];
}

namespace {

// Steering vector of a half-wavelength linear array along x: entry m is
// exp(j * pi * m * cos_angle).
Eigen::VectorXcd steering(int count, double cos_angle) {
  Eigen::VectorXcd a(count);
  for (int m = 0; m < count; ++m) {
    a[m] = std::polar(1.0, std::numbers::pi * m * cos_angle);
  }
  return a;
}

double cos_toward(const Point2& from, const Point2& to, double dist) {
  return (to.x - from.x) / dist;
}

struct LinkSampler {
  double carrier_ghz;
  double k_factor;
  std::mt19937_64& rng;
  std::normal_distribution<double> gauss{0.0, 1.0};

  // rows receive at `rx`, cols transmit at `tx`.
  Eigen::MatrixXcd rician(int rows, int cols, const Point2& tx, const Point2& rx) {
    const double dist = scenario::distance(tx, rx);
    if (dist == 0.0) throw std::invalid_argument("sample_channel: co-located nodes");
    const double rho = pathloss_linear(carrier_ghz, dist);
    const Eigen::VectorXcd a_rx = steering(rows, cos_toward(rx, tx, dist));
    const Eigen::VectorXcd a_tx = steering(cols, cos_toward(tx, rx, dist));
    const Eigen::MatrixXcd los = a_rx * a_tx.adjoint();

    Eigen::MatrixXcd nlos(rows, cols);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        nlos(r, c) = Complex(gauss(rng) * inv_sqrt2, gauss(rng) * inv_sqrt2);
      }
    }
    const double los_w = std::sqrt(k_factor / (k_factor + 1.0));
    const double nlos_w = std::sqrt(1.0 / (k_factor + 1.0));
    return (1.0 / std::sqrt(rho)) * (los_w * los + nlos_w * nlos);
  }

  Eigen::VectorXcd rician_vec(int rows, const Point2& tx, const Point2& rx) {
    return rician(rows, 1, tx, rx).col(0);
  }
};

}  // namespace

ChannelRealization sample_channel(const scenario::Geometry& geometry,
                                  const scenario::ScenarioConfig& config,
                                  std::mt19937_64& rng) {
  config.validate();
  ChannelRealization out;
  out.m = config.m_antennas;
  out.n = config.n_elements;
  out.v = config.v_surfaces;

  LinkSampler sampler{config.carrier_ghz, config.rician_factor, rng};

  std::vector<Point2> users;
  for (const auto& region : geometry.user_positions) {
    users.insert(users.end(), region.begin(), region.end());
  }
  const int total_users = static_cast<int>(users.size());

  // Sampling order is fixed: direct links, then BS->surface, then per-surface
  // user links, then inter-surface hops. Determinism depends on this order.
  out.direct.reserve(total_users);
  for (const auto& u : users) {
    out.direct.push_back(sampler.rician_vec(out.m, u, geometry.bs_position));
  }
  out.bs_to_surface.reserve(out.v);
  for (int v = 0; v < out.v; ++v) {
    // Stored M x N: rows at the BS, columns at the surface.
    out.bs_to_surface.push_back(
        sampler.rician(out.m, out.n, geometry.surface_positions[v], geometry.bs_position));
  }
  out.transmit_link.resize(out.v);
  out.reflect_link.resize(out.v);
  for (int v = 0; v < out.v; ++v) {
    for (const auto& u : users) {
      out.transmit_link[v].push_back(sampler.rician_vec(out.n, u, geometry.surface_positions[v]));
      out.reflect_link[v].push_back(sampler.rician_vec(out.n, u, geometry.surface_positions[v]));
    }
  }
  for (int v = 1; v <= out.v; ++v) {
    for (int vp = v + 1; vp <= out.v; ++vp) {
      // rows at the destination surface v', columns at the source surface v.
      out.surface_to_surface.push_back(sampler.rician(
          out.n, out.n, geometry.surface_positions[v - 1], geometry.surface_positions[vp - 1]));
    }
  }
  return out;
}

Eigen::MatrixXcd cascade_product(const std::vector<int>& path,
                                 const ChannelRealization& realization,
                                 const std::vector<starris::ThetaPair>& thetas) {
  if (path.empty()) throw std::invalid_argument("cascade_product: empty path");
  // Signal enters at the first surface; each intermediate surface applies its
  // transmission response before the hop to the next one.
  Eigen::MatrixXcd cur = realization.bs_to_surface[path[0] - 1].transpose();  // N x M
  for (std::size_t l = 0; l + 1 < path.size(); ++l) {
    const int from = path[l];
    const int to = path[l + 1];
    cur = realization.surface_to_surface[ChannelRealization::pair_index(from, to, realization.v)] *
          (thetas[from - 1].t_diag.asDiagonal() * cur);
  }
  return cur;
}

EffectiveChannel effective_channel(int region, int flat_user,
                                   const ChannelRealization& realization,
                                   const std::vector<starris::ThetaPair>& thetas,
                                   const PathTable& table) {
  EffectiveChannel ec;
  ec.omega = realization.direct[flat_user].adjoint();
  for (const auto& path : table.paths) {
    const int last = path.back();
    const Eigen::MatrixXcd cascade = cascade_product(path, realization, thetas);
    Eigen::RowVectorXcd head;
    if (last < region) {
      head = realization.transmit_link[last - 1][flat_user].adjoint() *
             thetas[last - 1].t_diag.asDiagonal();
    } else {
      head = realization.reflect_link[last - 1][flat_user].adjoint() *
             thetas[last - 1].r_diag.asDiagonal();
    }
    ec.omega += head * cascade;
  }
  return ec;
}

std::vector<Eigen::RowVectorXcd> effective_channels_all_users(
    const scenario::ScenarioConfig& config, const ChannelRealization& realization,
    const std::vector<starris::ThetaPair>& thetas, const PathTable& table) {
  // Cascades are user-independent; compute them once per call.
  std::vector<Eigen::MatrixXcd> cascades;
  cascades.reserve(table.paths.size());
  for (const auto& path : table.paths) {
    cascades.push_back(cascade_product(path, realization, thetas));
  }

  std::vector<Eigen::RowVectorXcd> omegas(config.total_users());
  for (int region = 1; region <= config.i_regions; ++region) {
    for (int k = 0; k < config.users_per_region[region - 1]; ++k) {
      const int u = config.user_flat_index(region - 1, k);
      Eigen::RowVectorXcd omega = realization.direct[u].adjoint();
      for (std::size_t p = 0; p < table.paths.size(); ++p) {
        const int last = table.paths[p].back();
        if (last < region) {
          omega += (realization.transmit_link[last - 1][u].adjoint() *
                    thetas[last - 1].t_diag.asDiagonal()) *
                   cascades[p];
        } else {
          omega += (realization.reflect_link[last - 1][u].adjoint() *
                    thetas[last - 1].r_diag.asDiagonal()) *
                   cascades[p];
        }
      }
      omegas[u] = std::move(omega);
    }
  }
  return omegas;
}

namespace {

constexpr char kMagic[4] = {'S', 'R', 'C', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t value = 0;
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  return value;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXcd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float re = static_cast<float>(m(r, c).real());
      const float im = static_cast<float>(m(r, c).imag());
      out.write(reinterpret_cast<const char*>(&re), sizeof(re));
      out.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
  }
}

Eigen::MatrixXcd read_matrix(std::istream& in, int rows, int cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      float re = 0.0f, im = 0.0f;
      in.read(reinterpret_cast<char*>(&re), sizeof(re));
      in.read(reinterpret_cast<char*>(&im), sizeof(im));
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

}  // namespace

void save_realization(const std::string& path, const ChannelRealization& realization) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_realization: cannot open '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(realization.m));
  write_u32(out, static_cast<std::uint32_t>(realization.n));
  write_u32(out, static_cast<std::uint32_t>(realization.v));
  write_u32(out, static_cast<std::uint32_t>(realization.direct.size()));
  for (const auto& d : realization.direct) write_matrix(out, d);
  for (const auto& phi : realization.bs_to_surface) write_matrix(out, phi);
  for (const auto& per_surface : realization.transmit_link) {
    for (const auto& g : per_surface) write_matrix(out, g);
  }
  for (const auto& per_surface : realization.reflect_link) {
    for (const auto& f : per_surface) write_matrix(out, f);
  }
  for (const auto& hop : realization.surface_to_surface) write_matrix(out, hop);
  if (!out) throw std::runtime_error("save_realization: write failed");
}

ChannelRealization load_realization(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_realization: cannot open '" + path + "'");
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("load_realization: bad magic");
  }
  if (read_u32(in) != kVersion) throw std::runtime_error("load_realization: bad version");
  ChannelRealization out;
  out.m = static_cast<int>(read_u32(in));
  out.n = static_cast<int>(read_u32(in));
  out.v = static_cast<int>(read_u32(in));
  const int users = static_cast<int>(read_u32(in));
  for (int u = 0; u < users; ++u) out.direct.push_back(read_matrix(in, out.m, 1).col(0));
  for (int v = 0; v < out.v; ++v) out.bs_to_surface.push_back(read_matrix(in, out.m, out.n));
  out.transmit_link.resize(out.v);
  for (int v = 0; v < out.v; ++v) {
    for (int u = 0; u < users; ++u) out.transmit_link[v].push_back(read_matrix(in, out.n, 1).col(0));
  }
  out.reflect_link.resize(out.v);
  for (int v = 0; v < out.v; ++v) {
    for (int u = 0; u < users; ++u) out.reflect_link[v].push_back(read_matrix(in, out.n, 1).col(0));
  }
  const int pairs = out.v * (out.v - 1) / 2;
  for (int p = 0; p < pairs; ++p) out.surface_to_surface.push_back(read_matrix(in, out.n, out.n));
  if (!in) throw std::runtime_error("load_realization: truncated file");
  return out;
}

}  // namespace starsim::channel
