#include "starsim/marl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace starsim::marl {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::MAGAR: return "MAGAR";
    case Algorithm::MADQN: return "MADQN";
    case Algorithm::MADQN_LR: return "MADQN-LR";
    case Algorithm::QLEARNING: return "QLEARNING";
  }
  return "?";
}

std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::ES: return "ES";
    case Baseline::MS: return "MS";
    case Baseline::RIS: return "RIS";
    case Baseline::NONE: return "NONE";
  }
  return "?";
}

std::string to_string(OnOffPolicy p) {
  switch (p) {
    case OnOffPolicy::ALL_ON: return "ALL_ON";
    case OnOffPolicy::HALF_ON: return "HALF_ON";
    case OnOffPolicy::OPTIMIZED: return "OPTIMIZED";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "MAGAR") return Algorithm::MAGAR;
  if (s == "MADQN") return Algorithm::MADQN;
  if (s == "MADQN-LR" || s == "MADQN_LR") return Algorithm::MADQN_LR;
  if (s == "QLEARNING") return Algorithm::QLEARNING;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

Baseline baseline_from_string(const std::string& s) {
  if (s == "ES") return Baseline::ES;
  if (s == "MS") return Baseline::MS;
  if (s == "RIS") return Baseline::RIS;
  if (s == "NONE") return Baseline::NONE;
  throw std::invalid_argument("unknown baseline '" + s + "'");
}

OnOffPolicy policy_from_string(const std::string& s) {
  if (s == "ALL_ON") return OnOffPolicy::ALL_ON;
  if (s == "HALF_ON") return OnOffPolicy::HALF_ON;
  if (s == "OPTIMIZED") return OnOffPolicy::OPTIMIZED;
  throw std::invalid_argument("unknown on-off policy '" + s + "'");
}

void Hyperparams::validate() const {
  if (t_q < 1) throw std::invalid_argument("hyper: t_q must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("hyper: epsilon outside [0,1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("hyper: lambda outside (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("hyper: gamma outside [0,1)");
  if (slots_per_episode < 1) throw std::invalid_argument("hyper: slots_per_episode must be >= 1");
  if (episodes < 1) throw std::invalid_argument("hyper: episodes must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("hyper: batch_size must be >= 1");
  if (replay_capacity < batch_size) throw std::invalid_argument("hyper: replay_capacity < batch_size");
  if (target_sync_period < 1) throw std::invalid_argument("hyper: target_sync_period must be >= 1");
  for (int h : hidden_sizes) {
    if (h < 1) throw std::invalid_argument("hyper: hidden sizes must be positive");
  }
  if (!(net_step_size > 0.0)) throw std::invalid_argument("hyper: net_step_size must be > 0");
  if (!(net_momentum >= 0.0 && net_momentum < 1.0)) throw std::invalid_argument("hyper: net_momentum outside [0,1)");
  if (!(grad_clip_norm > 0.0)) throw std::invalid_argument("hyper: grad_clip_norm must be > 0");
  if (!(reward_scale >= 0.0)) throw std::invalid_argument("hyper: reward_scale must be >= 0");
  if (!(init_weight_scale >= 0.0)) throw std::invalid_argument("hyper: init_weight_scale must be >= 0");
  if (!(delta_beta > 0.0 && delta_beta <= 1.0)) throw std::invalid_argument("hyper: delta_beta outside (0,1]");
  if (!(delta_theta > 0.0)) throw std::invalid_argument("hyper: delta_theta must be > 0");
  const double levels = kTwoPi / delta_theta;
  if (std::abs(levels - std::round(levels)) > 1e-9 || std::round(levels) < 1.0) {
    throw std::invalid_argument("hyper: delta_theta must divide 2*pi (keeps the phase lattice closed)");
  }
  if (!(bs_step_scale > 0.0)) throw std::invalid_argument("hyper: bs_step_scale must be > 0");
  if (!(reward_power_floor_watt > 0.0)) throw std::invalid_argument("hyper: reward_power_floor_watt must be > 0");
}

namespace {

const char* kHyperKeys[] = {
    "t_q", "epsilon", "lambda", "gamma", "slots_per_episode", "episodes",
    "replay_capacity", "batch_size", "target_sync_period", "hidden_sizes",
    "net_step_size", "net_momentum", "grad_clip_norm", "init_weight_scale",
    "reward_scale", "delta_beta", "delta_theta", "bs_step_scale",
    "refade_per_episode", "reset_state_per_episode", "reward_power_floor_watt",
};

}  // namespace

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("hyper: expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : kHyperKeys) {
      if (item.key() == k) { known = true; break; }
    }
    if (!known) throw std::invalid_argument("hyper: unknown key '" + item.key() + "'");
  }
  Hyperparams h;
  if (j.contains("t_q")) h.t_q = j.at("t_q").get<int>();
  if (j.contains("epsilon")) h.epsilon = j.at("epsilon").get<double>();
  if (j.contains("lambda")) h.lambda = j.at("lambda").get<double>();
  if (j.contains("gamma")) h.gamma = j.at("gamma").get<double>();
  if (j.contains("slots_per_episode")) h.slots_per_episode = j.at("slots_per_episode").get<int>();
  if (j.contains("episodes")) h.episodes = j.at("episodes").get<int>();
  if (j.contains("replay_capacity")) h.replay_capacity = j.at("replay_capacity").get<int>();
  if (j.contains("batch_size")) h.batch_size = j.at("batch_size").get<int>();
  if (j.contains("target_sync_period")) h.target_sync_period = j.at("target_sync_period").get<int>();
  if (j.contains("hidden_sizes")) h.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  if (j.contains("net_step_size")) h.net_step_size = j.at("net_step_size").get<double>();
  if (j.contains("net_momentum")) h.net_momentum = j.at("net_momentum").get<double>();
  if (j.contains("grad_clip_norm")) h.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  if (j.contains("init_weight_scale")) h.init_weight_scale = j.at("init_weight_scale").get<double>();
  if (j.contains("reward_scale")) h.reward_scale = j.at("reward_scale").get<double>();
  if (j.contains("delta_beta")) h.delta_beta = j.at("delta_beta").get<double>();
  if (j.contains("delta_theta")) h.delta_theta = j.at("delta_theta").get<double>();
  if (j.contains("bs_step_scale")) h.bs_step_scale = j.at("bs_step_scale").get<double>();
  if (j.contains("refade_per_episode")) h.refade_per_episode = j.at("refade_per_episode").get<bool>();
  if (j.contains("reset_state_per_episode")) h.reset_state_per_episode = j.at("reset_state_per_episode").get<bool>();
  if (j.contains("reward_power_floor_watt")) h.reward_power_floor_watt = j.at("reward_power_floor_watt").get<double>();
  h.validate();
  return h;
}

nlohmann::json Hyperparams::to_json() const {
  return nlohmann::json{
      {"t_q", t_q},
      {"epsilon", epsilon},
      {"lambda", lambda},
      {"gamma", gamma},
      {"slots_per_episode", slots_per_episode},
      {"episodes", episodes},
      {"replay_capacity", replay_capacity},
      {"batch_size", batch_size},
      {"target_sync_period", target_sync_period},
      {"hidden_sizes", hidden_sizes},
      {"net_step_size", net_step_size},
      {"net_momentum", net_momentum},
      {"grad_clip_norm", grad_clip_norm},
      {"init_weight_scale", init_weight_scale},
      {"reward_scale", reward_scale},
      {"delta_beta", delta_beta},
      {"delta_theta", delta_theta},
      {"bs_step_scale", bs_step_scale},
      {"refade_per_episode", refade_per_episode},
      {"reset_state_per_episode", reset_state_per_episode},
      {"reward_power_floor_watt", reward_power_floor_watt},
  };
}

// --- surface agent ---------------------------------------------------------

SurfaceAgentSpec::SurfaceAgentSpec(int n_elements, Baseline baseline, OnOffPolicy policy,
                                   const Hyperparams& hyper, std::vector<int> alpha_pin)
    : n_(n_elements),
      baseline_(baseline),
      policy_(policy),
      delta_beta_(hyper.delta_beta),
      delta_theta_(hyper.delta_theta),
      theta_levels_(static_cast<int>(std::round(kTwoPi / hyper.delta_theta))),
      alpha_pin_(std::move(alpha_pin)) {
  if (baseline == Baseline::NONE) {
    throw std::invalid_argument("surface agent: the no-surface baseline has no surface agents");
  }
  // ES splits energy evenly at start; MS and RIS start fully reflecting.
  beta_init_ = baseline == Baseline::ES ? 1.0 / std::sqrt(2.0) : 1.0;
  if (policy_ != OnOffPolicy::OPTIMIZED &&
      static_cast<int>(alpha_pin_.size()) != n_) {
    throw std::invalid_argument("surface agent: pinned policy needs an alpha pattern");
  }
  for (int e = 0; e < n_; ++e) {
    if (baseline_ == Baseline::ES) {
      catalogue_.push_back({e, SurfacePrimitive::BetaUp});
      catalogue_.push_back({e, SurfacePrimitive::BetaDown});
    } else if (baseline_ == Baseline::MS) {
      catalogue_.push_back({e, SurfacePrimitive::BetaToggle});
    }
    catalogue_.push_back({e, SurfacePrimitive::ThetaUp});
    catalogue_.push_back({e, SurfacePrimitive::ThetaDown});
    if (baseline_ != Baseline::RIS) {
      catalogue_.push_back({e, SurfacePrimitive::SignFlip});
    }
    if (policy_ == OnOffPolicy::OPTIMIZED) {
      catalogue_.push_back({e, SurfacePrimitive::AlphaToggle});
    }
  }
}

SurfaceLattice SurfaceAgentSpec::initial_state() const {
  SurfaceLattice s;
  s.beta.assign(n_, baseline_ == Baseline::MS ? 1 : 0);  // MS stores the bit itself
  s.theta.assign(n_, 0);
  s.sign.assign(n_, 1);
  s.alpha.assign(n_, 1);
  return s;
}

SurfaceLattice SurfaceAgentSpec::apply(const SurfaceLattice& s, int action_index) const {
  const SurfaceAction& a = catalogue_.at(action_index);
  SurfaceLattice next = s;
  switch (a.primitive) {
    case SurfacePrimitive::BetaUp:
    case SurfacePrimitive::BetaDown: {
      const int dir = a.primitive == SurfacePrimitive::BetaUp ? 1 : -1;
      const double tentative = beta_init_ + (s.beta[a.element] + dir) * delta_beta_;
      // Out-of-range amplitude moves leave the state unchanged.
      if (tentative >= -1e-12 && tentative <= 1.0 + 1e-12) {
        next.beta[a.element] += dir;
      }
      break;
    }
    case SurfacePrimitive::BetaToggle:
      next.beta[a.element] ^= 1;
      break;
    case SurfacePrimitive::ThetaUp:
      next.theta[a.element] = (s.theta[a.element] + 1) % theta_levels_;
      break;
    case SurfacePrimitive::ThetaDown:
      next.theta[a.element] = (s.theta[a.element] + theta_levels_ - 1) % theta_levels_;
      break;
    case SurfacePrimitive::SignFlip:
      next.sign[a.element] = -s.sign[a.element];
      break;
    case SurfacePrimitive::AlphaToggle:
      next.alpha[a.element] ^= 1;
      break;
  }
  return next;
}

starris::SurfaceState SurfaceAgentSpec::decode(const SurfaceLattice& s) const {
  starris::SurfaceState out;
  out.alpha.resize(n_);
  out.beta_r.resize(n_);
  out.theta_r.resize(n_);
  out.phase_sign.resize(n_);
  for (int e = 0; e < n_; ++e) {
    switch (baseline_) {
      case Baseline::ES:
        out.beta_r[e] = std::clamp(beta_init_ + s.beta[e] * delta_beta_, 0.0, 1.0);
        break;
      case Baseline::MS:
        out.beta_r[e] = static_cast<double>(s.beta[e]);
        break;
      case Baseline::RIS:
        out.beta_r[e] = 1.0;
        break;
      case Baseline::NONE:
        out.beta_r[e] = 1.0;
        break;
    }
    out.theta_r[e] = starris::wrap_angle(s.theta[e] * delta_theta_);
    out.phase_sign[e] = baseline_ == Baseline::RIS ? 1 : s.sign[e];
    out.alpha[e] = policy_ == OnOffPolicy::OPTIMIZED ? s.alpha[e] : alpha_pin_[e];
  }
  return out;
}

Eigen::VectorXd SurfaceAgentSpec::codec(const SurfaceLattice& s) const {
  const starris::SurfaceState st = decode(s);
  Eigen::VectorXd x(4 * n_);
  for (int e = 0; e < n_; ++e) {
    x[e] = st.beta_r[e];
    x[n_ + e] = st.theta_r[e];
    x[2 * n_ + e] = starris::coupled_phase(st.theta_r[e], st.phase_sign[e]);
    x[3 * n_ + e] = static_cast<double>(st.alpha[e]);
  }
  return x;
}

std::vector<int> SurfaceAgentSpec::tabular_key(const SurfaceLattice& s) const {
  std::vector<int> key;
  key.reserve(4 * n_);
  key.insert(key.end(), s.beta.begin(), s.beta.end());
  key.insert(key.end(), s.theta.begin(), s.theta.end());
  key.insert(key.end(), s.sign.begin(), s.sign.end());
  key.insert(key.end(), s.alpha.begin(), s.alpha.end());
  return key;
}

// --- BS agent ---------------------------------------------------------------

BsAgentSpec::BsAgentSpec(const scenario::ScenarioConfig& config, const Hyperparams& hyper)
    : m_(config.m_antennas), users_per_region_(config.users_per_region) {
  const int total_users = config.total_users();
  entries_ = m_ * total_users;
  const double step =
      hyper.bs_step_scale * std::sqrt(config.bs_power_budget_watt() / entries_);
  delta_re_ = step;
  delta_im_ = step;
  for (int e = 0; e < entries_; ++e) {
    catalogue_.push_back({e, BsPrimitive::RealUp});
    catalogue_.push_back({e, BsPrimitive::RealDown});
    catalogue_.push_back({e, BsPrimitive::ImagUp});
    catalogue_.push_back({e, BsPrimitive::ImagDown});
  }
}

BsLattice BsAgentSpec::initial_state() const {
  BsLattice s;
  s.re.assign(entries_, 0);  // decoded entry starts at 1 + 0j
  s.im.assign(entries_, 0);
  return s;
}

BsLattice BsAgentSpec::apply(const BsLattice& s, int action_index) const {
  const BsAction& a = catalogue_.at(action_index);
  BsLattice next = s;
  switch (a.primitive) {
    case BsPrimitive::RealUp: next.re[a.entry] += 1; break;
    case BsPrimitive::RealDown: next.re[a.entry] -= 1; break;
    case BsPrimitive::ImagUp: next.im[a.entry] += 1; break;
    case BsPrimitive::ImagDown: next.im[a.entry] -= 1; break;
  }
  return next;
}

metrics::BeamformerSet BsAgentSpec::decode_raw(const BsLattice& s) const {
  metrics::BeamformerSet set;
  int entry = 0;
  for (int users : users_per_region_) {
    Eigen::MatrixXcd wi(m_, users);
    for (int k = 0; k < users; ++k) {
      for (int m = 0; m < m_; ++m) {
        wi(m, k) = std::complex<double>(1.0 + s.re[entry] * delta_re_, s.im[entry] * delta_im_);
        ++entry;
      }
    }
    set.w.push_back(std::move(wi));
  }
  return set;
}

Eigen::VectorXd BsAgentSpec::codec(const BsLattice& s) const {
  Eigen::VectorXd x(2 * entries_);
  for (int e = 0; e < entries_; ++e) {
    x[e] = 1.0 + s.re[e] * delta_re_;
    x[entries_ + e] = s.im[e] * delta_im_;
  }
  return x;
}

std::vector<int> BsAgentSpec::tabular_key(const BsLattice& s) const {
  std::vector<int> key;
  key.reserve(2 * entries_);
  key.insert(key.end(), s.re.begin(), s.re.end());
  key.insert(key.end(), s.im.begin(), s.im.end());
  return key;
}

// --- spec-level operations ---------------------------------------------------

bool use_global_action(int t, int t_q) {
  if (t_q < 1) throw std::invalid_argument("use_global_action: t_q must be >= 1");
  return t % t_q == 0;
}

int select_action(std::span<const double> qvalues, double epsilon, std::mt19937_64& rng) {
  if (qvalues.empty()) throw std::invalid_argument("select_action: empty Q-vector");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, qvalues.size() - 1);
    return static_cast<int>(pick(rng));
  }
  int best = 0;
  for (std::size_t i = 1; i < qvalues.size(); ++i) {
    if (qvalues[i] > qvalues[best]) best = static_cast<int>(i);
  }
  return best;
}

double global_target(double r_q, double gamma, std::span<const double> per_head_max) {
  double sum = 0.0;
  for (double m : per_head_max) sum += m;
  return r_q + gamma * sum;
}

std::size_t QTable::KeyHash::operator()(const std::vector<int>& key) const {
  std::size_t h = 1469598103934665603ull;  // FNV-1a
  for (int v : key) {
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v));
    h *= 1099511628211ull;
  }
  return h;
}

const std::vector<double>& QTable::lookup(const std::vector<int>& key) const {
  auto it = table_.find(key);
  return it != table_.end() ? it->second : zeros_;
}

void QTable::update(const std::vector<int>& s, int action, double reward,
                    const std::vector<int>& s_next, double lambda, double gamma) {
  const double next_max = *std::max_element(lookup(s_next).begin(), lookup(s_next).end());
  auto [it, inserted] = table_.try_emplace(s, std::vector<double>(n_actions_, 0.0));
  double& q = it->second[action];
  q = (1.0 - lambda) * q + lambda * (reward + gamma * next_max);
}

// --- trainer -----------------------------------------------------------------

double TrainResult::mean_reward_first_fraction(double fraction) const {
  if (records.empty()) return 0.0;
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(records.size() * fraction));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += records[i].global_reward;
  return sum / n;
}

double TrainResult::mean_reward_final_fraction(double fraction) const {
  if (records.empty()) return 0.0;
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(records.size() * fraction));
  double sum = 0.0;
  for (std::size_t i = records.size() - n; i < records.size(); ++i) sum += records[i].global_reward;
  return sum / n;
}

namespace {

struct GlobalTransition {
  Eigen::VectorXd state;
  std::vector<int> joint_action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

class GlobalReplay {
 public:
  explicit GlobalReplay(std::size_t capacity) : capacity_(capacity) {}

  void push(GlobalTransition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }
  std::size_t size() const { return items_.size(); }
  const GlobalTransition& pick(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> d(0, items_.size() - 1);
    return items_[d(rng)];
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<GlobalTransition> items_;
};

struct LocalAgent {
  bool is_surface = false;
  int surface = -1;  // 0-based surface index when is_surface
  int catalogue_size = 0;
  std::mt19937_64 explore_rng;
  // DQN machinery (unused by QLEARNING)
  std::optional<nn::QNetwork> net;
  std::optional<nn::QNetwork> target;
  std::optional<nn::SgdOptimizer> opt;
  std::optional<nn::ReplayBuffer> buffer;
  std::mt19937_64 replay_rng;
  // tabular machinery
  std::optional<QTable> qtable;
};

class Trainer {
 public:
  Trainer(const scenario::ScenarioConfig& config, const Hyperparams& hyper,
          Algorithm algorithm, Baseline baseline, OnOffPolicy policy,
          const SlotObserver& observer)
      : observer_(observer),
        config_(config),
        hyper_(hyper),
        algorithm_(algorithm),
        baseline_(baseline),
        policy_(policy),
        streams_(config.master_seed),
        table_(channel::enumerate_paths(config.v_surfaces)),
        bs_spec_(config, hyper) {
    config_.validate();
    hyper_.validate();
    if (baseline_ == Baseline::NONE && policy_ != OnOffPolicy::OPTIMIZED) {
      throw std::invalid_argument("trainer: the no-surface baseline has no on-off policy to pin");
    }
    reward_scale_ = hyper_.reward_scale > 0.0
                        ? hyper_.reward_scale
                        : 1.0 / (config_.bandwidth_hz * config_.total_users());

    n_surface_agents_ = baseline_ == Baseline::NONE ? 0 : config_.v_surfaces;
    for (int v = 0; v < n_surface_agents_; ++v) {
      std::vector<int> pin;
      if (policy_ == OnOffPolicy::ALL_ON) {
        pin.assign(config_.n_elements, 1);
      } else if (policy_ == OnOffPolicy::HALF_ON) {
        pin = half_on_mask(v);
      }
      surface_specs_.emplace_back(config_.n_elements, baseline_, policy_, hyper_, pin);
    }

    const int n_agents = n_surface_agents_ + 1;
    agents_.resize(n_agents);
    for (int a = 0; a < n_agents; ++a) {
      LocalAgent& agent = agents_[a];
      agent.is_surface = a < n_surface_agents_;
      agent.surface = agent.is_surface ? a : -1;
      agent.catalogue_size = agent.is_surface ? surface_specs_[a].catalogue_size()
                                              : bs_spec_.catalogue_size();
      agent.explore_rng = streams_.make(scenario::Stream::Exploration, a);
      const int state_dim = agent.is_surface ? surface_specs_[a].state_dim() : bs_spec_.state_dim();
      if (algorithm_ == Algorithm::QLEARNING) {
        agent.qtable.emplace(agent.catalogue_size);
      } else {
        std::vector<int> sizes;
        sizes.push_back(state_dim);
        sizes.insert(sizes.end(), hyper_.hidden_sizes.begin(), hyper_.hidden_sizes.end());
        sizes.push_back(agent.catalogue_size);
        auto winit = streams_.make(scenario::Stream::WeightInit, a);
        agent.net = nn::QNetwork::make(sizes, winit, hyper_.init_weight_scale);
        agent.target = nn::snapshot_target(*agent.net);
        agent.opt.emplace(hyper_.net_step_size, hyper_.net_momentum, hyper_.grad_clip_norm);
        agent.buffer.emplace(hyper_.replay_capacity);
        agent.replay_rng = streams_.make(scenario::Stream::Replay, a);
      }
    }

    if (algorithm_ == Algorithm::MAGAR) {
      int global_in = 0;
      for (int a = 0; a < n_agents; ++a) {
        global_in += agents_[a].is_surface ? surface_specs_[a].state_dim() : bs_spec_.state_dim();
      }
      head_offsets_.clear();
      int out = 0;
      for (const auto& agent : agents_) {
        head_offsets_.push_back(out);
        out += agent.catalogue_size;
      }
      std::vector<int> sizes;
      sizes.push_back(global_in);
      sizes.insert(sizes.end(), hyper_.hidden_sizes.begin(), hyper_.hidden_sizes.end());
      sizes.push_back(out);
      auto winit = streams_.make(scenario::Stream::WeightInit, n_agents);
      global_net_ = nn::QNetwork::make(sizes, winit, hyper_.init_weight_scale);
      global_target_net_ = nn::snapshot_target(*global_net_);
      global_opt_.emplace(hyper_.net_step_size, hyper_.net_momentum, hyper_.grad_clip_norm);
      global_replay_.emplace(hyper_.replay_capacity);
      global_explore_rng_ = streams_.make(scenario::Stream::Exploration, n_agents);
      global_replay_rng_ = streams_.make(scenario::Stream::Replay, n_agents);
    }

    auto placement = streams_.make(scenario::Stream::UserPlacement);
    geometry_ = scenario::sample_user_positions(config_, placement);
    channel_rng_ = streams_.make(scenario::Stream::Channel);
  }

  TrainResult run();

 private:
  struct EnvEval {
    metrics::LinkMetrics metrics;
    double bs_power_watt = 0.0;
  };

  std::vector<int> half_on_mask(int surface) {
    auto rng = streams_.make(scenario::Stream::OnOffPolicy, surface);
    std::vector<int> idx(config_.n_elements);
    for (int i = 0; i < config_.n_elements; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> mask(config_.n_elements, 0);
    for (int i = 0; i < config_.n_elements / 2; ++i) mask[idx[i]] = 1;
    return mask;
  }

  std::vector<starris::SurfaceState> decode_surfaces(const std::vector<SurfaceLattice>& s) const {
    std::vector<starris::SurfaceState> out;
    out.reserve(config_.v_surfaces);
    if (baseline_ == Baseline::NONE) {
      for (int v = 0; v < config_.v_surfaces; ++v) {
        out.push_back(starris::SurfaceState::all_off(config_.n_elements));
      }
    } else {
      for (int v = 0; v < config_.v_surfaces; ++v) out.push_back(surface_specs_[v].decode(s[v]));
    }
    return out;
  }

  EnvEval evaluate(const std::vector<SurfaceLattice>& surfaces, const BsLattice& bs) const {
    const auto states = decode_surfaces(surfaces);
    const auto w = metrics::normalize_beamformer(bs_spec_.decode_raw(bs),
                                                 config_.bs_power_budget_watt());
    std::vector<starris::ThetaPair> thetas;
    thetas.reserve(states.size());
    for (const auto& st : states) thetas.push_back(starris::build_theta(st));
    const auto omegas = channel::effective_channels_all_users(config_, *realization_, thetas, table_);
    EnvEval ev;
    ev.metrics = metrics::evaluate(states, w, omegas, config_);
    ev.bs_power_watt = w.transmit_power_watt();
    return ev;
  }

  Eigen::VectorXd global_codec(const std::vector<SurfaceLattice>& surfaces,
                               const BsLattice& bs) const {
    Eigen::VectorXd x(global_net_->input_size());
    Eigen::Index pos = 0;
    for (int v = 0; v < n_surface_agents_; ++v) {
      const Eigen::VectorXd part = surface_specs_[v].codec(surfaces[v]);
      x.segment(pos, part.size()) = part;
      pos += part.size();
    }
    const Eigen::VectorXd part = bs_spec_.codec(bs);
    x.segment(pos, part.size()) = part;
    return x;
  }

  std::vector<int> select_global_joint(const Eigen::VectorXd& global_state);
  void train_local(LocalAgent& agent, TrainResult& result);
  void train_global(TrainResult& result);

  SlotObserver observer_;
  scenario::ScenarioConfig config_;
  double reward_scale_ = 1.0;
  Hyperparams hyper_;
  Algorithm algorithm_;
  Baseline baseline_;
  OnOffPolicy policy_;
  scenario::RngStreams streams_;
  channel::PathTable table_;
  BsAgentSpec bs_spec_;
  std::vector<SurfaceAgentSpec> surface_specs_;
  int n_surface_agents_ = 0;
  std::vector<LocalAgent> agents_;

  // MAGAR global agent: shared trunk, one output slice per local agent.
  std::optional<nn::QNetwork> global_net_;
  std::optional<nn::QNetwork> global_target_net_;
  std::optional<nn::SgdOptimizer> global_opt_;
  std::optional<GlobalReplay> global_replay_;
  std::vector<int> head_offsets_;
  std::mt19937_64 global_explore_rng_;
  std::mt19937_64 global_replay_rng_;

  scenario::Geometry geometry_;
  std::mt19937_64 channel_rng_;
  std::optional<channel::ChannelRealization> realization_;
};

std::vector<int> Trainer::select_global_joint(const Eigen::VectorXd& global_state) {
  const int n_agents = static_cast<int>(agents_.size());
  std::vector<int> joint(n_agents);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(global_explore_rng_) < hyper_.epsilon) {
    for (int a = 0; a < n_agents; ++a) {
      std::uniform_int_distribution<int> pick(0, agents_[a].catalogue_size - 1);
      joint[a] = pick(global_explore_rng_);
    }
    return joint;
  }
  const Eigen::VectorXd q = global_net_->forward(global_state);
  for (int a = 0; a < n_agents; ++a) {
    const int off = head_offsets_[a];
    int best = 0;
    for (int i = 1; i < agents_[a].catalogue_size; ++i) {
      if (q[off + i] > q[off + best]) best = i;
    }
    joint[a] = best;
  }
  return joint;
}

void Trainer::train_local(LocalAgent& agent, TrainResult& result) {
  if (agent.buffer->size() < static_cast<std::size_t>(hyper_.batch_size)) return;
  const auto batch = agent.buffer->sample(hyper_.batch_size, agent.replay_rng);
  auto [loss, grad] = nn::td_loss_and_gradient(*agent.net, *agent.target, batch, hyper_.gamma);
  if (!std::isfinite(loss)) {
    result.diverged = true;
    result.divergence_note = "non-finite TD loss";
    return;
  }
  agent.opt->step(*agent.net, grad);
  if (agent.net->step_count() % hyper_.target_sync_period == 0) {
    agent.target = nn::snapshot_target(*agent.net);
  }
}

void Trainer::train_global(TrainResult& result) {
  // Global experience accrues once per t_q slots, so start training earlier
  // than the locals; sampling is with replacement.
  const std::size_t threshold = std::min<std::size_t>(hyper_.batch_size, 8);
  if (global_replay_->size() < threshold) return;
  const int n_agents = static_cast<int>(agents_.size());
  nn::ParamSet grad = global_net_->zero_gradient();
  double loss = 0.0;
  const double inv_b = 1.0 / hyper_.batch_size;
  nn::QNetwork::Trace trace;
  std::vector<double> head_max(n_agents);
  for (int b = 0; b < hyper_.batch_size; ++b) {
    const GlobalTransition& t = global_replay_->pick(global_replay_rng_);
    const Eigen::VectorXd q = global_net_->forward_traced(t.state, trace);
    double predicted = 0.0;
    for (int a = 0; a < n_agents; ++a) {
      predicted += q[head_offsets_[a] + t.joint_action[a]];
    }
    const Eigen::VectorXd qn = global_target_net_->forward(t.next_state);
    for (int a = 0; a < n_agents; ++a) {
      double best = qn[head_offsets_[a]];
      for (int i = 1; i < agents_[a].catalogue_size; ++i) {
        best = std::max(best, qn[head_offsets_[a] + i]);
      }
      head_max[a] = best;
    }
    const double psi = global_target(t.reward, hyper_.gamma, head_max);
    const double err = predicted - psi;
    loss += err * err * inv_b;
    Eigen::VectorXd dout = Eigen::VectorXd::Zero(q.size());
    for (int a = 0; a < n_agents; ++a) {
      dout[head_offsets_[a] + t.joint_action[a]] += 2.0 * err * inv_b;
    }
    global_net_->backward(trace, dout, grad);
  }
  if (!std::isfinite(loss)) {
    result.diverged = true;
    result.divergence_note = "non-finite global TD loss";
    return;
  }
  global_opt_->step(*global_net_, grad);
  if (global_net_->step_count() % hyper_.target_sync_period == 0) {
    global_target_net_ = nn::snapshot_target(*global_net_);
  }
}

TrainResult Trainer::run() {
  TrainResult result;
  const int n_agents = static_cast<int>(agents_.size());

  std::vector<SurfaceLattice> surfaces;
  BsLattice bs;
  auto reset_states = [&] {
    surfaces.clear();
    for (int v = 0; v < n_surface_agents_; ++v) surfaces.push_back(surface_specs_[v].initial_state());
    bs = bs_spec_.initial_state();
  };
  reset_states();

  for (int episode = 0; episode < hyper_.episodes && !result.diverged; ++episode) {
    if (!realization_ || hyper_.refade_per_episode) {
      realization_ = channel::sample_channel(geometry_, config_, channel_rng_);
    }
    if (hyper_.reset_state_per_episode && episode > 0) reset_states();

    for (int t = 0; t < hyper_.slots_per_episode && !result.diverged; ++t) {
      // Local epsilon-greedy picks; every agent selects even on global slots.
      std::vector<int> local_actions(n_agents);
      for (int a = 0; a < n_agents; ++a) {
        LocalAgent& agent = agents_[a];
        if (algorithm_ == Algorithm::QLEARNING) {
          const auto key = agent.is_surface ? surface_specs_[agent.surface].tabular_key(surfaces[agent.surface])
                                            : bs_spec_.tabular_key(bs);
          local_actions[a] = select_action(agent.qtable->lookup(key), hyper_.epsilon, agent.explore_rng);
        } else {
          const Eigen::VectorXd state = agent.is_surface
                                            ? surface_specs_[agent.surface].codec(surfaces[agent.surface])
                                            : bs_spec_.codec(bs);
          const Eigen::VectorXd q = agent.net->forward(state);
          local_actions[a] = select_action(std::span<const double>(q.data(), q.size()),
                                           hyper_.epsilon, agent.explore_rng);
        }
      }

      const bool global_slot =
          algorithm_ == Algorithm::MAGAR && use_global_action(t, hyper_.t_q);
      Eigen::VectorXd global_state_before;
      std::vector<int> executed = local_actions;
      if (global_slot) {
        global_state_before = global_codec(surfaces, bs);
        executed = select_global_joint(global_state_before);
      }

      // All agents move simultaneously from the same pre-slot snapshot.
      std::vector<SurfaceLattice> next_surfaces(n_surface_agents_);
      for (int v = 0; v < n_surface_agents_; ++v) {
        next_surfaces[v] = surface_specs_[v].apply(surfaces[v], executed[v]);
      }
      BsLattice next_bs = bs_spec_.apply(bs, executed[n_agents - 1]);
      if (bs_spec_.decode_raw(next_bs).transmit_power_watt() <= 0.0) {
        next_bs = bs_spec_.initial_state();  // normalization is undefined on an all-zero state
      }

      // Individual rewards: each agent is scored on the snapshot where only
      // its own state advanced; everyone else stays at the pre-slot values.
      std::vector<double> local_rewards(n_agents);
      for (int a = 0; a < n_agents; ++a) {
        double own_power;
        EnvEval ev;
        if (agents_[a].is_surface) {
          std::vector<SurfaceLattice> frozen = surfaces;
          frozen[a] = next_surfaces[a];
          ev = evaluate(frozen, bs);
          own_power = starris::surface_power_watt(surface_specs_[a].decode(next_surfaces[a]),
                                                  config_.element_power_watt());
          if (own_power <= 0.0) own_power = hyper_.reward_power_floor_watt;
        } else {
          ev = evaluate(surfaces, next_bs);
          own_power = ev.bs_power_watt;
        }
        local_rewards[a] = ev.metrics.sum_rate_bps / own_power;
      }

      // Post-slot snapshot: everyone advanced; the global reward is its
      // instantaneous energy efficiency.
      const EnvEval post = evaluate(next_surfaces, next_bs);
      const double r_q = post.metrics.energy_efficiency;

      // Learning.
      for (int a = 0; a < n_agents && !result.diverged; ++a) {
        LocalAgent& agent = agents_[a];
        const double reward =
            reward_scale_ * (algorithm_ == Algorithm::MADQN ? r_q : local_rewards[a]);
        if (algorithm_ == Algorithm::QLEARNING) {
          if (agent.is_surface) {
            agent.qtable->update(surface_specs_[agent.surface].tabular_key(surfaces[agent.surface]),
                                 executed[a], reward,
                                 surface_specs_[agent.surface].tabular_key(next_surfaces[agent.surface]),
                                 hyper_.lambda, hyper_.gamma);
          } else {
            agent.qtable->update(bs_spec_.tabular_key(bs), executed[a], reward,
                                 bs_spec_.tabular_key(next_bs), hyper_.lambda, hyper_.gamma);
          }
        } else {
          nn::Transition tr;
          tr.state = agent.is_surface ? surface_specs_[agent.surface].codec(surfaces[agent.surface])
                                      : bs_spec_.codec(bs);
          tr.next_state = agent.is_surface
                              ? surface_specs_[agent.surface].codec(next_surfaces[agent.surface])
                              : bs_spec_.codec(next_bs);
          tr.action = executed[a];
          tr.reward = reward;
          agent.buffer->push(std::move(tr));
          try {
            train_local(agent, result);
          } catch (const std::runtime_error& e) {
            result.diverged = true;
            result.divergence_note = e.what();
          }
        }
      }
      if (algorithm_ == Algorithm::MAGAR && !result.diverged) {
        if (global_slot) {
          GlobalTransition tr;
          tr.state = global_state_before;
          tr.joint_action = executed;
          tr.reward = reward_scale_ * r_q;
          tr.next_state = global_codec(next_surfaces, next_bs);
          global_replay_->push(std::move(tr));
        }
        try {
          train_global(result);
        } catch (const std::runtime_error& e) {
          result.diverged = true;
          result.divergence_note = e.what();
        }
      }

      if (observer_) {
        SlotSnapshot snap;
        snap.episode = episode;
        snap.slot = t;
        snap.surface_states = decode_surfaces(next_surfaces);
        snap.w = metrics::normalize_beamformer(bs_spec_.decode_raw(next_bs),
                                               config_.bs_power_budget_watt());
        observer_(snap);
      }

      TrainRecord rec;
      rec.episode = episode;
      rec.slot = t;
      rec.global_executed = global_slot;
      rec.sum_rate_bps = post.metrics.sum_rate_bps;
      rec.total_power_watt = post.metrics.total_power_watt;
      rec.energy_efficiency = post.metrics.energy_efficiency;
      rec.global_reward = r_q;
      rec.agent_rewards = local_rewards;
      rec.agent_actions = executed;
      result.records.push_back(std::move(rec));

      surfaces = std::move(next_surfaces);
      bs = std::move(next_bs);
    }
  }
  return result;
}

}  // namespace

TrainResult train(const scenario::ScenarioConfig& config, const Hyperparams& hyper,
                  Algorithm algorithm, Baseline baseline, OnOffPolicy policy,
                  const SlotObserver& observer) {
  Trainer trainer(config, hyper, algorithm, baseline, policy, observer);
  return trainer.run();
}

void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records,
                       Algorithm algorithm, int n_agents) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_records_csv: cannot open '" + path + "'");
  out << "episode,slot,algorithm,global_executed,sum_rate_bps,total_power_watt,"
         "energy_efficiency,global_reward";
  for (int a = 0; a < n_agents - 1; ++a) out << ",reward_s" << (a + 1);
  out << ",reward_bs";
  for (int a = 0; a < n_agents - 1; ++a) out << ",action_s" << (a + 1);
  out << ",action_bs";
  out << "\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  const std::string name = to_string(algorithm);
  for (const auto& r : records) {
    out << r.episode << ',' << r.slot << ',' << name << ',' << (r.global_executed ? 1 : 0) << ','
        << fmt(r.sum_rate_bps) << ',' << fmt(r.total_power_watt) << ',' << fmt(r.energy_efficiency)
        << ',' << fmt(r.global_reward);
    for (double v : r.agent_rewards) out << ',' << fmt(v);
    for (int v : r.agent_actions) out << ',' << v;
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_records_csv: write failed");
}

}  // namespace starsim::marl
