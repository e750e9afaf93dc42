#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "starsim/channel.hpp"
#include "starsim/metrics.hpp"
#include "starsim/nn.hpp"
#include "starsim/scenario.hpp"
#include "starsim/starris.hpp"

namespace starsim::marl {

enum class Algorithm { MAGAR, MADQN, MADQN_LR, QLEARNING };
enum class Baseline { ES, MS, RIS, NONE };
enum class OnOffPolicy { ALL_ON, HALF_ON, OPTIMIZED };

std::string to_string(Algorithm a);
std::string to_string(Baseline b);
std::string to_string(OnOffPolicy p);
Algorithm algorithm_from_string(const std::string& s);
Baseline baseline_from_string(const std::string& s);
OnOffPolicy policy_from_string(const std::string& s);

struct Hyperparams {
  int t_q = 20;            // global-agent execution period
  double epsilon = 0.3;    // exploration probability
  double lambda = 0.1;     // tabular learning rate
  double gamma = 0.9;      // discount factor
  int slots_per_episode = 200;
  int episodes = 400;
  int replay_capacity = 100000;
  int batch_size = 64;
  int target_sync_period = 100;  // gradient steps between target snapshots
  std::vector<int> hidden_sizes = {128, 128};
  double net_step_size = 1e-3;
  double net_momentum = 0.9;
  double grad_clip_norm = 10.0;  // global L2 clip on each gradient step
  double init_weight_scale = 1.0;
  // Rewards entering the learning updates are multiplied by this factor so TD
  // targets stay O(1); 0 means auto (1 / (bandwidth * total users)). Logged
  // records always carry the physical values.
  double reward_scale = 0.0;
  double delta_beta = 0.1;
  double delta_theta = 0.39269908169872414;  // pi/8; must divide 2*pi
  double bs_step_scale = 0.1;   // delta_w = scale * sqrt(p_max / (M*K))
  bool refade_per_episode = true;
  bool reset_state_per_episode = true;
  double reward_power_floor_watt = 1e-3;  // local-reward denominator for an all-off surface

  void validate() const;
  static Hyperparams from_json(const nlohmann::json& j);  // unknown keys rejected
  nlohmann::json to_json() const;
};

// --- action spaces -------------------------------------------------------

enum class SurfacePrimitive { BetaUp, BetaDown, BetaToggle, ThetaUp, ThetaDown, SignFlip, AlphaToggle };
enum class BsPrimitive { RealUp, RealDown, ImagUp, ImagDown };

struct SurfaceAction {
  int element;
  SurfacePrimitive primitive;
};
struct BsAction {
  int entry;  // flat index into W, region-major then user then antenna
  BsPrimitive primitive;
};

// Integer lattice coordinates of one surface agent. Decoded values are always
// init + k * delta, so every reachable state stays on the action lattice.
struct SurfaceLattice {
  std::vector<int> beta;   // ES: offset steps from beta_init; MS: the bit itself
  std::vector<int> theta;  // steps of delta_theta, wrapped modulo the level count
  std::vector<int> sign;   // +1 / -1
  std::vector<int> alpha;  // 0 / 1
};

// Raw (pre-normalization) beamformer lattice; the physical beamformer is the
// power-normalized decode of this state.
struct BsLattice {
  std::vector<int> re;
  std::vector<int> im;
};

class SurfaceAgentSpec {
 public:
  SurfaceAgentSpec(int n_elements, Baseline baseline, OnOffPolicy policy,
                   const Hyperparams& hyper, std::vector<int> alpha_pin);

  int n() const { return n_; }
  int catalogue_size() const { return static_cast<int>(catalogue_.size()); }
  const std::vector<SurfaceAction>& catalogue() const { return catalogue_; }
  int state_dim() const { return 4 * n_; }

  SurfaceLattice initial_state() const;
  // Returns the next state; moves that would leave the legitimate space leave
  // the state unchanged (phases wrap instead).
  SurfaceLattice apply(const SurfaceLattice& s, int action_index) const;
  starris::SurfaceState decode(const SurfaceLattice& s) const;
  // Network input: beta_r, theta_r, theta_t, alpha per element.
  Eigen::VectorXd codec(const SurfaceLattice& s) const;
  std::vector<int> tabular_key(const SurfaceLattice& s) const;

 private:
  int n_;
  Baseline baseline_;
  OnOffPolicy policy_;
  double delta_beta_;
  double delta_theta_;
  int theta_levels_;
  double beta_init_;
  std::vector<int> alpha_pin_;  // used by ALL_ON / HALF_ON
  std::vector<SurfaceAction> catalogue_;
};

class BsAgentSpec {
 public:
  BsAgentSpec(const scenario::ScenarioConfig& config, const Hyperparams& hyper);

  int entries() const { return entries_; }
  int catalogue_size() const { return static_cast<int>(catalogue_.size()); }
  const std::vector<BsAction>& catalogue() const { return catalogue_; }
  int state_dim() const { return 2 * entries_; }

  BsLattice initial_state() const;
  BsLattice apply(const BsLattice& s, int action_index) const;
  // Unnormalized decode; normalize_beamformer() gives the transmit matrix.
  metrics::BeamformerSet decode_raw(const BsLattice& s) const;
  Eigen::VectorXd codec(const BsLattice& s) const;
  std::vector<int> tabular_key(const BsLattice& s) const;

 private:
  int m_;
  std::vector<int> users_per_region_;
  int entries_;  // M * total users
  double delta_re_;
  double delta_im_;
  std::vector<BsAction> catalogue_;
};

// --- spec-level operations ------------------------------------------------

// The global agent's joint action replaces the local picks every t_q-th slot.
bool use_global_action(int t, int t_q);

// Epsilon-greedy over a Q-vector; greedy ties break toward the lowest index.
int select_action(std::span<const double> qvalues, double epsilon, std::mt19937_64& rng);

// Value-decomposition bootstrap: r_q + gamma * sum of per-head maxima.
double global_target(double r_q, double gamma, std::span<const double> per_head_max);

// Tabular Q-update, Q(s,a) <- (1-lambda) Q(s,a) + lambda (r + gamma max_a' Q(s',a')).
class QTable {
 public:
  explicit QTable(int n_actions) : n_actions_(n_actions), zeros_(n_actions, 0.0) {}

  const std::vector<double>& lookup(const std::vector<int>& key) const;
  void update(const std::vector<int>& s, int action, double reward,
              const std::vector<int>& s_next, double lambda, double gamma);
  std::size_t visited_states() const { return table_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const;
  };
  int n_actions_;
  std::unordered_map<std::vector<int>, std::vector<double>, KeyHash> table_;
  std::vector<double> zeros_;
};

// --- training -------------------------------------------------------------

struct TrainRecord {
  int episode = 0;
  int slot = 0;
  bool global_executed = false;
  double sum_rate_bps = 0.0;
  double total_power_watt = 0.0;
  double energy_efficiency = 0.0;
  double global_reward = 0.0;
  std::vector<double> agent_rewards;  // surfaces in index order, BS last
  std::vector<int> agent_actions;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  bool diverged = false;
  std::string divergence_note;

  double mean_reward_first_fraction(double fraction) const;
  double mean_reward_final_fraction(double fraction) const;
};

// Post-slot snapshot handed to an observer: decoded surface states and the
// normalized beamformer actually transmitted in that slot.
struct SlotSnapshot {
  int episode = 0;
  int slot = 0;
  std::vector<starris::SurfaceState> surface_states;
  metrics::BeamformerSet w;
};
using SlotObserver = std::function<void(const SlotSnapshot&)>;

// Runs the full training loop for one algorithm on one scenario. Deterministic
// given (config, hyper, algorithm, baseline, policy).
TrainResult train(const scenario::ScenarioConfig& config, const Hyperparams& hyper,
                  Algorithm algorithm, Baseline baseline = Baseline::ES,
                  OnOffPolicy policy = OnOffPolicy::OPTIMIZED,
                  const SlotObserver& observer = {});

// CSV stream of per-slot records; header names agents s1..sV and bs.
void write_records_csv(const std::string& path, const std::vector<TrainRecord>& records,
                       Algorithm algorithm, int n_agents);

}  // namespace starsim::marl
