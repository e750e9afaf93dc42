#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace starsim::nn {

// Per-layer parameter tensors; also the shape of a gradient.
struct ParamSet {
  std::vector<Eigen::MatrixXd> weights;  // out x in
  std::vector<Eigen::VectorXd> biases;

  void set_zero();
  void add_scaled(const ParamSet& other, double scale);
  bool all_finite() const;
};

// Minimal feed-forward Q-network: rectifier hidden layers, identity output.
class QNetwork {
 public:
  QNetwork() = default;

  // layer_sizes = {input, hidden..., output}; weights drawn from the given
  // stream with He scaling times init_scale, biases zero.
  static QNetwork make(const std::vector<int>& layer_sizes, std::mt19937_64& rng,
                       double init_scale = 1.0);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  std::int64_t step_count() const { return step_count_; }
  void bump_step_count() { ++step_count_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

  // Activations kept for backpropagation. act[0] is the input, act.back() the output.
  struct Trace {
    std::vector<Eigen::VectorXd> act;
  };
  Eigen::VectorXd forward_traced(const Eigen::VectorXd& input, Trace& trace) const;

  // Accumulate d(loss)/d(params) into grad given d(loss)/d(output).
  void backward(const Trace& trace, const Eigen::VectorXd& dloss_dout, ParamSet& grad) const;

  ParamSet zero_gradient() const;

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // JSON header (layer sizes, step count) + flat little-endian float32 blob.
  void save(const std::string& path) const;
  static QNetwork load(const std::string& path);

 private:
  std::vector<int> layer_sizes_;
  ParamSet params_;
  std::int64_t step_count_ = 0;
};

// Frozen copy used as the bootstrap target.
QNetwork snapshot_target(const QNetwork& net);

struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_[i]; }

  // batch independent uniform draws (with replacement).
  std::vector<const Transition*> sample(std::size_t batch, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// Mean squared TD error over the batch with a frozen bootstrap target:
// target = r + gamma * max_a' Q(s', a'; target_net). Gradient is w.r.t. net only.
std::pair<double, ParamSet> td_loss_and_gradient(const QNetwork& net,
                                                 const QNetwork& target_net,
                                                 std::span<const Transition* const> batch,
                                                 double gamma);

// Gradient descent with momentum and a global-norm clip. Velocity lives here,
// one instance per network.
class SgdOptimizer {
 public:
  SgdOptimizer(double step_size, double momentum,
               double clip_norm = std::numeric_limits<double>::infinity())
      : step_size_(step_size), momentum_(momentum), clip_norm_(clip_norm) {}

  // Throws std::runtime_error on a non-finite gradient.
  void step(QNetwork& net, const ParamSet& grad);

 private:
  double step_size_;
  double momentum_;
  double clip_norm_;
  ParamSet velocity_;
  bool initialized_ = false;
};

}  // namespace starsim::nn
