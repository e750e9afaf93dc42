#include "starsim/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace starsim::nn {

void ParamSet::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void ParamSet::add_scaled(const ParamSet& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
}

bool ParamSet::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

QNetwork QNetwork::make(const std::vector<int>& layer_sizes, std::mt19937_64& rng,
                        double init_scale) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("qnetwork: need input and output layers");
  for (int s : layer_sizes) {
    if (s < 1) throw std::invalid_argument("qnetwork: layer sizes must be positive");
  }
  QNetwork net;
  net.layer_sizes_ = layer_sizes;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    Eigen::MatrixXd w(out, in);
    const double scale = init_scale * std::sqrt(2.0 / in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = scale * gauss(rng);
    }
    net.params_.weights.push_back(std::move(w));
    net.params_.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return net;
}

Eigen::VectorXd QNetwork::forward(const Eigen::VectorXd& input) const {
  Trace trace;
  return forward_traced(input, trace);
}

Eigen::VectorXd QNetwork::forward_traced(const Eigen::VectorXd& input, Trace& trace) const {
  if (input.size() != input_size()) throw std::invalid_argument("qnetwork: input size mismatch");
  trace.act.clear();
  trace.act.push_back(input);
  Eigen::VectorXd x = input;
  const std::size_t layers = params_.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    x = params_.weights[l] * x + params_.biases[l];
    if (l + 1 < layers) x = x.cwiseMax(0.0);  // rectifier on hidden layers only
    trace.act.push_back(x);
  }
  return x;
}

void QNetwork::backward(const Trace& trace, const Eigen::VectorXd& dloss_dout,
                        ParamSet& grad) const {
  const std::size_t layers = params_.weights.size();
  Eigen::VectorXd delta = dloss_dout;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      // Post-activation values are zero exactly where the rectifier clipped.
      const Eigen::VectorXd& post = trace.act[l + 1];
      for (Eigen::Index i = 0; i < delta.size(); ++i) {
        if (post[i] <= 0.0) delta[i] = 0.0;
      }
    }
    grad.weights[l] += delta * trace.act[l].transpose();
    grad.biases[l] += delta;
    if (l > 0) delta = params_.weights[l].transpose() * delta;
  }
}

ParamSet QNetwork::zero_gradient() const {
  ParamSet g;
  for (const auto& w : params_.weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : params_.biases) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  return g;
}

void QNetwork::save(const std::string& path) const {
  nlohmann::json header{{"layer_sizes", layer_sizes_}, {"step_count", step_count_}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("qnetwork save: cannot open '" + path + "'");
  const std::uint32_t len = static_cast<std::uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t l = 0; l < params_.weights.size(); ++l) {
    const auto& w = params_.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const float f = static_cast<float>(w(r, c));
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
      }
    }
    const auto& b = params_.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const float f = static_cast<float>(b[i]);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  }
  if (!out) throw std::runtime_error("qnetwork save: write failed");
}

QNetwork QNetwork::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("qnetwork load: cannot open '" + path + "'");
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw std::runtime_error("qnetwork load: truncated header");
  const nlohmann::json header = nlohmann::json::parse(text);

  QNetwork net;
  net.layer_sizes_ = header.at("layer_sizes").get<std::vector<int>>();
  net.step_count_ = header.at("step_count").get<std::int64_t>();
  for (std::size_t l = 0; l + 1 < net.layer_sizes_.size(); ++l) {
    const int rows = net.layer_sizes_[l + 1];
    const int cols = net.layer_sizes_[l];
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        float f = 0.0f;
        in.read(reinterpret_cast<char*>(&f), sizeof(f));
        w(r, c) = f;
      }
    }
    Eigen::VectorXd b(rows);
    for (int i = 0; i < rows; ++i) {
      float f = 0.0f;
      in.read(reinterpret_cast<char*>(&f), sizeof(f));
      b[i] = f;
    }
    net.params_.weights.push_back(std::move(w));
    net.params_.biases.push_back(std::move(b));
  }
  if (!in) throw std::runtime_error("qnetwork load: truncated blob");
  return net;
}

QNetwork snapshot_target(const QNetwork& net) { return net; }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: zero capacity");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch,
                                                    std::mt19937_64& rng) const {
  if (items_.size() < batch) throw std::logic_error("replay buffer: not enough samples");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(&items_[pick(rng)]);
  return out;
}

std::pair<double, ParamSet> td_loss_and_gradient(const QNetwork& net,
                                                 const QNetwork& target_net,
                                                 std::span<const Transition* const> batch,
                                                 double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_loss_and_gradient: empty batch");
  ParamSet grad = net.zero_gradient();
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  QNetwork::Trace trace;
  for (const Transition* t : batch) {
    const Eigen::VectorXd q = net.forward_traced(t->state, trace);
    const double target = t->reward + gamma * target_net.forward(t->next_state).maxCoeff();
    const double err = q[t->action] - target;
    loss += err * err * inv_b;
    Eigen::VectorXd dout = Eigen::VectorXd::Zero(q.size());
    dout[t->action] = 2.0 * err * inv_b;
    net.backward(trace, dout, grad);
  }
  return {loss, std::move(grad)};
}

void SgdOptimizer::step(QNetwork& net, const ParamSet& grad) {
  if (!grad.all_finite()) {
    throw std::runtime_error("optimizer: non-finite gradient at step " +
                             std::to_string(net.step_count()));
  }
  if (!initialized_) {
    velocity_ = net.zero_gradient();
    initialized_ = true;
  }
  double sq = 0.0;
  for (const auto& w : grad.weights) sq += w.squaredNorm();
  for (const auto& b : grad.biases) sq += b.squaredNorm();
  const double norm = std::sqrt(sq);
  const double scale = norm > clip_norm_ ? clip_norm_ / norm : 1.0;
  for (std::size_t l = 0; l < velocity_.weights.size(); ++l) {
    velocity_.weights[l] = momentum_ * velocity_.weights[l] - step_size_ * scale * grad.weights[l];
    velocity_.biases[l] = momentum_ * velocity_.biases[l] - step_size_ * scale * grad.biases[l];
  }
  net.params().add_scaled(velocity_, 1.0);
  net.bump_step_count();
}

}  // namespace starsim::nn
