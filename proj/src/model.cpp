#include "goldiprox/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "goldiprox/hash.hpp"

namespace goldiprox {

std::vector<Index> ModelSpec::layer_dims() const {
  std::vector<Index> dims;
  dims.reserve(hidden_dims.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(num_classes);
  return dims;
}

std::int64_t ModelSpec::parameter_count() const {
  const auto dims = layer_dims();
  std::int64_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l] * dims[l + 1] + dims[l + 1];
  return n;
}

void ModelSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("ModelSpec: input_dim must be positive");
  if (hidden_dims.empty()) throw std::invalid_argument("ModelSpec: hidden_dims must be non-empty");
  for (Index h : hidden_dims)
    if (h < 1) throw std::invalid_argument("ModelSpec: hidden dims must be positive");
  if (num_classes < 2) throw std::invalid_argument("ModelSpec: num_classes must be >= 2");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("ModelSpec: dropout_rate must be in [0,1)");
}

std::uint64_t ModelState::fingerprint() const {
  Fnv1a h;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Index i = 0; i < weights[l].rows(); ++i)
      for (Index j = 0; j < weights[l].cols(); ++j) h.add_f64(weights[l](i, j));
    for (Index i = 0; i < biases[l].size(); ++i) h.add_f64(biases[l](i));
  }
  return h.digest();
}

ModelState init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelState state;
  state.spec = spec;
  Rng rng(splitmix64(seed));
  const auto dims = spec.layer_dims();
  const std::size_t layers = dims.size() - 1;
  state.weights.resize(layers);
  state.biases.resize(layers);
  state.adam_m_w.resize(layers);
  state.adam_m_b.resize(layers);
  state.adam_v_w.resize(layers);
  state.adam_v_b.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Index fan_in = dims[l];
    const Index fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    state.weights[l].resize(fan_in, fan_out);
    for (Index i = 0; i < fan_in; ++i)
      for (Index j = 0; j < fan_out; ++j) state.weights[l](i, j) = rng.uniform(-bound, bound);
    state.biases[l] = Vector::Zero(fan_out);
    state.adam_m_w[l] = Matrix::Zero(fan_in, fan_out);
    state.adam_v_w[l] = Matrix::Zero(fan_in, fan_out);
    state.adam_m_b[l] = Vector::Zero(fan_out);
    state.adam_v_b[l] = Vector::Zero(fan_out);
  }
  return state;
}

ForwardResult forward(const ModelState& state, const Matrix& features, RunMode mode, Rng* rng) {
  if (features.cols() != state.spec.input_dim)
    throw std::invalid_argument("forward: feature width does not match input_dim");
  const double rate = state.spec.dropout_rate;
  const bool use_dropout = mode == RunMode::train && rate > 0.0;
  if (use_dropout && rng == nullptr)
    throw std::invalid_argument("forward: train mode with dropout requires an rng");

  ForwardResult out;
  out.mode = mode;
  const std::size_t layers = state.weights.size();
  out.activations.resize(layers);
  out.activations[0] = features;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Matrix z = (out.activations[l] * state.weights[l]).rowwise() + state.biases[l].transpose();
    Matrix h = z.cwiseMax(0.0);
    if (use_dropout) {
      Matrix mask(h.rows(), h.cols());
      for (Index i = 0; i < mask.rows(); ++i)
        for (Index j = 0; j < mask.cols(); ++j) mask(i, j) = rng->bernoulli(rate) ? 0.0 : 1.0;
      out.dropout_masks.push_back(mask);
      h = h.cwiseProduct(mask) / (1.0 - rate);
    }
    out.activations[l + 1] = std::move(h);
  }
  out.logits =
      (out.activations[layers - 1] * state.weights[layers - 1]).rowwise() +
      state.biases[layers - 1].transpose();
  return out;
}

std::pair<Vector, Matrix> softmax_cross_entropy(const Matrix& logits, const LabelVector& labels) {
  if (labels.size() != logits.rows())
    throw std::invalid_argument("softmax_cross_entropy: label count != batch size");
  const Index n = logits.rows();
  const Index k = logits.cols();
  Vector loss(n);
  Matrix dlogits(n, k);
  for (Index i = 0; i < n; ++i) {
    const int y = labels(i);
    if (y < 0 || y >= k) throw std::invalid_argument("softmax_cross_entropy: label out of range");
    const double m = logits.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = logits.row(i).transpose().array() - m;
    const Eigen::ArrayXd ex = shifted.exp();
    const double sum = ex.sum();
    loss(i) = std::log(sum) - shifted(y);
    dlogits.row(i) = (ex / sum).transpose();
    dlogits(i, y) -= 1.0;
  }
  return {std::move(loss), std::move(dlogits)};
}

GradientSet zero_gradients(const ModelSpec& spec) {
  GradientSet g;
  const auto dims = spec.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    g.weights.push_back(Matrix::Zero(dims[l], dims[l + 1]));
    g.biases.push_back(Vector::Zero(dims[l + 1]));
  }
  return g;
}

GradientSet backward(const ModelState& state, const ForwardResult& fwd, const Matrix& dlogits) {
  const std::size_t layers = state.weights.size();
  if (fwd.activations.size() != layers)
    throw std::logic_error("backward: forward caches missing or from another spec");
  const double rate = state.spec.dropout_rate;
  const bool dropped = !fwd.dropout_masks.empty();
  if (rate > 0.0 && fwd.mode == RunMode::train && !dropped && layers > 1)
    throw std::logic_error("backward: train-mode dropout masks missing");
  if (rate > 0.0 && fwd.mode == RunMode::eval)
    throw std::logic_error("backward: eval-mode forward has no replayable masks");

  const Index n = fwd.logits.rows();
  GradientSet g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Matrix delta = dlogits / static_cast<double>(n);
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = fwd.activations[l].transpose() * delta;
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix da = delta * state.weights[l].transpose();
      if (dropped) da = da.cwiseProduct(fwd.dropout_masks[l - 1]) / (1.0 - rate);
      // Post-dropout activations are positive exactly where the ReLU was
      // active and the unit was kept; dropped units already have zero da.
      delta = da.cwiseProduct(
          (fwd.activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

ModelState adamw_step(ModelState state, const GradientSet& grads, const OptimizerConfig& cfg) {
  if (grads.weights.size() != state.weights.size())
    throw std::invalid_argument("adamw_step: gradient layer count mismatch");
  const double t = static_cast<double>(state.step_count + 1);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    if (grads.weights[l].rows() != state.weights[l].rows() ||
        grads.weights[l].cols() != state.weights[l].cols())
      throw std::invalid_argument("adamw_step: gradient shape mismatch");
    auto& m = state.adam_m_w[l];
    auto& v = state.adam_v_w[l];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads.weights[l];
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grads.weights[l].cwiseProduct(grads.weights[l]);
    const Matrix update =
        ((m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon)).matrix();
    state.weights[l] -= cfg.learning_rate * (update + cfg.weight_decay * state.weights[l]);

    auto& mb = state.adam_m_b[l];
    auto& vb = state.adam_v_b[l];
    mb = cfg.beta1 * mb + (1.0 - cfg.beta1) * grads.biases[l];
    vb = cfg.beta2 * vb + (1.0 - cfg.beta2) * grads.biases[l].cwiseProduct(grads.biases[l]);
    const Vector bias_update =
        ((mb.array() / bc1) / ((vb.array() / bc2).sqrt() + cfg.epsilon)).matrix();
    state.biases[l] -= cfg.learning_rate * bias_update;  // biases exempt from decay
  }
  state.step_count += 1;
  return state;
}

namespace {

double mean_loss(const ModelState& state, const Matrix& features, const LabelVector& labels) {
  const ForwardResult fwd = forward(state, features, RunMode::eval);
  return softmax_cross_entropy(fwd.logits, labels).first.mean();
}

}  // namespace

GradientSet finite_difference_grad(const ModelState& state, const Matrix& features,
                                   const LabelVector& labels, double h) {
  GradientSet g = zero_gradients(state.spec);
  ModelState probe = state;
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (Index i = 0; i < probe.weights[l].rows(); ++i) {
      for (Index j = 0; j < probe.weights[l].cols(); ++j) {
        const double orig = probe.weights[l](i, j);
        probe.weights[l](i, j) = orig + h;
        const double fp = mean_loss(probe, features, labels);
        probe.weights[l](i, j) = orig - h;
        const double fm = mean_loss(probe, features, labels);
        probe.weights[l](i, j) = orig;
        g.weights[l](i, j) = (fp - fm) / (2.0 * h);
      }
    }
    for (Index i = 0; i < probe.biases[l].size(); ++i) {
      const double orig = probe.biases[l](i);
      probe.biases[l](i) = orig + h;
      const double fp = mean_loss(probe, features, labels);
      probe.biases[l](i) = orig - h;
      const double fm = mean_loss(probe, features, labels);
      probe.biases[l](i) = orig;
      g.biases[l](i) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace goldiprox
