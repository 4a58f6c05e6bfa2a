#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "goldiprox/rng.hpp"

namespace goldiprox {

using Scalar = double;
template <class T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
using Matrix = MatrixT<Scalar>;
using Vector = VectorT<Scalar>;
using LabelVector = Eigen::VectorXi;
using Index = Eigen::Index;

// Feed-forward classifier: ReLU hidden layers, softmax head, optional
// inverted dropout on hidden activations.
struct ModelSpec {
  Index input_dim = 0;
  std::vector<Index> hidden_dims;
  Index num_classes = 0;
  double dropout_rate = 0.0;

  // [input_dim, hidden..., num_classes]
  std::vector<Index> layer_dims() const;
  std::int64_t parameter_count() const;
  void validate() const;  // throws std::invalid_argument
};

struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct ModelState {
  ModelSpec spec;
  std::vector<Matrix> weights;  // weights[l] is [fan_in x fan_out]
  std::vector<Vector> biases;
  std::vector<Matrix> adam_m_w;
  std::vector<Vector> adam_m_b;
  std::vector<Matrix> adam_v_w;
  std::vector<Vector> adam_v_b;
  std::int64_t step_count = 0;

  // FNV-1a over the little-endian bytes of all parameters in layer order.
  std::uint64_t fingerprint() const;
};

enum class RunMode { train, eval };

struct ForwardResult {
  Matrix logits;                      // [batch x num_classes]
  std::vector<Matrix> activations;    // activations[0] = input, then post-dropout hidden outputs
  std::vector<Matrix> dropout_masks;  // per hidden layer, train mode with dropout only
  RunMode mode = RunMode::eval;
};

struct OptimizerConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

ModelState init_params(const ModelSpec& spec, std::uint64_t seed);

// Train mode applies inverted dropout (kept units scaled by 1/(1-rate));
// rng is required iff mode == train and dropout_rate > 0.
ForwardResult forward(const ModelState& state, const Matrix& features, RunMode mode,
                      Rng* rng = nullptr);

// Per-example negative log softmax (natural log, max-shifted) and
// dlogits = softmax - one_hot. dlogits is NOT divided by the batch size;
// backward() owns that normalization.
std::pair<Vector, Matrix> softmax_cross_entropy(const Matrix& logits, const LabelVector& labels);

// Gradients of the MEAN per-example loss w.r.t. every parameter. Dropout
// masks are replayed from fwd.
GradientSet backward(const ModelState& state, const ForwardResult& fwd, const Matrix& dlogits);

GradientSet zero_gradients(const ModelSpec& spec);

// Decoupled weight decay (applied to weights only, never biases),
// bias-corrected moments, step_count + 1.
ModelState adamw_step(ModelState state, const GradientSet& grads, const OptimizerConfig& cfg);

// Central-difference gradient of the mean eval-mode loss. Test oracle.
GradientSet finite_difference_grad(const ModelState& state, const Matrix& features,
                                   const LabelVector& labels, double h);

// Row-wise softmax of a logits expression; stable via max shift.
template <class Derived>
MatrixT<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  MatrixT<S> out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const S m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// Shannon entropy (nats) of a probability vector expression; 0 log 0 = 0.
template <class Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& probs) {
  using S = typename Derived::Scalar;
  S h = 0;
  for (Index i = 0; i < probs.size(); ++i) {
    const S p = probs(i);
    if (p > S(0)) h -= p * std::log(p);
  }
  return h;
}

}  // namespace goldiprox
