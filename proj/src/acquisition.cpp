#include "goldiprox/acquisition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace goldiprox {

const char* to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::uniform: return "uniform";
    case AcquisitionKind::high_loss: return "high_loss";
    case AcquisitionKind::neg_irreducible: return "neg_irreducible";
    case AcquisitionKind::reducible: return "reducible";
    case AcquisitionKind::bald: return "bald";
  }
  return "unknown";
}

AcquisitionKind acquisition_from_string(std::string_view name) {
  if (name == "uniform") return AcquisitionKind::uniform;
  if (name == "high_loss") return AcquisitionKind::high_loss;
  if (name == "neg_irreducible") return AcquisitionKind::neg_irreducible;
  if (name == "reducible") return AcquisitionKind::reducible;
  if (name == "bald") return AcquisitionKind::bald;
  throw std::invalid_argument("unknown acquisition kind: " + std::string(name));
}

double IrreducibleLossTable::at(std::uint32_t id) const {
  const auto it = loss.find(id);
  if (it == loss.end())
    throw std::invalid_argument("irreducible loss table has no entry for id " + std::to_string(id));
  return it->second;
}

ScoreVector score(AcquisitionKind kind, const ModelState& model, const IrreducibleLossTable* irr,
                  const BatchView& batch, Rng& rng) {
  ScoreVector out;
  out.kind = kind;
  out.ids = batch.ids;
  out.scores.resize(batch.ids.size());

  if (kind == AcquisitionKind::bald)
    throw std::invalid_argument("score: bald requires score_bald (stochastic forwards)");
  if ((kind == AcquisitionKind::neg_irreducible || kind == AcquisitionKind::reducible) && irr == nullptr)
    throw std::invalid_argument("score: irreducible loss table required for this kind");

  if (kind == AcquisitionKind::uniform) {
    for (auto& s : out.scores) s = rng.uniform();
    return out;
  }

  Vector loss;
  if (kind == AcquisitionKind::high_loss || kind == AcquisitionKind::reducible) {
    const ForwardResult fwd = forward(model, batch.features, RunMode::eval);
    loss = softmax_cross_entropy(fwd.logits, batch.labels).first;
  }

  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    switch (kind) {
      case AcquisitionKind::high_loss:
        out.scores[i] = loss(static_cast<Index>(i));
        break;
      case AcquisitionKind::neg_irreducible:
        out.scores[i] = -irr->at(batch.ids[i]);
        break;
      case AcquisitionKind::reducible:
        out.scores[i] = loss(static_cast<Index>(i)) - irr->at(batch.ids[i]);
        break;
      default:
        break;
    }
  }
  return out;
}

double bald_from_probs(const std::vector<Vector>& mc_probs) {
  if (mc_probs.size() < 2)
    throw std::invalid_argument("bald_from_probs: need at least 2 MC samples");
  Vector mean = Vector::Zero(mc_probs.front().size());
  double mean_entropy = 0.0;
  for (const Vector& p : mc_probs) {
    mean += p;
    mean_entropy += entropy(p);
  }
  mean /= static_cast<double>(mc_probs.size());
  mean_entropy /= static_cast<double>(mc_probs.size());
  return entropy(mean) - mean_entropy;
}

ScoreVector score_bald(const ModelState& model, const BatchView& batch, int mc_samples, Rng& rng) {
  if (model.spec.dropout_rate <= 0.0)
    throw std::invalid_argument("score_bald: model has no dropout");
  if (mc_samples < 2) throw std::invalid_argument("score_bald: mc_samples must be >= 2");

  ScoreVector out;
  out.kind = AcquisitionKind::bald;
  out.ids = batch.ids;
  const Index n = batch.features.rows();
  const Index k = model.spec.num_classes;

  Matrix mean_probs = Matrix::Zero(n, k);
  Vector sum_entropy = Vector::Zero(n);
  for (int t = 0; t < mc_samples; ++t) {
    const ForwardResult fwd = forward(model, batch.features, RunMode::train, &rng);
    const Matrix probs = softmax_rows(fwd.logits);
    mean_probs += probs;
    for (Index i = 0; i < n; ++i) sum_entropy(i) += entropy(probs.row(i).transpose());
  }
  mean_probs /= static_cast<double>(mc_samples);

  out.scores.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    out.scores[static_cast<std::size_t>(i)] =
        entropy(mean_probs.row(i).transpose()) - sum_entropy(i) / static_cast<double>(mc_samples);
  }
  return out;
}

std::vector<std::uint32_t> select_top_k(const ScoreVector& scores, std::size_t k) {
  if (k > scores.ids.size())
    throw std::invalid_argument("select_top_k: k exceeds batch size");
  std::vector<std::size_t> order(scores.ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores.scores[a] != scores.scores[b]) return scores.scores[a] > scores.scores[b];
    return scores.ids[a] < scores.ids[b];
  });
  std::vector<std::uint32_t> selected;
  selected.reserve(k);
  for (std::size_t i = 0; i < k; ++i) selected.push_back(scores.ids[order[i]]);
  return selected;
}

}  // namespace goldiprox
