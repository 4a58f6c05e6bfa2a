#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "goldiprox/data.hpp"
#include "goldiprox/model.hpp"

namespace goldiprox {

enum class AcquisitionKind : std::uint8_t {
  uniform = 0,
  high_loss = 1,
  neg_irreducible = 2,
  reducible = 3,
  bald = 4,
};

const char* to_string(AcquisitionKind kind);
AcquisitionKind acquisition_from_string(std::string_view name);

// Per-training-point cross-entropy under the validation-trained model.
struct IrreducibleLossTable {
  std::unordered_map<std::uint32_t, double> loss;
  std::uint64_t source_model_fingerprint = 0;

  double at(std::uint32_t id) const;  // throws if missing
};

// Parallel (id, score) lists for one presented large batch. Higher score
// means higher training priority for every kind.
struct ScoreVector {
  std::vector<std::uint32_t> ids;
  std::vector<double> scores;
  AcquisitionKind kind = AcquisitionKind::uniform;
  std::int64_t step = 0;
};

// Loss-based kinds run eval-mode forwards (no dropout). `irr` is required
// for neg_irreducible and reducible; `rng` is consumed only by uniform.
//   uniform:          i.i.d. U(0,1)
//   high_loss:        current cross-entropy loss
//   neg_irreducible:  -irr[id]
//   reducible:        loss - irr[id]
ScoreVector score(AcquisitionKind kind, const ModelState& model, const IrreducibleLossTable* irr,
                  const BatchView& batch, Rng& rng);

// MC-dropout mutual information between parameters and the unknown label:
// H[mean_t p_t(y|x)] - mean_t H[p_t(y|x)] over T stochastic passes. Label-free.
ScoreVector score_bald(const ModelState& model, const BatchView& batch, int mc_samples, Rng& rng);

// The entropy combination above for one point, from explicit predictive
// distributions. score_bald is a batched wrapper around this.
double bald_from_probs(const std::vector<Vector>& mc_probs);

// Ids of the k largest scores; ties broken by smaller id; output ordered by
// descending score then ascending id.
std::vector<std::uint32_t> select_top_k(const ScoreVector& scores, std::size_t k);

}  // namespace goldiprox
