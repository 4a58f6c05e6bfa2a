#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "goldiprox/acquisition.hpp"
#include "goldiprox/data.hpp"
#include "goldiprox/model.hpp"
#include "goldiprox/sequence_store.hpp"

namespace goldiprox {

struct TrainLoopConfig {
  std::size_t large_batch_size = 320;  // |B|
  std::size_t batch_size = 32;         // |b|
  std::int64_t total_steps = 1;
  AcquisitionKind kind = AcquisitionKind::uniform;
  OptimizerConfig optimizer;
  std::int64_t eval_every = 50;
  int bald_mc_samples = 10;
  std::int64_t bald_warmup_steps = 200;  // analysis window start for BALD runs

  // Also checks that the epoch tail chunk can fill a training batch:
  // train_size % |B| must be 0 or >= |b|.
  void validate(std::size_t train_size) const;
};

struct IrreducibleModelConfig {
  ModelSpec spec;
  std::int64_t max_epochs = 200;
  std::int64_t patience = 5;       // epochs without improvement before stop
  double improvement_tolerance = 1e-4;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
};

struct MetricsRow {
  std::int64_t step = 0;
  double test_accuracy = 0.0;
  double corrupted_frac = 0.0;   // of the selected batch at this step
  double whitenoise_frac = 0.0;  // of the selected batch at this step
  double mean_score = 0.0;       // over the selected batch
  double max_score = 0.0;
};

struct TrainRunResult {
  std::vector<MetricsRow> rows;
  std::uint64_t final_model_fingerprint = 0;
};

struct ScoreDumpRow {
  std::int64_t step = 0;
  std::uint32_t id = 0;
  AcquisitionKind kind = AcquisitionKind::uniform;
  double score = 0.0;
};

struct SelectionRunOutput {
  ModelState model;
  Sequence sequence;
  TrainRunResult result;
  std::vector<ScoreDumpRow> score_dump;  // populated when requested
};

struct ReplayRunOutput {
  ModelState model;
  TrainRunResult result;
  std::vector<ScoreDumpRow> score_dump;
};

// Trains on the validation set with uniform shuffled mini-batches until the
// patience criterion or max_epochs, then fills the loss table with one
// eval-mode pass over the full training set.
std::pair<ModelState, IrreducibleLossTable> train_irreducible_model(
    const IrreducibleModelConfig& cfg, const std::vector<ExampleRecord>& validation_set,
    const std::vector<ExampleRecord>& training_set, std::uint64_t seed);

// One pass of the selection loop: per step, draw a large batch without
// replacement, score it, select the top |b|, take one optimizer step on the
// selection, and append the selected ids (descending-score order) to the
// sequence. irr is required for neg_irreducible/reducible.
SelectionRunOutput run_selection_loop(const TrainLoopConfig& cfg, const ModelSpec& proxy_spec,
                                      const DatasetBundle& bundle, const IrreducibleLossTable* irr,
                                      std::uint64_t seed, bool dump_scores = false);

// Trains a fresh model of big_spec on the recorded batches, in order, with
// no scoring. Refuses to run when sequence.header.dataset_fingerprint does
// not match the bundle. When dump_scores is set, the recorder's large-batch
// schedule is reconstructed from the header seed and the model's scores on
// each presented batch are dumped at eval_every steps (irr required).
ReplayRunOutput replay_sequence(const TrainLoopConfig& cfg, const DatasetBundle& bundle,
                                const Sequence& sequence, const ModelSpec& big_spec,
                                std::uint64_t seed, const IrreducibleLossTable* irr = nullptr,
                                bool dump_scores = false);

// Argmax-prediction accuracy in eval mode; argmax ties go to the lowest
// class index.
double evaluate(const ModelState& model, const std::vector<ExampleRecord>& test_set);

}  // namespace goldiprox
