#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "goldiprox/data.hpp"
#include "goldiprox/trainer.hpp"

namespace goldiprox {

// Configuration problems are reported before any training starts and map to
// CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetSource { synthetic, idx };

struct DatasetConfig {
  DatasetSource source = DatasetSource::synthetic;
  // synthetic
  int num_classes = 10;
  Index input_dim = 64;
  int n_per_class = 1200;
  double spread = 0.3;
  std::uint64_t seed = 42;
  // idx
  std::string idx_images;
  std::string idx_labels;
  // splits (carved from the generated/loaded pool by a seeded shuffle)
  std::size_t train_size = 8000;
  std::size_t validation_size = 2000;
  std::size_t test_size = 2000;
  CorruptionConfig corruption;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  DatasetConfig dataset;
  ModelSpec proxy_spec;
  ModelSpec big_spec;
  bool irreducible_enabled = false;
  IrreducibleModelConfig irreducible;  // spec filled from model section
  TrainLoopConfig loop;
  bool emit_svg = false;
  bool dump_scores = false;

  void validate() const;  // throws ConfigError with field diagnostics
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// The fully-resolved configuration (defaults included) as canonical JSON.
std::string resolved_config_json(const ExperimentConfig& cfg);

// Generation/ingestion, split carving, label noise on train (and optionally
// validation), white-noise injection on train, fingerprint refresh.
DatasetBundle build_bundle(const DatasetConfig& cfg);

struct RunArtifacts {
  std::filesystem::path metrics_csv;
  std::filesystem::path sequence_file;
  std::filesystem::path scores_csv;   // empty when not dumped
  std::filesystem::path manifest;
  TrainRunResult result;
};

// Irreducible pretraining (when configured) -> selection loop -> artifacts.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

// Large-model replay of a recorded sequence under this config's dataset.
RunArtifacts replay_experiment(const ExperimentConfig& cfg,
                               const std::filesystem::path& sequence_path);

struct SpearmanRow {
  std::int64_t step = 0;
  double rho = 0.0;
};

// Spearman rank correlation with average-rank tie handling.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

// Per-step rho over the (step, id) keys shared by both dumps; requires at
// least 2 shared points per step.
std::vector<SpearmanRow> spearman_by_step(const std::vector<ScoreDumpRow>& a,
                                          const std::vector<ScoreDumpRow>& b);

std::string spearman_to_csv(const std::vector<SpearmanRow>& rows);

struct CompositionRow {
  std::int64_t step = 0;
  double corrupted_frac = 0.0;
  double whitenoise_frac = 0.0;
  double corrupted_frac_w100 = 0.0;   // trailing 100-step window mean
  double whitenoise_frac_w100 = 0.0;
};

// Per-step corrupted/white-noise fractions of the selected batches.
std::vector<CompositionRow> selection_composition(const Sequence& sequence,
                                                  const DatasetBundle& bundle);

std::string composition_to_csv(const std::vector<CompositionRow>& rows);

}  // namespace goldiprox
