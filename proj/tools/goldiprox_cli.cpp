// Command-line front end: `run` executes the selection pipeline on a config,
// `replay` trains a model on a recorded sequence, `spearman` and `compose`
// post-process score dumps and sequences into analysis CSVs.
//
// Exit codes: 0 success, 2 configuration/validation error, 1 runtime error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "goldiprox/csv.hpp"
#include "goldiprox/experiment.hpp"
#include "goldiprox/sequence_store.hpp"

namespace {

using namespace goldiprox;

void print_rows(const TrainRunResult& result) {
  for (const auto& r : result.rows)
    std::printf("step %6lld  acc %.4f  corrupted %.3f  whitenoise %.3f\n",
                static_cast<long long>(r.step), r.test_accuracy, r.corrupted_frac,
                r.whitenoise_frac);
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override) cfg.seed = *seed_override;
  const RunArtifacts artifacts = run_experiment(cfg);
  print_rows(artifacts.result);
  std::printf("wrote %s\n", artifacts.metrics_csv.string().c_str());
  std::printf("wrote %s\n", artifacts.sequence_file.string().c_str());
  if (!artifacts.scores_csv.empty()) std::printf("wrote %s\n", artifacts.scores_csv.string().c_str());
  std::printf("wrote %s\n", artifacts.manifest.string().c_str());
  return 0;
}

int cmd_replay(const std::string& config_path, const std::string& sequence_path,
               std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override) cfg.seed = *seed_override;
  const RunArtifacts artifacts = replay_experiment(cfg, sequence_path);
  print_rows(artifacts.result);
  std::printf("wrote %s\n", artifacts.metrics_csv.string().c_str());
  std::printf("wrote %s\n", artifacts.manifest.string().c_str());
  return 0;
}

int cmd_spearman(const std::string& dump_a, const std::string& dump_b, const std::string& out_csv) {
  const auto a = read_score_dump(dump_a);
  const auto b = read_score_dump(dump_b);
  const auto rows = spearman_by_step(a, b);
  write_text_atomic(out_csv, spearman_to_csv(rows));
  std::printf("wrote %s (%zu steps)\n", out_csv.c_str(), rows.size());
  return 0;
}

int cmd_compose(const std::string& sequence_path, const std::string& dataset_config,
                const std::string& out_csv) {
  const Sequence sequence = read_sequence(sequence_path);
  const ExperimentConfig cfg = load_experiment_config(dataset_config);
  const DatasetBundle bundle = build_bundle(cfg.dataset);
  if (sequence.header.dataset_fingerprint != bundle.fingerprint)
    throw std::runtime_error(
        "compose: sequence fingerprint does not match the dataset built from this config");
  const auto rows = selection_composition(sequence, bundle);
  write_text_atomic(out_csv, composition_to_csv(rows));
  std::printf("wrote %s (%zu steps)\n", out_csv.c_str(), rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prioritized-training engine: reducible-loss online batch selection,\n"
               "baseline acquisition functions, and transferable training sequences"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_override;

  std::string run_config;
  auto* run = app.add_subcommand("run", "Irreducible pretraining + selection loop");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed_override, "Override the config seed");

  std::string replay_config, replay_sequence;
  auto* replay = app.add_subcommand("replay", "Train a model on a recorded sequence");
  replay->add_option("config", replay_config, "Experiment config (JSON)")->required();
  replay->add_option("sequence", replay_sequence, "Sequence file (.gpsq)")->required();
  replay->add_option("--seed", seed_override, "Override the config seed");

  std::string sp_a, sp_b, sp_out = "spearman.csv";
  auto* spearman = app.add_subcommand("spearman", "Per-step rank correlation of two score dumps");
  spearman->add_option("dumpA", sp_a, "First score dump CSV")->required();
  spearman->add_option("dumpB", sp_b, "Second score dump CSV")->required();
  spearman->add_option("-o,--output", sp_out, "Output CSV path");

  std::string co_seq, co_cfg, co_out = "composition.csv";
  auto* compose = app.add_subcommand("compose", "Corrupted/white-noise fractions per step");
  compose->add_option("sequence", co_seq, "Sequence file (.gpsq)")->required();
  compose->add_option("dataset-config", co_cfg, "Config whose dataset section built the sequence")
      ->required();
  compose->add_option("-o,--output", co_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_config, seed_override);
    if (replay->parsed()) return cmd_replay(replay_config, replay_sequence, seed_override);
    if (spearman->parsed()) return cmd_spearman(sp_a, sp_b, sp_out);
    if (compose->parsed()) return cmd_compose(co_seq, co_cfg, co_out);
  } catch (const goldiprox::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
