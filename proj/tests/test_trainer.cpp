#include "doctest.h"

#include <algorithm>
#include <set>

#include "goldiprox/experiment.hpp"
#include "goldiprox/trainer.hpp"

using namespace goldiprox;

namespace {

ModelSpec spec_of(Index in, std::vector<Index> hidden, Index classes, double dropout = 0.0) {
  ModelSpec spec;
  spec.input_dim = in;
  spec.hidden_dims = std::move(hidden);
  spec.num_classes = classes;
  spec.dropout_rate = dropout;
  return spec;
}

// Small 4-class bundle with optional label noise; deterministic.
DatasetBundle small_bundle(double noise_rate = 0.0, std::size_t train = 240,
                           std::size_t val = 120, std::size_t test = 120) {
  DatasetConfig cfg;
  cfg.source = DatasetSource::synthetic;
  cfg.num_classes = 4;
  cfg.input_dim = 8;
  cfg.n_per_class = static_cast<int>((train + val + test) / 4);
  cfg.spread = 0.15;
  cfg.seed = 1234;
  cfg.train_size = train;
  cfg.validation_size = val;
  cfg.test_size = test;
  cfg.corruption.label_noise_rate = noise_rate;
  cfg.corruption.seed = 5;
  return build_bundle(cfg);
}

IrreducibleModelConfig quick_irr_config() {
  IrreducibleModelConfig cfg;
  cfg.spec = spec_of(8, {16, 16}, 4);
  cfg.max_epochs = 40;
  cfg.patience = 3;
  cfg.batch_size = 32;
  return cfg;
}

TrainLoopConfig quick_loop(AcquisitionKind kind, std::int64_t steps) {
  TrainLoopConfig cfg;
  cfg.large_batch_size = 60;
  cfg.batch_size = 12;
  cfg.total_steps = steps;
  cfg.kind = kind;
  cfg.eval_every = 10;
  return cfg;
}

}  // namespace

TEST_CASE("irreducible table covers exactly the training ids with finite losses") {
  const DatasetBundle bundle = small_bundle();
  const auto [model, table] =
      train_irreducible_model(quick_irr_config(), bundle.validation, bundle.train, 3);
  CHECK(table.loss.size() == bundle.train.size());
  for (const auto& r : bundle.train) {
    REQUIRE(table.loss.count(r.id) == 1);
    CHECK(std::isfinite(table.at(r.id)));
    CHECK(table.at(r.id) >= 0.0);
  }
  CHECK(table.source_model_fingerprint == model.fingerprint());
}

TEST_CASE("a training point duplicated from validation lands below the loss median") {
  DatasetBundle bundle = small_bundle();
  // plant an exact copy of a validation record in the training set
  ExampleRecord dup = bundle.validation.front();
  dup.id = 900000;
  bundle.train.push_back(dup);
  refresh_fingerprint(bundle);

  const auto [model, table] =
      train_irreducible_model(quick_irr_config(), bundle.validation, bundle.train, 3);
  std::vector<double> losses;
  for (const auto& [id, loss] : table.loss) losses.push_back(loss);
  std::sort(losses.begin(), losses.end());
  const double median = losses[losses.size() / 2];
  CHECK(table.at(900000) < median);
}

TEST_CASE("corrupted training points carry higher irreducible loss than clean ones") {
  const DatasetBundle bundle = small_bundle(0.10, 400, 200, 200);
  const auto [model, table] =
      train_irreducible_model(quick_irr_config(), bundle.validation, bundle.train, 7);
  double corrupted_mean = 0.0, clean_mean = 0.0;
  int corrupted_n = 0, clean_n = 0;
  for (const auto& r : bundle.train) {
    if (r.corrupted) {
      corrupted_mean += table.at(r.id);
      ++corrupted_n;
    } else {
      clean_mean += table.at(r.id);
      ++clean_n;
    }
  }
  REQUIRE(corrupted_n > 0);
  corrupted_mean /= corrupted_n;
  clean_mean /= clean_n;
  CHECK(corrupted_mean > clean_mean);
}

TEST_CASE("train_irreducible_model rejects an empty validation set") {
  const DatasetBundle bundle = small_bundle();
  CHECK_THROWS_AS(train_irreducible_model(quick_irr_config(), {}, bundle.train, 1),
                  std::invalid_argument);
}

TEST_CASE("degenerate |B| = |b| selection is plain shuffled SGD") {
  const DatasetBundle bundle = small_bundle();
  TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 8);
  cfg.large_batch_size = 60;
  cfg.batch_size = 60;

  const SelectionRunOutput out =
      run_selection_loop(cfg, spec_of(8, {8}, 4), bundle, nullptr, 17);

  // Reconstruct the schedule the loop must have followed.
  std::vector<std::uint32_t> ids;
  for (const auto& r : bundle.train) ids.push_back(r.id);
  EpochSchedule schedule(ids, 60);
  Rng schedule_rng = Rng::derive(17, StreamId::schedule);
  for (const auto& batch : out.sequence.batches) {
    const auto chunk = schedule.next_large_batch(schedule_rng);
    CHECK(std::set<std::uint32_t>(batch.begin(), batch.end()) ==
          std::set<std::uint32_t>(chunk.begin(), chunk.end()));
  }
}

TEST_CASE("selection loop conserves step counts and batch shapes") {
  const DatasetBundle bundle = small_bundle();
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::high_loss, 15);
  const SelectionRunOutput out =
      run_selection_loop(cfg, spec_of(8, {8}, 4), bundle, nullptr, 2);
  CHECK(out.model.step_count == 15);
  CHECK(out.sequence.batches.size() == 15);
  CHECK(out.sequence.header.num_batches == 15);
  CHECK(out.sequence.header.batch_size == 12);
  CHECK(out.sequence.header.kind == AcquisitionKind::high_loss);
  CHECK(out.sequence.header.dataset_fingerprint == bundle.fingerprint);
  for (const auto& batch : out.sequence.batches) CHECK(batch.size() == 12);
  CHECK_FALSE(out.result.rows.empty());
  for (std::size_t i = 1; i < out.result.rows.size(); ++i)
    CHECK(out.result.rows[i].step > out.result.rows[i - 1].step);
  CHECK(out.result.rows.back().step == 15);
}

TEST_CASE("no id is selected twice within one epoch") {
  const DatasetBundle bundle = small_bundle();
  TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 8);
  cfg.large_batch_size = 60;  // 240/60 = 4 steps per epoch
  cfg.batch_size = 12;
  const SelectionRunOutput out =
      run_selection_loop(cfg, spec_of(8, {8}, 4), bundle, nullptr, 5);
  for (std::size_t epoch_start = 0; epoch_start < 8; epoch_start += 4) {
    std::set<std::uint32_t> seen;
    for (std::size_t t = epoch_start; t < epoch_start + 4; ++t)
      for (std::uint32_t id : out.sequence.batches[t]) CHECK(seen.insert(id).second);
  }
}

TEST_CASE("same seed gives byte-identical sequences; different seed differs") {
  const DatasetBundle bundle = small_bundle(0.1);
  const auto [m, table] =
      train_irreducible_model(quick_irr_config(), bundle.validation, bundle.train, 11);
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::reducible, 12);
  const ModelSpec proxy = spec_of(8, {8}, 4);

  const SelectionRunOutput a = run_selection_loop(cfg, proxy, bundle, &table, 5);
  const SelectionRunOutput b = run_selection_loop(cfg, proxy, bundle, &table, 5);
  const SelectionRunOutput c = run_selection_loop(cfg, proxy, bundle, &table, 6);
  CHECK(encode_sequence(a.sequence) == encode_sequence(b.sequence));
  CHECK(a.result.final_model_fingerprint == b.result.final_model_fingerprint);
  CHECK(encode_sequence(a.sequence) != encode_sequence(c.sequence));
}

TEST_CASE("self-replay reproduces the recorder's final parameters exactly") {
  const DatasetBundle bundle = small_bundle();
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::high_loss, 20);
  const ModelSpec proxy = spec_of(8, {10, 6}, 4);

  const SelectionRunOutput recorded =
      run_selection_loop(cfg, proxy, bundle, nullptr, 33);
  const ReplayRunOutput replayed =
      replay_sequence(cfg, bundle, recorded.sequence, proxy, 33);
  CHECK(replayed.model.step_count == 20);
  CHECK(replayed.result.final_model_fingerprint == recorded.result.final_model_fingerprint);
}

TEST_CASE("self-replay also holds with dropout in the training forward") {
  const DatasetBundle bundle = small_bundle();
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 10);
  const ModelSpec proxy = spec_of(8, {12}, 4, 0.3);
  const SelectionRunOutput recorded = run_selection_loop(cfg, proxy, bundle, nullptr, 8);
  const ReplayRunOutput replayed = replay_sequence(cfg, bundle, recorded.sequence, proxy, 8);
  CHECK(replayed.result.final_model_fingerprint == recorded.result.final_model_fingerprint);
}

TEST_CASE("replaying a bigger spec trains a bigger model on the same batches") {
  const DatasetBundle bundle = small_bundle();
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 10);
  const ModelSpec proxy = spec_of(8, {32, 32}, 4);
  const ModelSpec big = spec_of(8, {128, 128}, 4);
  CHECK(static_cast<double>(big.parameter_count()) /
            static_cast<double>(proxy.parameter_count()) >=
        4.0);

  const SelectionRunOutput recorded = run_selection_loop(cfg, proxy, bundle, nullptr, 3);
  const ReplayRunOutput replayed = replay_sequence(cfg, bundle, recorded.sequence, big, 3);
  CHECK(replayed.model.spec.hidden_dims == big.hidden_dims);
  CHECK(replayed.model.step_count == 10);
}

TEST_CASE("replay refuses a foreign dataset fingerprint") {
  const DatasetBundle bundle = small_bundle();
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 4);
  const ModelSpec proxy = spec_of(8, {8}, 4);
  SelectionRunOutput recorded = run_selection_loop(cfg, proxy, bundle, nullptr, 3);
  recorded.sequence.header.dataset_fingerprint ^= 0x1;
  CHECK_THROWS_WITH_AS(replay_sequence(cfg, bundle, recorded.sequence, proxy, 3),
                       doctest::Contains("fingerprint"), std::runtime_error);
}

TEST_CASE("replay rejects ids that are not in the bundle") {
  const DatasetBundle bundle = small_bundle();
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 4);
  const ModelSpec proxy = spec_of(8, {8}, 4);
  SelectionRunOutput recorded = run_selection_loop(cfg, proxy, bundle, nullptr, 3);
  recorded.sequence.batches[1][0] = 4000000000u;
  CHECK_THROWS_WITH_AS(replay_sequence(cfg, bundle, recorded.sequence, proxy, 3),
                       doctest::Contains("not in dataset"), std::runtime_error);
}

TEST_CASE("an empty sequence leaves the model at its initialization") {
  const DatasetBundle bundle = small_bundle();
  const TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 4);
  const ModelSpec proxy = spec_of(8, {8}, 4);
  Sequence empty;
  empty.header.dataset_fingerprint = bundle.fingerprint;
  empty.header.batch_size = static_cast<std::uint32_t>(cfg.batch_size);
  empty.header.num_batches = 0;

  const ReplayRunOutput out = replay_sequence(cfg, bundle, empty, proxy, 42);
  const ModelState fresh = init_params(proxy, Rng::derive(42, StreamId::init).next_u64());
  CHECK(out.model.step_count == 0);
  CHECK(out.model.fingerprint() == fresh.fingerprint());
}

TEST_CASE("evaluate: uniform logits predict class 0 everywhere") {
  const ModelSpec spec = spec_of(8, {4}, 4);
  ModelState model = init_params(spec, 1);
  for (auto& w : model.weights) w.setZero();

  const DatasetBundle bundle = small_bundle();
  double class0_share = 0.0;
  for (const auto& r : bundle.test) class0_share += r.label == 0 ? 1.0 : 0.0;
  class0_share /= static_cast<double>(bundle.test.size());
  CHECK(evaluate(model, bundle.test) == doctest::Approx(class0_share));
}

TEST_CASE("evaluate: a memorizing model scores 1.0 and ignores ordering") {
  DatasetConfig dcfg;
  dcfg.num_classes = 4;
  dcfg.input_dim = 8;
  dcfg.n_per_class = 30;
  dcfg.spread = 0.05;  // cleanly separable, so memorization can reach 100%
  dcfg.seed = 77;
  dcfg.train_size = 40;
  dcfg.validation_size = 40;
  dcfg.test_size = 40;
  DatasetBundle bundle = build_bundle(dcfg);

  TrainLoopConfig cfg = quick_loop(AcquisitionKind::uniform, 400);
  cfg.large_batch_size = 40;
  cfg.batch_size = 20;
  cfg.optimizer.weight_decay = 0.0;
  const SelectionRunOutput out =
      run_selection_loop(cfg, spec_of(8, {32, 32}, 4), bundle, nullptr, 9);
  CHECK(evaluate(out.model, bundle.train) == doctest::Approx(1.0));

  auto shuffled = bundle.test;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(evaluate(out.model, bundle.test) == evaluate(out.model, shuffled));
}
