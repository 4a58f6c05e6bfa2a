// Acceptance suite. Each criterion runs end to end at its stated tolerance
// and prints one pass/fail line; the process exits non-zero if any fail.
// Individual criteria can be selected by number on the command line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "goldiprox/csv.hpp"
#include "goldiprox/experiment.hpp"
#include "goldiprox/sequence_store.hpp"
#include "goldiprox/trainer.hpp"
#include "support/random_bayes.hpp"

using namespace goldiprox;
using goldiprox::testing::BayesInstance;
using goldiprox::testing::random_instance;
using goldiprox::testing::raw_event_probability;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + message;
    }
  }
  void note(const std::string& message) {
    detail += (detail.empty() ? "" : "; ") + message;
  }
};

std::string fmt(double v) { return format_double(v, 4); }

// ---------------------------------------------------------------------------
// Shared experiment setup (desk-scale analog of the QMNIST runs)
// ---------------------------------------------------------------------------

// Desk-scale stand-in for the QMNIST runs: 30 tight Gaussian classes in 16
// dims leave the 128-hidden MLP still climbing at 1,500 steps under uniform
// sampling, which is the low-epoch regime the selection methods differ in.
DatasetConfig desk_dataset(double label_noise, double white_noise) {
  DatasetConfig cfg;
  cfg.source = DatasetSource::synthetic;
  cfg.num_classes = 30;
  cfg.input_dim = 16;
  cfg.n_per_class = 400;  // 12,000 pool
  cfg.spread = 0.14;
  cfg.seed = 42;
  cfg.train_size = 8000;
  cfg.validation_size = 2000;
  cfg.test_size = 2000;
  cfg.corruption.label_noise_rate = label_noise;
  cfg.corruption.white_noise_fraction = white_noise;
  cfg.corruption.seed = 7;
  return cfg;
}

ModelSpec mlp(const DatasetBundle& bundle, std::vector<Index> hidden, double dropout = 0.0) {
  ModelSpec spec;
  spec.input_dim = bundle.input_dim;
  spec.hidden_dims = std::move(hidden);
  spec.num_classes = bundle.num_classes;
  spec.dropout_rate = dropout;
  return spec;
}

IrreducibleModelConfig desk_irreducible(const DatasetBundle& bundle) {
  IrreducibleModelConfig cfg;
  cfg.spec = mlp(bundle, {128, 128});
  cfg.max_epochs = 200;
  cfg.patience = 5;
  cfg.improvement_tolerance = 1e-4;
  cfg.batch_size = 32;
  return cfg;
}

TrainLoopConfig desk_loop(AcquisitionKind kind, std::int64_t steps = 1500) {
  TrainLoopConfig cfg;
  cfg.large_batch_size = 320;
  cfg.batch_size = 32;
  cfg.total_steps = steps;
  cfg.kind = kind;
  cfg.eval_every = 50;
  return cfg;
}

std::uint64_t irr_phase_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x1111); }

double mean_composition_tail(const Sequence& seq, const DatasetBundle& bundle,
                             std::size_t tail_steps, bool whitenoise) {
  const auto rows = selection_composition(seq, bundle);
  const std::size_t from = rows.size() > tail_steps ? rows.size() - tail_steps : 0;
  double sum = 0.0;
  for (std::size_t i = from; i < rows.size(); ++i)
    sum += whitenoise ? rows[i].whitenoise_frac : rows[i].corrupted_frac;
  return sum / static_cast<double>(rows.size() - from);
}

double mean_composition_after(const Sequence& seq, const DatasetBundle& bundle,
                              std::int64_t warmup, bool whitenoise) {
  const auto rows = selection_composition(seq, bundle);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.step <= warmup) continue;
    sum += whitenoise ? r.whitenoise_frac : r.corrupted_frac;
    ++n;
  }
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle
// ---------------------------------------------------------------------------

bool relu_safe(const ModelState& s, const Matrix& x, double margin) {
  Matrix a = x;
  for (std::size_t l = 0; l + 1 < s.weights.size(); ++l) {
    const Matrix z = (a * s.weights[l]).rowwise() + s.biases[l].transpose();
    if (z.cwiseAbs().minCoeff() < margin) return false;
    a = z.cwiseMax(0.0);
  }
  return true;
}

Check criterion_gradient_oracle() {
  Check check;
  ModelSpec spec;
  spec.input_dim = 8;
  spec.hidden_dims = {16, 8};
  spec.num_classes = 4;

  double worst = 0.0;
  int verified = 0;
  Rng data_rng(20240901);
  for (std::uint64_t seed = 0; verified < 20 && seed < 2000; ++seed) {
    const ModelState state = init_params(spec, seed);
    Matrix x(5, 8);
    LabelVector y(5);
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 8; ++j) x(i, j) = data_rng.uniform();
      y(i) = static_cast<int>(data_rng.below(4));
    }
    // central differences need every pre-activation clear of the ReLU kink
    // by more than the h-sized probe can move it
    if (!relu_safe(state, x, 5e-3)) continue;
    ++verified;

    const ForwardResult fwd = forward(state, x, RunMode::train);
    const GradientSet analytic = backward(state, fwd, softmax_cross_entropy(fwd.logits, y).second);
    const GradientSet fd = finite_difference_grad(state, x, y, 1e-3);

    double diff = 0.0, scale = 0.0;
    for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
      diff = std::max(diff, (analytic.weights[l] - fd.weights[l]).cwiseAbs().maxCoeff());
      diff = std::max(diff, (analytic.biases[l] - fd.biases[l]).cwiseAbs().maxCoeff());
      scale = std::max({scale, fd.weights[l].cwiseAbs().maxCoeff(),
                        fd.biases[l].cwiseAbs().maxCoeff()});
    }
    worst = std::max(worst, diff / std::max(scale, 1e-12));
  }
  check.require(verified == 20, "could not assemble 20 kink-safe instances");
  check.require(worst < 1e-4, "max rel err " + fmt(worst) + " >= 1e-4");
  check.note("20 models, max rel err " + fmt(worst));
  return check;
}

// ---------------------------------------------------------------------------
// 2. PPIG identity / EPIG consistency
// ---------------------------------------------------------------------------

Check criterion_ppig_identity() {
  Check check;
  Rng rng(777);
  double worst_identity = 0.0;
  double worst_epig = 0.0;
  double min_epig = 1e300;
  int epig_checked = 0;

  for (int i = 0; i < 1000; ++i) {
    const BayesInstance inst = random_instance(rng);
    const double fwd = ppig_forward(inst.model, inst.d_t, inst.val_pairs, inst.candidate);
    const double sym = ppig_symmetric(inst.model, inst.d_t, inst.val_pairs, inst.candidate);
    worst_identity = std::max(worst_identity, std::abs(fwd - sym));

    // EPIG against the predictive-weighted mean of realized PPIG values,
    // with the joint predictive built from raw full-space enumeration.
    std::vector<Index> val_inputs;
    for (Index x = 0; x < inst.model.num_inputs(); ++x)
      if (x != inst.candidate.input) val_inputs.push_back(x);
    if (!val_inputs.empty() && epig_checked < 400) {
      ++epig_checked;
      const double epig =
          epig_expected(inst.model, inst.d_t, val_inputs, inst.candidate.input);
      min_epig = std::min(min_epig, epig);

      const Index k = inst.model.num_classes();
      const double p_d = raw_event_probability(inst.model, inst.d_t);
      std::vector<Index> assignment(val_inputs.size(), 0);
      double expected = 0.0;
      while (true) {
        std::vector<Observation> val;
        for (std::size_t v = 0; v < val_inputs.size(); ++v)
          val.push_back({val_inputs[v], assignment[v]});
        for (Index y = 0; y < k; ++y) {
          std::vector<Observation> joint = val;
          joint.push_back({inst.candidate.input, y});
          joint.insert(joint.end(), inst.d_t.begin(), inst.d_t.end());
          const double p_joint = raw_event_probability(inst.model, joint) / p_d;
          if (p_joint <= 0.0) continue;
          expected += p_joint * ppig_forward(inst.model, inst.d_t, val,
                                             {inst.candidate.input, y});
        }
        std::size_t pos = 0;
        while (pos < assignment.size()) {
          if (++assignment[pos] < k) break;
          assignment[pos] = 0;
          ++pos;
        }
        if (pos == assignment.size()) break;
      }
      worst_epig = std::max(worst_epig, std::abs(epig - expected));
    }
  }
  check.require(worst_identity < 1e-9,
                "forward/symmetric gap " + fmt(worst_identity) + " >= 1e-9");
  check.require(worst_epig < 1e-10, "epig vs weighted ppig gap " + fmt(worst_epig) + " >= 1e-10");
  check.require(min_epig >= -1e-12, "negative epig " + fmt(min_epig));
  check.note("1000 instances, identity gap " + fmt(worst_identity) + ", epig gap " +
             fmt(worst_epig));
  return check;
}

// ---------------------------------------------------------------------------
// 3. Noisy-label experiment (Figs. 1-2 analog)
// ---------------------------------------------------------------------------

Check criterion_noisy_labels() {
  Check check;
  const DatasetBundle bundle = build_bundle(desk_dataset(0.10, 0.0));

  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  double high_tail = 0.0, red_tail = 0.0;
  double acc_reducible = 0.0, acc_uniform = 0.0, acc_high = 0.0;

  for (std::uint64_t seed : seeds) {
    const auto [irr_model, table] = train_irreducible_model(
        desk_irreducible(bundle), bundle.validation, bundle.train, irr_phase_seed(seed));

    const ModelSpec proxy = mlp(bundle, {128, 128});
    const SelectionRunOutput high = run_selection_loop(
        desk_loop(AcquisitionKind::high_loss), proxy, bundle, nullptr, seed);
    const SelectionRunOutput uni = run_selection_loop(
        desk_loop(AcquisitionKind::uniform), proxy, bundle, nullptr, seed);
    const SelectionRunOutput red = run_selection_loop(
        desk_loop(AcquisitionKind::reducible), proxy, bundle, &table, seed);

    high_tail += mean_composition_tail(high.sequence, bundle, 500, false);
    red_tail += mean_composition_tail(red.sequence, bundle, 500, false);
    acc_high += high.result.rows.back().test_accuracy;
    acc_uniform += uni.result.rows.back().test_accuracy;
    acc_reducible += red.result.rows.back().test_accuracy;
  }
  const double n = static_cast<double>(seeds.size());
  high_tail /= n;
  red_tail /= n;
  acc_high /= n;
  acc_uniform /= n;
  acc_reducible /= n;

  check.require(high_tail >= 0.30,
                "high_loss corrupted tail " + fmt(high_tail) + " < 0.30");
  check.require(red_tail <= 0.10, "reducible corrupted tail " + fmt(red_tail) + " > 0.10");
  check.require(acc_reducible > acc_uniform && acc_uniform > acc_high,
                "accuracy ordering violated: reducible " + fmt(acc_reducible) + ", uniform " +
                    fmt(acc_uniform) + ", high_loss " + fmt(acc_high));
  check.note("corrupted tail: high_loss " + fmt(high_tail) + ", reducible " + fmt(red_tail) +
             "; final acc: reducible " + fmt(acc_reducible) + " > uniform " + fmt(acc_uniform) +
             " > high_loss " + fmt(acc_high));
  return check;
}

// ---------------------------------------------------------------------------
// 4. White-noise experiment (Fig. 3 analog)
// ---------------------------------------------------------------------------

Check criterion_white_noise() {
  Check check;
  const DatasetBundle bundle = build_bundle(desk_dataset(0.0, 0.20));
  const std::uint64_t seed = 1;

  TrainLoopConfig bald_loop = desk_loop(AcquisitionKind::bald);
  bald_loop.optimizer.learning_rate = 0.005;
  bald_loop.bald_mc_samples = 10;
  bald_loop.bald_warmup_steps = 200;
  const SelectionRunOutput bald = run_selection_loop(
      bald_loop, mlp(bundle, {128, 128}, 0.5), bundle, nullptr, seed);

  const auto [irr_model, table] = train_irreducible_model(
      desk_irreducible(bundle), bundle.validation, bundle.train, irr_phase_seed(seed));
  const SelectionRunOutput red = run_selection_loop(
      desk_loop(AcquisitionKind::reducible), mlp(bundle, {128, 128}), bundle, &table, seed);

  const double bald_frac =
      mean_composition_after(bald.sequence, bundle, bald_loop.bald_warmup_steps, true);
  const double red_frac =
      mean_composition_after(red.sequence, bundle, bald_loop.bald_warmup_steps, true);

  check.require(bald_frac >= 0.10 && bald_frac <= 0.30,
                "bald white-noise fraction " + fmt(bald_frac) + " outside 0.20 +- 0.10");
  check.require(red_frac < 0.10, "reducible white-noise fraction " + fmt(red_frac) + " >= 0.10");
  check.note("post-warmup white-noise fraction: bald " + fmt(bald_frac) + ", reducible " +
             fmt(red_frac));
  return check;
}

// ---------------------------------------------------------------------------
// 5. Proxy transfer (Fig. 4 / Table 1 analog)
// ---------------------------------------------------------------------------

Check criterion_proxy_transfer() {
  Check check;
  const DatasetBundle bundle = build_bundle(desk_dataset(0.10, 0.0));
  const ModelSpec proxy = mlp(bundle, {32, 32});
  const ModelSpec big = mlp(bundle, {128, 128});

  const double ratio = static_cast<double>(big.parameter_count()) /
                       static_cast<double>(proxy.parameter_count());
  check.require(ratio >= 4.0, "parameter ratio " + fmt(ratio) + " < 4.0");

  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  double replay_acc = 0.0, uniform_acc = 0.0;
  std::size_t positive_steps = 0, total_steps = 0;

  for (std::uint64_t seed : seeds) {
    const auto [irr_model, table] = train_irreducible_model(
        desk_irreducible(bundle), bundle.validation, bundle.train, irr_phase_seed(seed));

    const SelectionRunOutput proxy_run = run_selection_loop(
        desk_loop(AcquisitionKind::reducible), proxy, bundle, &table, seed, true);
    const ReplayRunOutput big_replay = replay_sequence(
        desk_loop(AcquisitionKind::reducible), bundle, proxy_run.sequence, big, seed, &table, true);
    const SelectionRunOutput big_uniform = run_selection_loop(
        desk_loop(AcquisitionKind::uniform), big, bundle, nullptr, seed);

    for (const auto& row : spearman_by_step(proxy_run.score_dump, big_replay.score_dump)) {
      ++total_steps;
      if (row.rho > 0.0) ++positive_steps;
    }
    replay_acc += big_replay.result.rows.back().test_accuracy;
    uniform_acc += big_uniform.result.rows.back().test_accuracy;
  }
  replay_acc /= static_cast<double>(seeds.size());
  uniform_acc /= static_cast<double>(seeds.size());

  const double positive_share =
      static_cast<double>(positive_steps) / static_cast<double>(total_steps);
  check.require(positive_share >= 0.90,
                "rho > 0 on only " + fmt(100.0 * positive_share) + "% of steps");
  check.require(replay_acc > uniform_acc,
                "replayed acc " + fmt(replay_acc) + " <= uniform acc " + fmt(uniform_acc));
  check.note("param ratio " + fmt(ratio) + "x; rho > 0 on " + fmt(100.0 * positive_share) +
             "% of " + std::to_string(total_steps) + " steps; final acc replay " +
             fmt(replay_acc) + " vs uniform " + fmt(uniform_acc));
  return check;
}

// ---------------------------------------------------------------------------
// 6. Determinism & replay equivalence
// ---------------------------------------------------------------------------

Check criterion_determinism() {
  Check check;
  const auto root = std::filesystem::temp_directory_path() /
                    ("gpx_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(root);

  ExperimentConfig cfg;
  cfg.seed = 11;
  cfg.dataset = desk_dataset(0.10, 0.0);
  cfg.dataset.n_per_class = 120;  // 1,200-point pool keeps this criterion quick
  cfg.dataset.train_size = 800;
  cfg.dataset.validation_size = 200;
  cfg.dataset.test_size = 200;
  cfg.proxy_spec.hidden_dims = {32, 32};
  cfg.big_spec.hidden_dims = {32, 32};  // self-replay: identical spec
  cfg.irreducible.spec.hidden_dims = {32, 32};
  cfg.irreducible_enabled = true;
  cfg.irreducible.max_epochs = 60;
  cfg.loop = desk_loop(AcquisitionKind::reducible, 200);
  cfg.loop.large_batch_size = 80;
  cfg.loop.batch_size = 16;
  cfg.dump_scores = false;

  ExperimentConfig cfg_a = cfg;
  cfg_a.output_dir = (root / "a").string();
  ExperimentConfig cfg_b = cfg;
  cfg_b.output_dir = (root / "b").string();
  const RunArtifacts a = run_experiment(cfg_a);
  const RunArtifacts b = run_experiment(cfg_b);

  check.require(read_text(a.metrics_csv) == read_text(b.metrics_csv),
                "metrics.csv differs between identical runs");
  check.require(read_text(a.sequence_file) == read_text(b.sequence_file),
                "sequence file differs between identical runs");

  ExperimentConfig replay_cfg = cfg;
  replay_cfg.output_dir = (root / "replay").string();
  const RunArtifacts replay = replay_experiment(replay_cfg, a.sequence_file);
  check.require(replay.result.final_model_fingerprint == a.result.final_model_fingerprint,
                "self-replay fingerprint mismatch");
  check.note("byte-identical artifacts; self-replay fingerprint " +
             std::to_string(a.result.final_model_fingerprint));
  std::filesystem::remove_all(root);
  return check;
}

// ---------------------------------------------------------------------------
// 7. Format / fuzz suite
// ---------------------------------------------------------------------------

Check criterion_format_fuzz() {
  Check check;
  Rng rng(20240902);

  // round-trip property
  for (int trial = 0; trial < 1000; ++trial) {
    Sequence seq;
    seq.header.dataset_fingerprint = rng.next_u64();
    seq.header.batch_size = static_cast<std::uint32_t>(1 + rng.below(16));
    seq.header.kind = static_cast<AcquisitionKind>(rng.below(5));
    seq.header.seed = rng.next_u64();
    const auto batches = rng.below(20);
    for (std::uint64_t b = 0; b < batches; ++b) {
      std::vector<std::uint32_t> batch;
      for (std::uint32_t i = 0; i < seq.header.batch_size; ++i)
        batch.push_back(static_cast<std::uint32_t>(rng.next_u64()));
      seq.batches.push_back(std::move(batch));
    }
    seq.header.num_batches = static_cast<std::uint32_t>(seq.batches.size());
    const auto bytes = encode_sequence(seq);
    const Sequence back = decode_sequence(bytes);
    if (encode_sequence(back) != bytes) {
      check.require(false, "round-trip mismatch at trial " + std::to_string(trial));
      break;
    }
  }

  // exhaustive single-byte corruption: typed errors or coherent decodes only
  Sequence seq;
  seq.header.dataset_fingerprint = 0x1122334455667788ULL;
  seq.header.batch_size = 3;
  seq.header.kind = AcquisitionKind::reducible;
  seq.header.seed = 99;
  for (int b = 0; b < 4; ++b) seq.batches.push_back({std::uint32_t(b), std::uint32_t(b + 10), std::uint32_t(b + 20)});
  seq.header.num_batches = 4;
  const auto good = encode_sequence(seq);

  std::size_t structural_errors = 0, silent = 0;
  for (std::size_t pos = 0; pos < good.size(); ++pos) {
    for (std::uint8_t delta : {0x01, 0x40, 0xff}) {
      auto corrupted = good;
      corrupted[pos] = static_cast<std::uint8_t>(corrupted[pos] ^ delta);
      try {
        const Sequence out = decode_sequence(corrupted);
        ++silent;
        // decode without error must still be self-consistent
        if (out.batches.size() != out.header.num_batches) {
          check.require(false, "incoherent decode after corruption");
        }
      } catch (const SequenceError&) {
        ++structural_errors;
      } catch (...) {
        check.require(false, "non-typed failure at byte " + std::to_string(pos));
      }
    }
  }
  // structural fields (magic, version, counts) must always be caught
  for (std::size_t pos : {std::size_t{0}, std::size_t{4}, std::size_t{16}, std::size_t{20}}) {
    auto corrupted = good;
    corrupted[pos] ^= 0xff;
    bool threw = false;
    try {
      decode_sequence(corrupted);
    } catch (const SequenceError&) {
      threw = true;
    }
    check.require(threw, "structural corruption at byte " + std::to_string(pos) + " not caught");
  }

  // fingerprint mismatch always blocks replay
  DatasetConfig dcfg = desk_dataset(0.0, 0.0);
  dcfg.n_per_class = 40;
  dcfg.train_size = 240;
  dcfg.validation_size = 80;
  dcfg.test_size = 80;
  const DatasetBundle bundle = build_bundle(dcfg);
  Sequence foreign;
  foreign.header.dataset_fingerprint = bundle.fingerprint ^ 0xdeadbeefULL;
  foreign.header.batch_size = 2;
  foreign.batches.push_back({bundle.train[0].id, bundle.train[1].id});
  foreign.header.num_batches = 1;
  ModelSpec spec = mlp(bundle, {8});
  bool blocked = false;
  try {
    replay_sequence(desk_loop(AcquisitionKind::uniform, 1), bundle, foreign, spec, 1);
  } catch (const std::runtime_error&) {
    blocked = true;
  }
  check.require(blocked, "fingerprint mismatch did not block replay");

  check.note("1000 round-trips; " + std::to_string(structural_errors) + " typed errors / " +
             std::to_string(silent) + " coherent decodes across " +
             std::to_string(good.size() * 3) + " corruptions");
  return check;
}

// ---------------------------------------------------------------------------
// 8. Decomposition & invariance properties
// ---------------------------------------------------------------------------

Check criterion_properties() {
  Check check;
  DatasetConfig dcfg = desk_dataset(0.1, 0.0);
  dcfg.n_per_class = 60;
  dcfg.train_size = 400;
  dcfg.validation_size = 100;
  dcfg.test_size = 100;
  const DatasetBundle bundle = build_bundle(dcfg);

  // reducible = high_loss + neg_irreducible, exactly, per point
  const ModelState model = init_params(mlp(bundle, {24, 24}), 5);
  const auto index = id_index(bundle.train);
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < 200; ++i) ids.push_back(bundle.train[i].id);
  const BatchView batch = gather_by_id(bundle.train, index, ids);
  IrreducibleLossTable table;
  Rng irr_rng(3);
  for (auto id : ids) table.loss[id] = irr_rng.uniform(0.0, 3.0);
  Rng s1(1), s2(1), s3(1);
  const ScoreVector red = score(AcquisitionKind::reducible, model, &table, batch, s1);
  const ScoreVector hi = score(AcquisitionKind::high_loss, model, &table, batch, s2);
  const ScoreVector neg = score(AcquisitionKind::neg_irreducible, model, &table, batch, s3);
  bool exact = true;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (red.scores[i] != hi.scores[i] + neg.scores[i]) exact = false;
  check.require(exact, "reducible != high_loss + neg_irreducible");

  // top-k invariance under positive affine maps
  Rng rng(17);
  ScoreVector sv;
  for (std::uint32_t i = 0; i < 128; ++i) {
    sv.ids.push_back(i);
    sv.scores.push_back(std::floor(rng.uniform() * 4096.0));
  }
  sv.scores[5] = sv.scores[60] = 1024.0;
  bool invariant = true;
  for (const auto [a, b] : {std::pair{2.0, 0.0}, {0.25, 1.0}, {8.0, -3.0}}) {
    ScoreVector mapped = sv;
    for (double& s : mapped.scores) s = a * s + b;
    if (select_top_k(mapped, 32) != select_top_k(sv, 32)) invariant = false;
  }
  check.require(invariant, "select_top_k not affine-invariant");

  // exact epoch coverage
  std::vector<std::uint32_t> all_ids;
  for (const auto& r : bundle.train) all_ids.push_back(r.id);
  EpochSchedule schedule(all_ids, 96);
  Rng sched_rng(9);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::set<std::uint32_t> seen;
    std::size_t offered = 0;
    while (offered < all_ids.size()) {
      for (auto id : schedule.next_large_batch(sched_rng))
        if (!seen.insert(id).second) check.require(false, "duplicate id within epoch");
      offered = seen.size();
    }
    check.require(seen.size() == all_ids.size(), "epoch did not cover every id");
  }
  check.note("decomposition exact on 200 points; affine invariance; 3 epochs covered exactly");
  return check;
}

struct Criterion {
  int number;
  std::string name;
  double budget_seconds;
  std::function<Check()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "gradient oracle vs central finite differences", 30, criterion_gradient_oracle},
      {2, "ppig forward/symmetric identity and epig consistency", 60, criterion_ppig_identity},
      {3, "noisy-label selection and accuracy ordering", 900, criterion_noisy_labels},
      {4, "white-noise selection under bald vs reducible", 1200, criterion_white_noise},
      {5, "proxy-to-large-model sequence transfer", 1200, criterion_proxy_transfer},
      {6, "determinism and self-replay equivalence", 900, criterion_determinism},
      {7, "sequence format round-trip and fuzzing", 120, criterion_format_fuzz},
      {8, "decomposition and selection invariances", 120, criterion_properties},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!selected.empty() && !selected.count(criterion.number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Check check;
    try {
      check = criterion.run();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds > criterion.budget_seconds) {
      check.ok = false;
      check.detail += (check.detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    if (!check.ok) ++failures;
    std::printf("[%s] criterion %d: %s (%s) [%.1fs]\n", check.ok ? "PASS" : "FAIL",
                criterion.number, criterion.name.c_str(), check.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
