#include "goldiprox/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace goldiprox {

void TrainLoopConfig::validate(std::size_t train_size) const {
  if (batch_size < 1) throw std::invalid_argument("loop: batch_size must be >= 1");
  // |B| == |b| is the degenerate no-selection case (plain shuffled SGD) and
  // is allowed here; the CLI config layer demands a real selection ratio.
  if (large_batch_size < batch_size)
    throw std::invalid_argument("loop: large_batch_size must be >= batch_size");
  if (total_steps < 1) throw std::invalid_argument("loop: total_steps must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("loop: eval_every must be >= 1");
  if (large_batch_size > train_size)
    throw std::invalid_argument("loop: large_batch_size exceeds training set size");
  const std::size_t tail = train_size % large_batch_size;
  if (tail != 0 && tail < batch_size)
    throw std::invalid_argument(
        "loop: epoch tail chunk smaller than batch_size (adjust large_batch_size)");
}

namespace {

struct StepContext {
  ModelState* state;
  const TrainLoopConfig* cfg;
  Rng* dropout_rng;
};

// One optimizer step on an already-gathered batch. Shared verbatim between
// the selection loop and sequence replay so their trajectories can match.
void train_step(StepContext ctx, const BatchView& batch) {
  Rng* rng = ctx.state->spec.dropout_rate > 0.0 ? ctx.dropout_rng : nullptr;
  const ForwardResult fwd = forward(*ctx.state, batch.features, RunMode::train, rng);
  const auto [loss, dlogits] = softmax_cross_entropy(fwd.logits, batch.labels);
  const GradientSet grads = backward(*ctx.state, fwd, dlogits);
  *ctx.state = adamw_step(std::move(*ctx.state), grads, ctx.cfg->optimizer);
}

struct BatchComposition {
  double corrupted_frac = 0.0;
  double whitenoise_frac = 0.0;
};

BatchComposition composition_of(const std::vector<ExampleRecord>& records,
                                const std::unordered_map<std::uint32_t, std::size_t>& index,
                                const std::vector<std::uint32_t>& ids) {
  BatchComposition c;
  if (ids.empty()) return c;
  for (std::uint32_t id : ids) {
    const ExampleRecord& r = records[index.at(id)];
    if (r.corrupted) c.corrupted_frac += 1.0;
    if (r.white_noise) c.whitenoise_frac += 1.0;
  }
  c.corrupted_frac /= static_cast<double>(ids.size());
  c.whitenoise_frac /= static_cast<double>(ids.size());
  return c;
}

}  // namespace

std::pair<ModelState, IrreducibleLossTable> train_irreducible_model(
    const IrreducibleModelConfig& cfg, const std::vector<ExampleRecord>& validation_set,
    const std::vector<ExampleRecord>& training_set, std::uint64_t seed) {
  if (validation_set.empty())
    throw std::invalid_argument("train_irreducible_model: empty validation set");
  if (cfg.max_epochs < 1 || cfg.patience < 1)
    throw std::invalid_argument("train_irreducible_model: max_epochs and patience must be >= 1");

  ModelState state = init_params(cfg.spec, Rng::derive(seed, StreamId::init).next_u64());
  Rng shuffle_rng = Rng::derive(seed, StreamId::schedule);
  Rng dropout_rng = Rng::derive(seed, StreamId::dropout);

  std::vector<std::size_t> order(validation_set.size());
  std::iota(order.begin(), order.end(), 0);

  double best_loss = std::numeric_limits<double>::infinity();
  std::int64_t epochs_since_improvement = 0;
  for (std::int64_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      const Index n = static_cast<Index>(end - start);
      Matrix features(n, validation_set.front().features.size());
      LabelVector labels(n);
      for (Index i = 0; i < n; ++i) {
        const ExampleRecord& r = validation_set[order[start + static_cast<std::size_t>(i)]];
        features.row(i) = r.features.transpose();
        labels(i) = r.label;
      }
      Rng* rng = state.spec.dropout_rate > 0.0 ? &dropout_rng : nullptr;
      const ForwardResult fwd = forward(state, features, RunMode::train, rng);
      const auto [loss, dlogits] = softmax_cross_entropy(fwd.logits, labels);
      epoch_loss_sum += loss.sum();
      seen += static_cast<std::size_t>(n);
      const GradientSet grads = backward(state, fwd, dlogits);
      state = adamw_step(std::move(state), grads, cfg.optimizer);
    }
    const double epoch_loss = epoch_loss_sum / static_cast<double>(seen);
    if (best_loss - epoch_loss >= cfg.improvement_tolerance) {
      best_loss = epoch_loss;
      epochs_since_improvement = 0;
    } else if (++epochs_since_improvement >= cfg.patience) {
      break;
    }
  }

  IrreducibleLossTable table;
  table.source_model_fingerprint = state.fingerprint();
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < training_set.size(); start += kChunk) {
    const std::size_t end = std::min(start + kChunk, training_set.size());
    const Index n = static_cast<Index>(end - start);
    Matrix features(n, training_set.front().features.size());
    LabelVector labels(n);
    for (Index i = 0; i < n; ++i) {
      const ExampleRecord& r = training_set[start + static_cast<std::size_t>(i)];
      features.row(i) = r.features.transpose();
      labels(i) = r.label;
    }
    const ForwardResult fwd = forward(state, features, RunMode::eval);
    const Vector loss = softmax_cross_entropy(fwd.logits, labels).first;
    for (Index i = 0; i < n; ++i)
      table.loss[training_set[start + static_cast<std::size_t>(i)].id] = loss(i);
  }
  return {std::move(state), std::move(table)};
}

SelectionRunOutput run_selection_loop(const TrainLoopConfig& cfg, const ModelSpec& proxy_spec,
                                      const DatasetBundle& bundle, const IrreducibleLossTable* irr,
                                      std::uint64_t seed, bool dump_scores) {
  cfg.validate(bundle.train.size());
  const bool needs_irr =
      cfg.kind == AcquisitionKind::neg_irreducible || cfg.kind == AcquisitionKind::reducible;
  if (needs_irr && irr == nullptr)
    throw std::invalid_argument("run_selection_loop: kind requires an irreducible loss table");
  if (cfg.kind == AcquisitionKind::bald && proxy_spec.dropout_rate <= 0.0)
    throw std::invalid_argument("run_selection_loop: bald requires dropout_rate > 0");

  SelectionRunOutput out;
  out.model = init_params(proxy_spec, Rng::derive(seed, StreamId::init).next_u64());
  Rng schedule_rng = Rng::derive(seed, StreamId::schedule);
  Rng scoring_rng = Rng::derive(seed, StreamId::scoring);
  Rng dropout_rng = Rng::derive(seed, StreamId::dropout);

  out.sequence.header.dataset_fingerprint = bundle.fingerprint;
  out.sequence.header.batch_size = static_cast<std::uint32_t>(cfg.batch_size);
  out.sequence.header.kind = cfg.kind;
  out.sequence.header.seed = seed;

  const auto train_index = id_index(bundle.train);
  std::vector<std::uint32_t> train_ids;
  train_ids.reserve(bundle.train.size());
  for (const auto& r : bundle.train) train_ids.push_back(r.id);
  EpochSchedule schedule(train_ids, cfg.large_batch_size);

  StepContext ctx{&out.model, &cfg, &dropout_rng};
  for (std::int64_t step = 1; step <= cfg.total_steps; ++step) {
    const std::vector<std::uint32_t> chunk = schedule.next_large_batch(schedule_rng);
    const BatchView large = gather_by_id(bundle.train, train_index, chunk);
    ScoreVector scores = cfg.kind == AcquisitionKind::bald
                             ? score_bald(out.model, large, cfg.bald_mc_samples, scoring_rng)
                             : score(cfg.kind, out.model, irr, large, scoring_rng);
    scores.step = step;

    const std::vector<std::uint32_t> selected = select_top_k(scores, cfg.batch_size);
    const BatchView batch = gather_by_id(bundle.train, train_index, selected);
    train_step(ctx, batch);
    out.sequence.batches.push_back(selected);

    if (step % cfg.eval_every == 0 || step == cfg.total_steps) {
      if (dump_scores) {
        for (std::size_t i = 0; i < scores.ids.size(); ++i)
          out.score_dump.push_back({step, scores.ids[i], scores.kind, scores.scores[i]});
      }
      if (out.result.rows.empty() || out.result.rows.back().step != step) {
        MetricsRow row;
        row.step = step;
        row.test_accuracy = evaluate(out.model, bundle.test);
        const BatchComposition comp = composition_of(bundle.train, train_index, selected);
        row.corrupted_frac = comp.corrupted_frac;
        row.whitenoise_frac = comp.whitenoise_frac;
        double mean = 0.0;
        double mx = -std::numeric_limits<double>::infinity();
        std::unordered_map<std::uint32_t, double> by_id;
        for (std::size_t i = 0; i < scores.ids.size(); ++i) by_id[scores.ids[i]] = scores.scores[i];
        for (std::uint32_t id : selected) {
          mean += by_id[id];
          mx = std::max(mx, by_id[id]);
        }
        row.mean_score = mean / static_cast<double>(selected.size());
        row.max_score = mx;
        out.result.rows.push_back(row);
      }
    }
  }
  out.sequence.header.num_batches = static_cast<std::uint32_t>(out.sequence.batches.size());
  out.result.final_model_fingerprint = out.model.fingerprint();
  return out;
}

ReplayRunOutput replay_sequence(const TrainLoopConfig& cfg, const DatasetBundle& bundle,
                                const Sequence& sequence, const ModelSpec& big_spec,
                                std::uint64_t seed, const IrreducibleLossTable* irr,
                                bool dump_scores) {
  if (sequence.header.dataset_fingerprint != bundle.fingerprint)
    throw std::runtime_error(
        "replay_sequence: dataset fingerprint mismatch; this sequence was recorded against a "
        "different dataset");
  if (dump_scores && irr == nullptr)
    throw std::invalid_argument("replay_sequence: score dumps need an irreducible loss table");
  if (cfg.eval_every < 1) throw std::invalid_argument("replay_sequence: eval_every must be >= 1");

  ReplayRunOutput out;
  out.model = init_params(big_spec, Rng::derive(seed, StreamId::init).next_u64());
  Rng dropout_rng = Rng::derive(seed, StreamId::dropout);

  const auto train_index = id_index(bundle.train);

  // The recorder's without-replacement schedule is a pure function of its
  // seed (stored in the header) and the training ids, so the presented large
  // batches can be reconstructed here for like-for-like scoring.
  std::optional<EpochSchedule> schedule;
  std::optional<Rng> schedule_rng;
  Rng scoring_rng = Rng::derive(seed, StreamId::scoring);
  if (dump_scores) {
    std::vector<std::uint32_t> train_ids;
    train_ids.reserve(bundle.train.size());
    for (const auto& r : bundle.train) train_ids.push_back(r.id);
    schedule.emplace(train_ids, cfg.large_batch_size);
    schedule_rng.emplace(Rng::derive(sequence.header.seed, StreamId::schedule));
  }

  StepContext ctx{&out.model, &cfg, &dropout_rng};
  const std::int64_t total = static_cast<std::int64_t>(sequence.batches.size());
  for (std::int64_t step = 1; step <= total; ++step) {
    std::vector<std::uint32_t> presented;
    if (dump_scores) presented = schedule->next_large_batch(*schedule_rng);

    // Score before the update so the model has consumed exactly the batches
    // the recorder had consumed when it scored this step.
    if (dump_scores && (step % cfg.eval_every == 0 || step == total)) {
      const BatchView large = gather_by_id(bundle.train, train_index, presented);
      ScoreVector scores = score(AcquisitionKind::reducible, out.model, irr, large, scoring_rng);
      scores.step = step;
      for (std::size_t i = 0; i < scores.ids.size(); ++i)
        out.score_dump.push_back({step, scores.ids[i], scores.kind, scores.scores[i]});
    }

    const auto& ids = sequence.batches[static_cast<std::size_t>(step - 1)];
    const BatchView batch = gather_by_id(bundle.train, train_index, ids);
    train_step(ctx, batch);

    if (step % cfg.eval_every == 0 || step == total) {
      if (out.result.rows.empty() || out.result.rows.back().step != step) {
        MetricsRow row;
        row.step = step;
        row.test_accuracy = evaluate(out.model, bundle.test);
        const BatchComposition comp = composition_of(bundle.train, train_index, ids);
        row.corrupted_frac = comp.corrupted_frac;
        row.whitenoise_frac = comp.whitenoise_frac;
        out.result.rows.push_back(row);
      }
    }
  }
  out.result.final_model_fingerprint = out.model.fingerprint();
  return out;
}

double evaluate(const ModelState& model, const std::vector<ExampleRecord>& test_set) {
  if (test_set.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < test_set.size(); start += kChunk) {
    const std::size_t end = std::min(start + kChunk, test_set.size());
    const Index n = static_cast<Index>(end - start);
    Matrix features(n, test_set.front().features.size());
    for (Index i = 0; i < n; ++i)
      features.row(i) = test_set[start + static_cast<std::size_t>(i)].features.transpose();
    const ForwardResult fwd = forward(model, features, RunMode::eval);
    for (Index i = 0; i < n; ++i) {
      Index pred = 0;  // strict > keeps the lowest index on ties
      for (Index c = 1; c < fwd.logits.cols(); ++c)
        if (fwd.logits(i, c) > fwd.logits(i, pred)) pred = c;
      if (static_cast<int>(pred) == test_set[start + static_cast<std::size_t>(i)].label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

}  // namespace goldiprox
