#include "goldiprox/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "goldiprox/csv.hpp"
#include "goldiprox/hash.hpp"
#include "goldiprox/svg.hpp"

namespace goldiprox {

using nlohmann::json;

namespace {

constexpr const char* kLibraryVersion = "0.1.0";
constexpr std::uint64_t kIrreduciblePhaseSalt = 0x6972726564ULL;

template <class T>
T get_field(const json& j, const std::string& path, const char* key, const T& fallback,
            bool required) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(path + "." + key + ": missing required field");
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

template <class T>
T req(const json& j, const std::string& path, const char* key) {
  return get_field<T>(j, path, key, T{}, true);
}

template <class T>
T opt(const json& j, const std::string& path, const char* key, const T& fallback) {
  return get_field<T>(j, path, key, fallback, false);
}

OptimizerConfig parse_optimizer(const json& j, const std::string& path) {
  OptimizerConfig cfg;
  cfg.learning_rate = opt(j, path, "learning_rate", cfg.learning_rate);
  cfg.beta1 = opt(j, path, "beta1", cfg.beta1);
  cfg.beta2 = opt(j, path, "beta2", cfg.beta2);
  cfg.epsilon = opt(j, path, "epsilon", cfg.epsilon);
  cfg.weight_decay = opt(j, path, "weight_decay", cfg.weight_decay);
  return cfg;
}

json optimizer_to_json(const OptimizerConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"epsilon", cfg.epsilon},
              {"weight_decay", cfg.weight_decay}};
}

std::vector<Index> parse_hidden_dims(const json& j, const std::string& path, const char* key,
                                     std::vector<Index> fallback) {
  const auto dims = opt<std::vector<std::int64_t>>(j, path, key,
                                                   {fallback.begin(), fallback.end()});
  return {dims.begin(), dims.end()};
}

std::string iso_utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex_u64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json substituted_defaults_json(const ExperimentConfig& cfg) {
  return json{
      {"optimizer_beta1", cfg.loop.optimizer.beta1},
      {"optimizer_beta2", cfg.loop.optimizer.beta2},
      {"optimizer_epsilon", cfg.loop.optimizer.epsilon},
      {"optimizer_weight_decay", cfg.loop.optimizer.weight_decay},
      {"weight_decay_excludes_biases", true},
      {"init_scheme", "uniform +-1/sqrt(fan_in) weights, zero biases"},
      {"precision", "float64"},
      {"lr_schedule", "constant"},
      {"irreducible_patience_epochs", cfg.irreducible.patience},
      {"irreducible_improvement_tolerance", cfg.irreducible.improvement_tolerance},
      {"irreducible_max_epochs", cfg.irreducible.max_epochs},
      {"irreducible_batch_size", cfg.irreducible.batch_size},
      {"bald_mc_samples", cfg.loop.bald_mc_samples},
      {"bald_warmup_steps", cfg.loop.bald_warmup_steps},
      {"selection_tie_break", "descending score, then ascending id"},
      {"scoring_forward_mode", "eval for loss-based kinds, MC dropout for bald"},
      {"label_noise_resampling", "uniform over the other num_classes-1 classes"},
      {"white_noise_injection", "appended records, count = round(fraction*n/(1-fraction))"},
      {"validation_corruption", cfg.dataset.corruption.corrupt_validation},
  };
}

void write_metric_charts(const std::filesystem::path& dir, const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return;
  std::vector<double> xs;
  xs.reserve(rows.size());
  for (const auto& r : rows) xs.push_back(static_cast<double>(r.step));
  const auto chart = [&](const char* file, const char* title, auto getter) {
    std::vector<double> ys;
    ys.reserve(rows.size());
    for (const auto& r : rows) ys.push_back(getter(r));
    write_svg_line_chart(dir / file, title, xs, {{title, ys}});
  };
  chart("chart_test_accuracy.svg", "test_accuracy", [](const MetricsRow& r) { return r.test_accuracy; });
  chart("chart_corrupted_frac.svg", "corrupted_frac", [](const MetricsRow& r) { return r.corrupted_frac; });
  chart("chart_whitenoise_frac.svg", "whitenoise_frac",
        [](const MetricsRow& r) { return r.whitenoise_frac; });
  chart("chart_mean_score.svg", "mean_score", [](const MetricsRow& r) { return r.mean_score; });
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& cfg,
                    const char* command, const json& artifacts, double duration_seconds) {
  const std::string resolved = resolved_config_json(cfg);
  Fnv1a h;
  for (char c : resolved) h.add_byte(static_cast<std::uint8_t>(c));
  json manifest{
      {"library_version", kLibraryVersion},
      {"command", command},
      {"created_utc", iso_utc_now()},
      {"duration_seconds", duration_seconds},
      {"seed", cfg.seed},
      {"config_hash", hex_u64(h.digest())},
      {"substituted_defaults", substituted_defaults_json(cfg)},
      {"artifacts", artifacts},
      {"config", json::parse(resolved)},
  };
  write_text_atomic(path, manifest.dump(2) + "\n");
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto check_spec = [](const ModelSpec& spec, const std::string& path) {
    if (spec.hidden_dims.empty()) throw ConfigError(path + ": hidden_dims must be non-empty");
    for (Index h : spec.hidden_dims)
      if (h < 1) throw ConfigError(path + ": hidden dims must be positive");
    if (spec.dropout_rate < 0.0 || spec.dropout_rate >= 1.0)
      throw ConfigError(path + ": dropout must be in [0,1)");
  };
  check_spec(proxy_spec, "model.proxy_hidden_dims");
  check_spec(big_spec, "model.big_hidden_dims");
  if (irreducible_enabled) check_spec(irreducible.spec, "model.irreducible_hidden_dims");

  if (dataset.source == DatasetSource::synthetic) {
    if (dataset.num_classes < 2) throw ConfigError("dataset.num_classes: must be >= 2");
    if (dataset.input_dim < 1) throw ConfigError("dataset.input_dim: must be positive");
    if (dataset.n_per_class < 1) throw ConfigError("dataset.n_per_class: must be positive");
    if (dataset.spread <= 0.0) throw ConfigError("dataset.spread: must be positive");
    const std::size_t pool =
        static_cast<std::size_t>(dataset.num_classes) * static_cast<std::size_t>(dataset.n_per_class);
    if (pool < dataset.train_size + dataset.validation_size + dataset.test_size)
      throw ConfigError("dataset: synthetic pool smaller than requested splits");
  } else {
    if (dataset.idx_images.empty()) throw ConfigError("dataset.idx_images: missing path");
    if (dataset.idx_labels.empty()) throw ConfigError("dataset.idx_labels: missing path");
  }
  if (dataset.train_size < 1 || dataset.validation_size < 1 || dataset.test_size < 1)
    throw ConfigError("dataset: every split must be non-empty");
  const auto& cc = dataset.corruption;
  if (cc.label_noise_rate < 0.0 || cc.label_noise_rate > 1.0)
    throw ConfigError("dataset.label_noise_rate: must be in [0,1]");
  if (cc.white_noise_fraction < 0.0 || cc.white_noise_fraction >= 1.0)
    throw ConfigError("dataset.white_noise_fraction: must be in [0,1)");

  const bool needs_irr = loop.kind == AcquisitionKind::neg_irreducible ||
                         loop.kind == AcquisitionKind::reducible;
  if (needs_irr && !irreducible_enabled)
    throw ConfigError("loop.acquisition: '" + std::string(to_string(loop.kind)) +
                      "' requires irreducible.enabled = true");
  if (loop.kind == AcquisitionKind::bald && proxy_spec.dropout_rate <= 0.0)
    throw ConfigError("loop.acquisition: bald requires model.proxy_dropout > 0");
  if (loop.kind == AcquisitionKind::bald && loop.bald_mc_samples < 2)
    throw ConfigError("loop.bald_mc_samples: must be >= 2");

  if (loop.large_batch_size <= loop.batch_size)
    throw ConfigError("loop.large_batch_size: must exceed loop.batch_size");

  // Final training-set size after white-noise injection.
  const double n = static_cast<double>(dataset.train_size);
  const double f = cc.white_noise_fraction;
  const std::size_t injected = static_cast<std::size_t>(std::llround(f * n / (1.0 - f)));
  try {
    loop.validate(dataset.train_size + injected);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("loop: ") + e.what());
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.seed = opt<std::uint64_t>(j, "", "seed", 1);
  cfg.output_dir = req<std::string>(j, "", "output_dir");
  cfg.emit_svg = opt(j, "", "emit_svg", false);
  cfg.dump_scores = opt(j, "", "dump_scores", false);

  if (!j.contains("dataset")) throw ConfigError("dataset: missing section");
  const json& d = j.at("dataset");
  const std::string source = opt<std::string>(d, "dataset", "source", "synthetic");
  if (source == "synthetic")
    cfg.dataset.source = DatasetSource::synthetic;
  else if (source == "idx")
    cfg.dataset.source = DatasetSource::idx;
  else
    throw ConfigError("dataset.source: expected 'synthetic' or 'idx', got '" + source + "'");
  cfg.dataset.num_classes = opt(d, "dataset", "num_classes", cfg.dataset.num_classes);
  cfg.dataset.input_dim = opt<std::int64_t>(d, "dataset", "input_dim", cfg.dataset.input_dim);
  cfg.dataset.n_per_class = opt(d, "dataset", "n_per_class", cfg.dataset.n_per_class);
  cfg.dataset.spread = opt(d, "dataset", "spread", cfg.dataset.spread);
  cfg.dataset.seed = opt(d, "dataset", "seed", cfg.dataset.seed);
  cfg.dataset.idx_images = opt<std::string>(d, "dataset", "idx_images", "");
  cfg.dataset.idx_labels = opt<std::string>(d, "dataset", "idx_labels", "");
  cfg.dataset.train_size = opt<std::size_t>(d, "dataset", "train_size", cfg.dataset.train_size);
  cfg.dataset.validation_size =
      opt<std::size_t>(d, "dataset", "validation_size", cfg.dataset.validation_size);
  cfg.dataset.test_size = opt<std::size_t>(d, "dataset", "test_size", cfg.dataset.test_size);
  cfg.dataset.corruption.label_noise_rate = opt(d, "dataset", "label_noise_rate", 0.0);
  cfg.dataset.corruption.white_noise_fraction = opt(d, "dataset", "white_noise_fraction", 0.0);
  cfg.dataset.corruption.seed = opt<std::uint64_t>(d, "dataset", "corruption_seed", 7);
  cfg.dataset.corruption.corrupt_validation = opt(d, "dataset", "corrupt_validation", false);

  const json model_defaults = json::object();
  const json& m = j.contains("model") ? j.at("model") : model_defaults;
  cfg.proxy_spec.hidden_dims = parse_hidden_dims(m, "model", "proxy_hidden_dims", {128, 128});
  cfg.proxy_spec.dropout_rate = opt(m, "model", "proxy_dropout", 0.0);
  cfg.big_spec.hidden_dims = parse_hidden_dims(m, "model", "big_hidden_dims", {128, 128});
  cfg.big_spec.dropout_rate = opt(m, "model", "big_dropout", 0.0);
  cfg.irreducible.spec.hidden_dims =
      parse_hidden_dims(m, "model", "irreducible_hidden_dims", {128, 128});
  cfg.irreducible.spec.dropout_rate = opt(m, "model", "irreducible_dropout", 0.0);

  const json irr_defaults = json::object();
  const json& ir = j.contains("irreducible") ? j.at("irreducible") : irr_defaults;
  cfg.irreducible_enabled = opt(ir, "irreducible", "enabled", false);
  cfg.irreducible.max_epochs = opt(ir, "irreducible", "max_epochs", cfg.irreducible.max_epochs);
  cfg.irreducible.patience = opt(ir, "irreducible", "patience", cfg.irreducible.patience);
  cfg.irreducible.improvement_tolerance =
      opt(ir, "irreducible", "tolerance", cfg.irreducible.improvement_tolerance);
  cfg.irreducible.batch_size =
      opt<std::size_t>(ir, "irreducible", "batch_size", cfg.irreducible.batch_size);
  cfg.irreducible.optimizer = ir.contains("optimizer")
                                  ? parse_optimizer(ir.at("optimizer"), "irreducible.optimizer")
                                  : OptimizerConfig{};

  if (!j.contains("loop")) throw ConfigError("loop: missing section");
  const json& l = j.at("loop");
  cfg.loop.large_batch_size =
      opt<std::size_t>(l, "loop", "large_batch_size", cfg.loop.large_batch_size);
  cfg.loop.batch_size = opt<std::size_t>(l, "loop", "batch_size", cfg.loop.batch_size);
  cfg.loop.total_steps = req<std::int64_t>(l, "loop", "total_steps");
  try {
    cfg.loop.kind = acquisition_from_string(req<std::string>(l, "loop", "acquisition"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("loop.acquisition: ") + e.what());
  }
  cfg.loop.eval_every = opt(l, "loop", "eval_every", cfg.loop.eval_every);
  cfg.loop.bald_mc_samples = opt(l, "loop", "bald_mc_samples", cfg.loop.bald_mc_samples);
  cfg.loop.bald_warmup_steps = opt(l, "loop", "bald_warmup_steps", cfg.loop.bald_warmup_steps);
  cfg.loop.optimizer =
      l.contains("optimizer") ? parse_optimizer(l.at("optimizer"), "loop.optimizer") : OptimizerConfig{};

  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  const auto dims_json = [](const std::vector<Index>& dims) {
    return std::vector<std::int64_t>(dims.begin(), dims.end());
  };
  json j{
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"emit_svg", cfg.emit_svg},
      {"dump_scores", cfg.dump_scores},
      {"dataset",
       {{"source", cfg.dataset.source == DatasetSource::synthetic ? "synthetic" : "idx"},
        {"num_classes", cfg.dataset.num_classes},
        {"input_dim", cfg.dataset.input_dim},
        {"n_per_class", cfg.dataset.n_per_class},
        {"spread", cfg.dataset.spread},
        {"seed", cfg.dataset.seed},
        {"idx_images", cfg.dataset.idx_images},
        {"idx_labels", cfg.dataset.idx_labels},
        {"train_size", cfg.dataset.train_size},
        {"validation_size", cfg.dataset.validation_size},
        {"test_size", cfg.dataset.test_size},
        {"label_noise_rate", cfg.dataset.corruption.label_noise_rate},
        {"white_noise_fraction", cfg.dataset.corruption.white_noise_fraction},
        {"corruption_seed", cfg.dataset.corruption.seed},
        {"corrupt_validation", cfg.dataset.corruption.corrupt_validation}}},
      {"model",
       {{"proxy_hidden_dims", dims_json(cfg.proxy_spec.hidden_dims)},
        {"proxy_dropout", cfg.proxy_spec.dropout_rate},
        {"big_hidden_dims", dims_json(cfg.big_spec.hidden_dims)},
        {"big_dropout", cfg.big_spec.dropout_rate},
        {"irreducible_hidden_dims", dims_json(cfg.irreducible.spec.hidden_dims)},
        {"irreducible_dropout", cfg.irreducible.spec.dropout_rate}}},
      {"irreducible",
       {{"enabled", cfg.irreducible_enabled},
        {"max_epochs", cfg.irreducible.max_epochs},
        {"patience", cfg.irreducible.patience},
        {"tolerance", cfg.irreducible.improvement_tolerance},
        {"batch_size", cfg.irreducible.batch_size},
        {"optimizer", optimizer_to_json(cfg.irreducible.optimizer)}}},
      {"loop",
       {{"large_batch_size", cfg.loop.large_batch_size},
        {"batch_size", cfg.loop.batch_size},
        {"total_steps", cfg.loop.total_steps},
        {"acquisition", to_string(cfg.loop.kind)},
        {"eval_every", cfg.loop.eval_every},
        {"bald_mc_samples", cfg.loop.bald_mc_samples},
        {"bald_warmup_steps", cfg.loop.bald_warmup_steps},
        {"optimizer", optimizer_to_json(cfg.loop.optimizer)}}},
  };
  return j.dump(2);
}

DatasetBundle build_bundle(const DatasetConfig& cfg) {
  std::vector<ExampleRecord> pool;
  int num_classes = cfg.num_classes;
  if (cfg.source == DatasetSource::synthetic) {
    pool = synth_clusters(cfg.num_classes, cfg.input_dim, cfg.n_per_class, cfg.spread, cfg.seed);
  } else {
    pool = load_idx(cfg.idx_images, cfg.idx_labels);
    int max_label = 0;
    for (const auto& r : pool) max_label = std::max(max_label, r.true_label);
    num_classes = max_label + 1;
  }
  const std::size_t need = cfg.train_size + cfg.validation_size + cfg.test_size;
  if (pool.size() < need)
    throw ConfigError("dataset: pool of " + std::to_string(pool.size()) +
                      " records cannot fill splits totalling " + std::to_string(need));

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = Rng::derive(cfg.seed, StreamId::split);
  split_rng.shuffle(order.begin(), order.end());

  DatasetBundle bundle;
  bundle.num_classes = num_classes;
  bundle.input_dim = pool.front().features.size();
  std::size_t at = 0;
  for (std::size_t i = 0; i < cfg.train_size; ++i) bundle.train.push_back(pool[order[at++]]);
  for (std::size_t i = 0; i < cfg.validation_size; ++i)
    bundle.validation.push_back(pool[order[at++]]);
  for (std::size_t i = 0; i < cfg.test_size; ++i) bundle.test.push_back(pool[order[at++]]);

  apply_label_noise(bundle.train, cfg.corruption.label_noise_rate, num_classes,
                    cfg.corruption.seed);
  if (cfg.corruption.corrupt_validation)
    apply_label_noise(bundle.validation, cfg.corruption.label_noise_rate, num_classes,
                      splitmix64(cfg.corruption.seed ^ 0x76616cULL));
  inject_white_noise_points(bundle.train, cfg.corruption.white_noise_fraction, num_classes,
                            splitmix64(cfg.corruption.seed ^ 0x776e6fULL));
  refresh_fingerprint(bundle);
  return bundle;
}

namespace {

void fill_model_dims(ExperimentConfig& cfg, const DatasetBundle& bundle) {
  for (ModelSpec* spec : {&cfg.proxy_spec, &cfg.big_spec, &cfg.irreducible.spec}) {
    spec->input_dim = bundle.input_dim;
    spec->num_classes = bundle.num_classes;
  }
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& original) {
  ExperimentConfig cfg = original;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  DatasetBundle bundle = build_bundle(cfg.dataset);
  fill_model_dims(cfg, bundle);

  const bool needs_irr = cfg.loop.kind == AcquisitionKind::neg_irreducible ||
                         cfg.loop.kind == AcquisitionKind::reducible;
  IrreducibleLossTable table;
  if (needs_irr) {
    auto [model, t] = train_irreducible_model(cfg.irreducible, bundle.validation, bundle.train,
                                              splitmix64(cfg.seed ^ kIrreduciblePhaseSalt));
    table = std::move(t);
  }

  SelectionRunOutput run = run_selection_loop(cfg.loop, cfg.proxy_spec, bundle,
                                              needs_irr ? &table : nullptr, cfg.seed,
                                              cfg.dump_scores);

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  RunArtifacts artifacts;
  artifacts.result = std::move(run.result);
  artifacts.sequence_file = dir / "sequence.gpsq";
  write_sequence(artifacts.sequence_file, run.sequence);
  artifacts.metrics_csv = dir / "metrics.csv";
  write_text_atomic(artifacts.metrics_csv, metrics_to_csv(artifacts.result.rows));
  if (cfg.dump_scores) {
    artifacts.scores_csv = dir / "scores.csv";
    write_text_atomic(artifacts.scores_csv, score_dump_to_csv(run.score_dump));
  }
  if (cfg.emit_svg) write_metric_charts(dir, artifacts.result.rows);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  artifacts.manifest = dir / "manifest.json";
  json listing{{"metrics_csv", "metrics.csv"}, {"sequence_file", "sequence.gpsq"}};
  if (cfg.dump_scores) listing["scores_csv"] = "scores.csv";
  write_manifest(artifacts.manifest, cfg, "run", listing, seconds);
  return artifacts;
}

RunArtifacts replay_experiment(const ExperimentConfig& original,
                               const std::filesystem::path& sequence_path) {
  ExperimentConfig cfg = original;
  cfg.validate();
  if (cfg.dump_scores && !cfg.irreducible_enabled)
    throw ConfigError("dump_scores: replay score dumps require irreducible.enabled = true");
  const auto t0 = std::chrono::steady_clock::now();

  const Sequence sequence = read_sequence(sequence_path);
  DatasetBundle bundle = build_bundle(cfg.dataset);
  fill_model_dims(cfg, bundle);
  if (sequence.header.dataset_fingerprint != bundle.fingerprint)
    throw std::runtime_error(
        "replay: sequence was recorded against dataset fingerprint " +
        hex_u64(sequence.header.dataset_fingerprint) + " but this config builds " +
        hex_u64(bundle.fingerprint) + "; refusing to replay on the wrong dataset");

  IrreducibleLossTable table;
  if (cfg.dump_scores) {
    auto [model, t] = train_irreducible_model(cfg.irreducible, bundle.validation, bundle.train,
                                              splitmix64(cfg.seed ^ kIrreduciblePhaseSalt));
    table = std::move(t);
  }

  ReplayRunOutput run = replay_sequence(cfg.loop, bundle, sequence, cfg.big_spec, cfg.seed,
                                        cfg.dump_scores ? &table : nullptr, cfg.dump_scores);

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  RunArtifacts artifacts;
  artifacts.result = std::move(run.result);
  artifacts.metrics_csv = dir / "metrics.csv";
  write_text_atomic(artifacts.metrics_csv, metrics_to_csv(artifacts.result.rows));
  if (cfg.dump_scores) {
    artifacts.scores_csv = dir / "scores.csv";
    write_text_atomic(artifacts.scores_csv, score_dump_to_csv(run.score_dump));
  }
  if (cfg.emit_svg) write_metric_charts(dir, artifacts.result.rows);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  artifacts.manifest = dir / "manifest.json";
  json listing{{"metrics_csv", "metrics.csv"}, {"replayed_sequence", sequence_path.string()}};
  if (cfg.dump_scores) listing["scores_csv"] = "scores.csv";
  write_manifest(artifacts.manifest, cfg, "replay", listing, seconds);
  return artifacts;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least 2 points");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;  // all-tied input has no measurable association
  return cov / std::sqrt(va * vb);
}

std::vector<SpearmanRow> spearman_by_step(const std::vector<ScoreDumpRow>& a,
                                          const std::vector<ScoreDumpRow>& b) {
  std::map<std::int64_t, std::map<std::uint32_t, double>> by_step_a, by_step_b;
  for (const auto& r : a) by_step_a[r.step][r.id] = r.score;
  for (const auto& r : b) by_step_b[r.step][r.id] = r.score;

  std::vector<SpearmanRow> rows;
  for (const auto& [step, ids_a] : by_step_a) {
    const auto it = by_step_b.find(step);
    if (it == by_step_b.end()) continue;
    std::vector<double> xs, ys;
    for (const auto& [id, score_a] : ids_a) {
      const auto jt = it->second.find(id);
      if (jt == it->second.end()) continue;
      xs.push_back(score_a);
      ys.push_back(jt->second);
    }
    if (xs.size() < 2)
      throw std::runtime_error("spearman: step " + std::to_string(step) +
                               " has fewer than 2 shared (step,id) points");
    rows.push_back({step, spearman_rho(xs, ys)});
  }
  if (rows.empty()) throw std::runtime_error("spearman: the dumps share no steps");
  return rows;
}

std::string spearman_to_csv(const std::vector<SpearmanRow>& rows) {
  std::string out = "step,rho\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step);
    out += ',';
    out += format_double(r.rho);
    out += '\n';
  }
  return out;
}

std::vector<CompositionRow> selection_composition(const Sequence& sequence,
                                                  const DatasetBundle& bundle) {
  const auto index = id_index(bundle.train);
  std::vector<CompositionRow> rows;
  rows.reserve(sequence.batches.size());
  constexpr std::size_t kWindow = 100;
  for (std::size_t t = 0; t < sequence.batches.size(); ++t) {
    const auto& batch = sequence.batches[t];
    CompositionRow row;
    row.step = static_cast<std::int64_t>(t) + 1;
    for (std::uint32_t id : batch) {
      const auto it = index.find(id);
      if (it == index.end())
        throw std::runtime_error("composition: id " + std::to_string(id) + " not in bundle");
      const ExampleRecord& r = bundle.train[it->second];
      if (r.corrupted) row.corrupted_frac += 1.0;
      if (r.white_noise) row.whitenoise_frac += 1.0;
    }
    if (!batch.empty()) {
      row.corrupted_frac /= static_cast<double>(batch.size());
      row.whitenoise_frac /= static_cast<double>(batch.size());
    }
    const std::size_t lo = t + 1 >= kWindow ? t + 1 - kWindow : 0;
    double csum = row.corrupted_frac, wsum = row.whitenoise_frac;
    for (std::size_t s = lo; s < t; ++s) {
      csum += rows[s].corrupted_frac;
      wsum += rows[s].whitenoise_frac;
    }
    const double span = static_cast<double>(t - lo + 1);
    row.corrupted_frac_w100 = csum / span;
    row.whitenoise_frac_w100 = wsum / span;
    rows.push_back(row);
  }
  return rows;
}

std::string composition_to_csv(const std::vector<CompositionRow>& rows) {
  std::string out = "step,corrupted_frac,whitenoise_frac,corrupted_frac_w100,whitenoise_frac_w100\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step);
    out += ',';
    out += format_double(r.corrupted_frac);
    out += ',';
    out += format_double(r.whitenoise_frac);
    out += ',';
    out += format_double(r.corrupted_frac_w100);
    out += ',';
    out += format_double(r.whitenoise_frac_w100);
    out += '\n';
  }
  return out;
}

}  // namespace goldiprox
