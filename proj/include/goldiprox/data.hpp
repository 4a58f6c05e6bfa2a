#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "goldiprox/model.hpp"
#include "goldiprox/rng.hpp"

namespace goldiprox {

// One training point. `label` is the observed (possibly corrupted) label;
// `true_label` never changes after creation.
struct ExampleRecord {
  std::uint32_t id = 0;
  Vector features;  // each component in [0,1]
  int label = 0;
  int true_label = 0;
  bool corrupted = false;    // observed != true due to noise injection
  bool white_noise = false;  // input replaced by uniform noise
};

struct DatasetBundle {
  std::vector<ExampleRecord> train;
  std::vector<ExampleRecord> validation;
  std::vector<ExampleRecord> test;
  int num_classes = 0;
  Index input_dim = 0;
  std::uint64_t fingerprint = 0;
};

struct CorruptionConfig {
  double label_noise_rate = 0.0;
  double white_noise_fraction = 0.0;
  std::uint64_t seed = 0;
  bool corrupt_validation = false;  // validation is assumed clean by default
};

// FNV-1a over (id, features as f64, label, true_label) of every record,
// sorted by id. Record order and split boundaries do not affect the hash.
std::uint64_t dataset_fingerprint(const DatasetBundle& bundle);
void refresh_fingerprint(DatasetBundle& bundle);

std::unordered_map<std::uint32_t, std::size_t> id_index(const std::vector<ExampleRecord>& records);

// IDX ingestion (big-endian magic 0x00000803 images / 0x00000801 labels).
// Pixels scale to [0,1] by /255, flattened row-major; ids assigned
// sequentially from id_base.
std::vector<ExampleRecord> load_idx(const std::string& images_path, const std::string& labels_path,
                                    std::uint32_t id_base = 0);

// Deterministic Gaussian blobs: class c is drawn around a fixed per-class
// center (independent of `seed`) with isotropic spread, clamped to [0,1].
std::vector<ExampleRecord> synth_clusters(int num_classes, Index input_dim, int n_per_class,
                                          double spread, std::uint64_t seed);

// Each record is independently selected with probability `rate`; selected
// records get a uniform label among the other num_classes-1 classes, so the
// realized corrupted fraction matches `rate` in expectation.
void apply_label_noise(std::vector<ExampleRecord>& records, double rate, int num_classes,
                       std::uint64_t seed);

// Appends white-noise records so they make up `fraction` of the final set:
// count = round(fraction * n / (1 - fraction)). New records get i.i.d.
// uniform [0,1] features, a uniform random label, and fresh unique ids.
void inject_white_noise_points(std::vector<ExampleRecord>& records, double fraction,
                               int num_classes, std::uint64_t seed);

// Without-replacement large-batch scheduling: a fresh permutation of the ids
// at the start of each epoch, handed out in chunks of large_batch_size (the
// final chunk of an epoch may be smaller).
class EpochSchedule {
 public:
  EpochSchedule(std::vector<std::uint32_t> ids, std::size_t large_batch_size);

  std::vector<std::uint32_t> next_large_batch(Rng& rng);

  std::size_t epochs_started() const { return epochs_started_; }
  std::size_t size() const { return ids_.size(); }

 private:
  std::vector<std::uint32_t> ids_;
  std::size_t large_batch_size_;
  std::size_t pos_ = 0;
  std::size_t epochs_started_ = 0;
};

// Dense views over a list of records, used by scoring and training steps.
struct BatchView {
  std::vector<std::uint32_t> ids;
  Matrix features;  // [n x input_dim]
  LabelVector labels;
};

BatchView gather_by_id(const std::vector<ExampleRecord>& records,
                       const std::unordered_map<std::uint32_t, std::size_t>& index,
                       const std::vector<std::uint32_t>& ids);
BatchView gather_all(const std::vector<ExampleRecord>& records);

}  // namespace goldiprox
