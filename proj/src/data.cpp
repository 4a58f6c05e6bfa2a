#include "goldiprox/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "goldiprox/hash.hpp"

namespace goldiprox {

std::uint64_t dataset_fingerprint(const DatasetBundle& bundle) {
  std::vector<const ExampleRecord*> all;
  all.reserve(bundle.train.size() + bundle.validation.size() + bundle.test.size());
  for (const auto* split : {&bundle.train, &bundle.validation, &bundle.test})
    for (const auto& r : *split) all.push_back(&r);
  std::sort(all.begin(), all.end(),
            [](const ExampleRecord* a, const ExampleRecord* b) { return a->id < b->id; });
  Fnv1a h;
  for (const ExampleRecord* r : all) {
    h.add_u32(r->id);
    for (Index i = 0; i < r->features.size(); ++i) h.add_f64(r->features(i));
    h.add_i32(r->label);
    h.add_i32(r->true_label);
  }
  return h.digest();
}

void refresh_fingerprint(DatasetBundle& bundle) { bundle.fingerprint = dataset_fingerprint(bundle); }

std::unordered_map<std::uint32_t, std::size_t> id_index(const std::vector<ExampleRecord>& records) {
  std::unordered_map<std::uint32_t, std::size_t> index;
  index.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].id, i);
  return index;
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw std::runtime_error("load_idx: truncated " + what);
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

std::vector<ExampleRecord> load_idx(const std::string& images_path, const std::string& labels_path,
                                    std::uint32_t id_base) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);

  const std::uint32_t img_magic = read_be_u32(img, "image header");
  if (img_magic != 0x00000803u)
    throw std::runtime_error("load_idx: bad image magic in " + images_path);
  const std::uint32_t n_images = read_be_u32(img, "image header");
  const std::uint32_t rows = read_be_u32(img, "image header");
  const std::uint32_t cols = read_be_u32(img, "image header");

  const std::uint32_t lab_magic = read_be_u32(lab, "label header");
  if (lab_magic != 0x00000801u)
    throw std::runtime_error("load_idx: bad label magic in " + labels_path);
  const std::uint32_t n_labels = read_be_u32(lab, "label header");
  if (n_images != n_labels)
    throw std::runtime_error("load_idx: image/label count mismatch");

  const std::size_t dim = std::size_t(rows) * cols;
  std::vector<unsigned char> pixels(dim);
  std::vector<ExampleRecord> records;
  records.reserve(n_images);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(dim));
    if (!img) throw std::runtime_error("load_idx: truncated image payload");
    char label_byte = 0;
    lab.read(&label_byte, 1);
    if (!lab) throw std::runtime_error("load_idx: truncated label payload");
    ExampleRecord r;
    r.id = id_base + i;
    r.features.resize(static_cast<Index>(dim));
    for (std::size_t p = 0; p < dim; ++p) r.features(static_cast<Index>(p)) = pixels[p] / 255.0;
    r.label = static_cast<unsigned char>(label_byte);
    r.true_label = r.label;
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ExampleRecord> synth_clusters(int num_classes, Index input_dim, int n_per_class,
                                          double spread, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("synth_clusters: num_classes must be >= 2");
  if (spread <= 0.0) throw std::invalid_argument("synth_clusters: spread must be positive");

  // Centers depend only on (class, input_dim), never on the sampling seed.
  std::vector<Vector> centers(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    Rng center_rng(splitmix64(0x9d2c5680cafef00dULL ^ static_cast<std::uint64_t>(c)));
    centers[c].resize(input_dim);
    for (Index j = 0; j < input_dim; ++j) centers[c](j) = center_rng.uniform(0.2, 0.8);
  }

  Rng rng = Rng::derive(seed, StreamId::synth);
  std::vector<ExampleRecord> records;
  records.reserve(static_cast<std::size_t>(num_classes) * n_per_class);
  std::uint32_t next_id = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int k = 0; k < n_per_class; ++k) {
      ExampleRecord r;
      r.id = next_id++;
      r.features.resize(input_dim);
      for (Index j = 0; j < input_dim; ++j)
        r.features(j) = std::clamp(centers[c](j) + spread * rng.normal(), 0.0, 1.0);
      r.label = c;
      r.true_label = c;
      records.push_back(std::move(r));
    }
  }
  return records;
}

void apply_label_noise(std::vector<ExampleRecord>& records, double rate, int num_classes,
                       std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("apply_label_noise: num_classes must be >= 2");
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("apply_label_noise: rate must be in [0,1]");
  Rng rng = Rng::derive(seed, StreamId::corruption);
  for (auto& r : records) {
    if (!rng.bernoulli(rate)) continue;
    const int offset = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 1)));
    r.label = (r.true_label + offset) % num_classes;
    r.corrupted = true;
  }
}

void inject_white_noise_points(std::vector<ExampleRecord>& records, double fraction,
                               int num_classes, std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw std::invalid_argument("inject_white_noise_points: fraction must be in [0,1)");
  if (records.empty() || fraction == 0.0) return;
  const Index dim = records.front().features.size();
  const double n = static_cast<double>(records.size());
  const auto count = static_cast<std::size_t>(std::llround(fraction * n / (1.0 - fraction)));
  std::uint32_t next_id = 0;
  for (const auto& r : records) next_id = std::max(next_id, r.id);
  ++next_id;
  Rng rng = Rng::derive(seed, StreamId::corruption);
  for (std::size_t k = 0; k < count; ++k) {
    ExampleRecord r;
    r.id = next_id++;
    r.features.resize(dim);
    for (Index j = 0; j < dim; ++j) r.features(j) = rng.uniform();
    r.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)));
    r.true_label = r.label;
    r.white_noise = true;
    records.push_back(std::move(r));
  }
}

EpochSchedule::EpochSchedule(std::vector<std::uint32_t> ids, std::size_t large_batch_size)
    : ids_(std::move(ids)), large_batch_size_(large_batch_size) {
  if (ids_.empty()) throw std::invalid_argument("EpochSchedule: empty id set");
  if (large_batch_size_ == 0) throw std::invalid_argument("EpochSchedule: large batch size must be >= 1");
}

std::vector<std::uint32_t> EpochSchedule::next_large_batch(Rng& rng) {
  if (pos_ == 0) {
    rng.shuffle(ids_.begin(), ids_.end());
    ++epochs_started_;
  }
  const std::size_t end = std::min(pos_ + large_batch_size_, ids_.size());
  std::vector<std::uint32_t> chunk(ids_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                   ids_.begin() + static_cast<std::ptrdiff_t>(end));
  pos_ = end == ids_.size() ? 0 : end;
  return chunk;
}

BatchView gather_by_id(const std::vector<ExampleRecord>& records,
                       const std::unordered_map<std::uint32_t, std::size_t>& index,
                       const std::vector<std::uint32_t>& ids) {
  BatchView batch;
  batch.ids = ids;
  if (ids.empty()) return batch;
  const Index dim = records.front().features.size();
  batch.features.resize(static_cast<Index>(ids.size()), dim);
  batch.labels.resize(static_cast<Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = index.find(ids[i]);
    if (it == index.end())
      throw std::runtime_error("gather_by_id: id " + std::to_string(ids[i]) + " not in dataset");
    const ExampleRecord& r = records[it->second];
    batch.features.row(static_cast<Index>(i)) = r.features.transpose();
    batch.labels(static_cast<Index>(i)) = r.label;
  }
  return batch;
}

BatchView gather_all(const std::vector<ExampleRecord>& records) {
  BatchView batch;
  batch.ids.reserve(records.size());
  if (records.empty()) return batch;
  const Index dim = records.front().features.size();
  batch.features.resize(static_cast<Index>(records.size()), dim);
  batch.labels.resize(static_cast<Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    batch.ids.push_back(records[i].id);
    batch.features.row(static_cast<Index>(i)) = records[i].features.transpose();
    batch.labels(static_cast<Index>(i)) = records[i].label;
  }
  return batch;
}

}  // namespace goldiprox
