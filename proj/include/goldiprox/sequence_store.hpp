#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "goldiprox/acquisition.hpp"

namespace goldiprox {

// Durable, portable batch-index sequence. Byte layout (all little-endian):
//   magic "GPSQ" | version u32 | dataset_fingerprint u64 | batch_size u32 |
//   num_batches u32 | kind u8 | seed u64 | ids as u32 stream
// Header is exactly 33 bytes; body is num_batches * batch_size * 4 bytes.
inline constexpr std::uint32_t kSequenceFormatVersion = 1;
inline constexpr std::size_t kSequenceHeaderBytes = 33;

enum class SequenceErrorKind {
  io,
  bad_magic,
  unknown_version,
  unknown_kind,
  length_mismatch,
  ragged_batch,
};

class SequenceError : public std::runtime_error {
 public:
  SequenceError(SequenceErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  SequenceErrorKind kind() const { return kind_; }

 private:
  SequenceErrorKind kind_;
};

struct SequenceHeader {
  std::uint32_t version = kSequenceFormatVersion;
  std::uint64_t dataset_fingerprint = 0;
  std::uint32_t batch_size = 0;
  std::uint32_t num_batches = 0;
  AcquisitionKind kind = AcquisitionKind::uniform;
  std::uint64_t seed = 0;
};

struct Sequence {
  SequenceHeader header;
  std::vector<std::vector<std::uint32_t>> batches;
};

// Atomic (temp file + rename). num_batches is taken from batches.size();
// every batch must have exactly header.batch_size ids.
void write_sequence(const std::filesystem::path& path, const Sequence& sequence);

// Exact inverse of write_sequence. Validates magic, version, kind tag and
// that the payload length matches the header counts; fails closed.
Sequence read_sequence(const std::filesystem::path& path);

// In-memory codec, exposed for round-trip and fuzz tests.
std::vector<std::uint8_t> encode_sequence(const Sequence& sequence);
Sequence decode_sequence(const std::vector<std::uint8_t>& bytes);

}  // namespace goldiprox
