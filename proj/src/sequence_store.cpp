#include "goldiprox/sequence_store.hpp"

#include <cstdio>
#include <fstream>

namespace goldiprox {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

constexpr char kMagic[4] = {'G', 'P', 'S', 'Q'};

}  // namespace

std::vector<std::uint8_t> encode_sequence(const Sequence& sequence) {
  const std::uint32_t b = sequence.header.batch_size;
  for (const auto& batch : sequence.batches)
    if (batch.size() != b)
      throw SequenceError(SequenceErrorKind::ragged_batch,
                          "sequence write: batch size differs from header batch_size");
  std::vector<std::uint8_t> out;
  out.reserve(kSequenceHeaderBytes + 4ull * b * sequence.batches.size());
  for (char c : kMagic) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, sequence.header.version);
  put_u64(out, sequence.header.dataset_fingerprint);
  put_u32(out, b);
  put_u32(out, static_cast<std::uint32_t>(sequence.batches.size()));
  out.push_back(static_cast<std::uint8_t>(sequence.header.kind));
  put_u64(out, sequence.header.seed);
  for (const auto& batch : sequence.batches)
    for (std::uint32_t id : batch) put_u32(out, id);
  return out;
}

Sequence decode_sequence(const std::vector<std::uint8_t>& bytes) {
  const std::size_t prefix = std::min<std::size_t>(bytes.size(), 4);
  for (std::size_t i = 0; i < prefix; ++i)
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i]))
      throw SequenceError(SequenceErrorKind::bad_magic, "sequence read: bad magic");
  if (bytes.size() < kSequenceHeaderBytes)
    throw SequenceError(SequenceErrorKind::length_mismatch, "sequence read: truncated header");

  Sequence seq;
  seq.header.version = get_u32(bytes, 4);
  if (seq.header.version != kSequenceFormatVersion)
    throw SequenceError(SequenceErrorKind::unknown_version,
                        "sequence read: unknown format version " + std::to_string(seq.header.version));
  seq.header.dataset_fingerprint = get_u64(bytes, 8);
  seq.header.batch_size = get_u32(bytes, 16);
  seq.header.num_batches = get_u32(bytes, 20);
  const std::uint8_t kind_tag = bytes[24];
  if (kind_tag > static_cast<std::uint8_t>(AcquisitionKind::bald))
    throw SequenceError(SequenceErrorKind::unknown_kind,
                        "sequence read: unknown acquisition tag " + std::to_string(kind_tag));
  seq.header.kind = static_cast<AcquisitionKind>(kind_tag);
  seq.header.seed = get_u64(bytes, 25);

  const std::uint64_t expected_ids =
      std::uint64_t(seq.header.batch_size) * std::uint64_t(seq.header.num_batches);
  const std::uint64_t expected_bytes = kSequenceHeaderBytes + 4ull * expected_ids;
  if (bytes.size() != expected_bytes)
    throw SequenceError(SequenceErrorKind::length_mismatch,
                        "sequence read: payload length does not match header counts");

  seq.batches.assign(seq.header.num_batches, std::vector<std::uint32_t>(seq.header.batch_size));
  std::size_t at = kSequenceHeaderBytes;
  for (auto& batch : seq.batches)
    for (auto& id : batch) {
      id = get_u32(bytes, at);
      at += 4;
    }
  return seq;
}

void write_sequence(const std::filesystem::path& path, const Sequence& sequence) {
  const std::vector<std::uint8_t> bytes = encode_sequence(sequence);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SequenceError(SequenceErrorKind::io, "sequence write: cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw SequenceError(SequenceErrorKind::io, "sequence write: short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw SequenceError(SequenceErrorKind::io, "sequence write: rename failed: " + ec.message());
}

Sequence read_sequence(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SequenceError(SequenceErrorKind::io, "sequence read: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw SequenceError(SequenceErrorKind::io, "sequence read: i/o failure on " + path.string());
  return decode_sequence(bytes);
}

}  // namespace goldiprox
