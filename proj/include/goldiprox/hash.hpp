#pragma once

#include <cstdint>
#include <cstring>

namespace goldiprox {

// Incremental 64-bit FNV-1a over a canonical little-endian byte stream.
class Fnv1a {
 public:
  void add_byte(std::uint8_t b) {
    hash_ ^= b;
    hash_ *= 1099511628211ULL;
  }

  void add_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void add_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void add_i32(std::int32_t v) { add_u32(static_cast<std::uint32_t>(v)); }

  void add_f64(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    add_u64(bits);
  }

  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 14695981039346656037ULL;
};

}  // namespace goldiprox
