#pragma once

// Wire unit of the emulated middleware. Layout (big-endian):
//   "MBUS" | u8 version=1 | u8 flags (bit0 sealed) | u16 topic_len | topic
//   | u64 seq | u32 payload_len | payload | tag[8] if sealed

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "rctf/crypto.hpp"

namespace rctf::minibus {

using Bytes = crypto::Bytes;
using Tag = std::array<std::uint8_t, crypto::kTagSize>;
using Key = std::array<std::uint8_t, crypto::kKeySize>;

inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::uint8_t kFlagSealed = 0x01;

struct Frame {
  std::string topic;
  std::uint64_t seq = 0;
  Bytes payload;
  std::optional<Tag> tag;  // present iff sealed

  bool sealed() const { return tag.has_value(); }
  bool operator==(const Frame&) const = default;
};

Bytes encode_frame(const Frame& frame);
Frame decode_frame(std::span<const std::uint8_t> bytes);

struct SecurityConfig {
  bool enabled = false;
  std::optional<Key> key;

  static SecurityConfig disabled() { return {}; }
  static SecurityConfig with_key(const Key& key) { return {true, key}; }
  void check() const;  // throws Error(configuration) unless key present iff enabled
};

// Pedagogical envelope: keyed-hash keystream XOR plus a truncated keyed-hash
// tag. Not production cryptography.
Frame seal_frame(const SecurityConfig& security, std::uint32_t domain_id, const Frame& plain);
Frame open_frame(const SecurityConfig& security, std::uint32_t domain_id, const Frame& sealed);

// 32-byte bus key derived from an image seed.
Key derive_bus_key(std::uint64_t seed);

// `offset: hex bytes  |ascii|` lines, 16 bytes per line.
std::string hex_dump(std::span<const std::uint8_t> bytes);

}  // namespace rctf::minibus
