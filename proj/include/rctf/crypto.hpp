#pragma once

// Pinned hash constructions. The Python reference in tests/oracles mirrors
// every function here byte for byte; change both together or not at all.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rctf::crypto {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

inline constexpr std::string_view kFlagLabel = "rctf/flag/v1";
inline constexpr std::string_view kBusKeyLabel = "rctf/bus-key/v1";
inline constexpr std::string_view kKeystreamLabel = "rctf/ks/v1";
inline constexpr std::string_view kTagLabel = "rctf/tag/v1";
inline constexpr std::size_t kTagSize = 8;
inline constexpr std::size_t kKeySize = 32;

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);
Digest sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);  // throws Error(invalid_argument)

// Constant time regardless of where (or whether) the inputs differ.
bool constant_time_equal(std::string_view a, std::string_view b);

std::uint32_t crc32(std::string_view data);

void fill_random(std::span<std::uint8_t> out);

// Big-endian appenders shared by the frame codec and the keyed constructions.
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_str(Bytes& out, std::string_view s);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace rctf::crypto
