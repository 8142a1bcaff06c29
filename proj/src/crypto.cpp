#include "rctf/crypto.hpp"

#include <sodium.h>
#include <zlib.h>

#include <stdexcept>

#include "rctf/error.hpp"

namespace rctf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax: return "syntax";
    case ErrorCode::unknown_kind: return "unknown_kind";
    case ErrorCode::unknown_profile: return "unknown_profile";
    case ErrorCode::invalid_manifest: return "invalid_manifest";
    case ErrorCode::empty_catalog: return "empty_catalog";
    case ErrorCode::catalog_ids: return "catalog_ids";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::invalid_name: return "invalid_name";
    case ErrorCode::duplicate_name: return "duplicate_name";
    case ErrorCode::invalid_topic: return "invalid_topic";
    case ErrorCode::stale_handle: return "stale_handle";
    case ErrorCode::permission_denied: return "permission_denied";
    case ErrorCode::profile_forbidden: return "profile_forbidden";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::tag_mismatch: return "tag_mismatch";
    case ErrorCode::security_disabled: return "security_disabled";
    case ErrorCode::install_failure: return "install_failure";
    case ErrorCode::resource_limit: return "resource_limit";
    case ErrorCode::torn_down: return "torn_down";
    case ErrorCode::stale_endpoint: return "stale_endpoint";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::read_only: return "read_only";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::vm_invalid_opcode: return "vm_invalid_opcode";
    case ErrorCode::vm_stack_underflow: return "vm_stack_underflow";
    case ErrorCode::vm_bad_jump: return "vm_bad_jump";
    case ErrorCode::vm_budget_exceeded: return "vm_budget_exceeded";
    case ErrorCode::unknown_scenario: return "unknown_scenario";
    case ErrorCode::duplicate_handle: return "duplicate_handle";
    case ErrorCode::invalid_handle: return "invalid_handle";
    case ErrorCode::wrong_password: return "wrong_password";
    case ErrorCode::out_of_order: return "out_of_order";
    case ErrorCode::log_corrupt: return "log_corrupt";
    case ErrorCode::io: return "io";
    case ErrorCode::auth: return "auth";
    case ErrorCode::rate_limited: return "rate_limited";
    case ErrorCode::locked: return "locked";
    case ErrorCode::unknown_op: return "unknown_op";
    case ErrorCode::bad_request: return "bad_request";
  }
  return "unknown";
}

namespace crypto {
namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_sodium() { static const SodiumInit init; }

}  // namespace

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) {
  ensure_sodium();
  crypto_auth_hmacsha256_state state;
  crypto_auth_hmacsha256_init(&state, key.data(), key.size());
  crypto_auth_hmacsha256_update(&state, message.data(), message.size());
  Digest out{};
  crypto_auth_hmacsha256_final(&state, out.data());
  return out;
}

Digest sha256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(ErrorCode::invalid_argument, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::invalid_argument, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
  // Compare fixed-size digests so neither length nor the first differing
  // position influences timing.
  static const std::array<std::uint8_t, 16> key = [] {
    std::array<std::uint8_t, 16> k{};
    fill_random(k);
    return k;
  }();
  auto da = hmac_sha256(key, as_bytes(a));
  auto db = hmac_sha256(key, as_bytes(b));
  return sodium_memcmp(da.data(), db.data(), da.size()) == 0;
}

std::uint32_t crc32(std::string_view data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

void fill_random(std::span<std::uint8_t> out) {
  ensure_sodium();
  randombytes_buf(out.data(), out.size());
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_str(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

}  // namespace crypto
}  // namespace rctf
