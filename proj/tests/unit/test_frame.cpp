#include <doctest.h>

#include <algorithm>
#include <random>

#include "rctf/crypto.hpp"
#include "rctf/error.hpp"
#include "rctf/frame.hpp"

using namespace rctf;
using namespace rctf::minibus;

namespace {

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

Frame random_frame(std::mt19937_64& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_/";
  Frame f;
  f.topic = "/";
  for (std::size_t n = rng() % 40; n > 0; --n) f.topic += alphabet[rng() % alphabet.size()];
  f.seq = rng();
  f.payload.resize(rng() % 300);
  for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
  if (rng() % 2) {
    Tag t;
    for (auto& b : t) b = static_cast<std::uint8_t>(rng());
    f.tag = t;
  }
  return f;
}

ErrorCode decode_error(const Bytes& b) {
  try {
    decode_frame(b);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode accepted bad input");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("hand-computed frame example") {
  Frame f{"/t", 1, bytes_of("a"), std::nullopt};
  CHECK(crypto::to_hex(encode_frame(f)) == "4d425553010000022f74000000000000000100000001" "61");
}

TEST_CASE("frame round trip over random frames") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    auto f = random_frame(rng);
    CHECK(decode_frame(encode_frame(f)) == f);
  }
}

TEST_CASE("decode errors") {
  CHECK(decode_error(bytes_of("XXXX\x01\x00\x00\x02/t")) == ErrorCode::bad_magic);
  auto good = encode_frame(Frame{"/t", 1, bytes_of("a"), std::nullopt});
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    Bytes partial(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    auto code = decode_error(partial);
    CHECK((code == ErrorCode::truncated || (cut < 4 && code == ErrorCode::bad_magic)));
  }
  auto v2 = good;
  v2[4] = 2;
  CHECK(decode_error(v2) == ErrorCode::version_mismatch);
  auto trailing = good;
  trailing.push_back(0);
  CHECK(decode_error(trailing) == ErrorCode::invalid_argument);
  auto reserved = good;
  reserved[5] = 0x80;
  CHECK(decode_error(reserved) == ErrorCode::invalid_argument);
}

TEST_CASE("seal matches the reference oracle") {
  Key key;
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = static_cast<std::uint8_t>(i);
  auto sec = SecurityConfig::with_key(key);
  auto sealed = seal_frame(sec, 0, Frame{"/t", 1, bytes_of("RCTF{deadbeefcafe1234}"), std::nullopt});
  CHECK(crypto::to_hex(sealed.payload) == "84ca23f8a9ba2a460bb636d8480070d36ea09701c93e");
  REQUIRE(sealed.tag.has_value());
  CHECK(crypto::to_hex(*sealed.tag) == "33d8b55ae872cd28");
  CHECK(crypto::to_hex(encode_frame(sealed)) ==
        "4d425553010100022f7400000000000000010000001684ca23f8a9ba2a460bb636d8480070d36ea09701c93e33d8b55ae872cd28");
}

TEST_CASE("open inverts seal; tampering is detected") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    Key key;
    for (auto& b : key) b = static_cast<std::uint8_t>(rng());
    auto sec = SecurityConfig::with_key(key);
    auto f = random_frame(rng);
    f.tag.reset();
    auto domain = static_cast<std::uint32_t>(rng() % 4);
    auto sealed = seal_frame(sec, domain, f);
    CHECK(open_frame(sec, domain, sealed) == f);
    if (!sealed.payload.empty()) {
      auto tampered = sealed;
      tampered.payload[rng() % tampered.payload.size()] ^= 0x01;
      CHECK_THROWS_WITH_AS(open_frame(sec, domain, tampered), doctest::Contains(""), Error);
      try {
        open_frame(sec, domain, tampered);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::tag_mismatch);
      }
    }
    try {
      open_frame(sec, domain + 1, sealed);
      FAIL("domain confusion accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::tag_mismatch);
    }
  }
}

TEST_CASE("sealed payload never contains the flag bytes") {
  const std::string flag = "RCTF{deadbeefcafe1234}";
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 1000; ++i) {
    Key key;
    for (auto& b : key) b = static_cast<std::uint8_t>(rng());
    auto sealed = seal_frame(SecurityConfig::with_key(key), 0, Frame{"/t", rng(), bytes_of(flag), std::nullopt});
    auto wire = encode_frame(sealed);
    CHECK(std::search(wire.begin(), wire.end(), flag.begin(), flag.end()) == wire.end());
  }
}

TEST_CASE("security config invariant") {
  CHECK_NOTHROW(SecurityConfig::disabled().check());
  SecurityConfig bad{true, std::nullopt};
  CHECK_THROWS_AS(bad.check(), Error);
  CHECK_THROWS_AS(seal_frame(SecurityConfig::disabled(), 0, Frame{"/t", 1, {}, std::nullopt}), Error);
}

TEST_CASE("hex dump layout") {
  auto dump = hex_dump(bytes_of("MBUS"));
  CHECK(dump.rfind("0000: 4d 42 55 53", 0) == 0);
  CHECK(dump.find("|MBUS|") != std::string::npos);
}
