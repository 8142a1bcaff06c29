#include "rctf/frame.hpp"

#include <cstdio>

#include "rctf/error.hpp"

namespace rctf::minibus {
namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw Error(ErrorCode::truncated, std::string("frame truncated while reading ") + what + " at offset " +
                                            std::to_string(pos_));
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint64_t uint(std::size_t width, const char* what) {
    std::uint64_t v = 0;
    for (auto b : take(width, what)) v = v << 8 | b;
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

Bytes keyed_header(std::uint32_t domain_id, const std::string& topic, std::uint64_t seq) {
  Bytes h;
  crypto::put_u32(h, domain_id);
  crypto::put_u16(h, static_cast<std::uint16_t>(topic.size()));
  crypto::put_str(h, topic);
  crypto::put_u64(h, seq);
  return h;
}

Bytes apply_keystream(const Key& key, const Bytes& header, const Bytes& data) {
  Bytes out(data.size());
  std::uint32_t block = 0;
  for (std::size_t off = 0; off < data.size(); off += 32, ++block) {
    Bytes msg;
    crypto::put_str(msg, crypto::kKeystreamLabel);
    msg.insert(msg.end(), header.begin(), header.end());
    crypto::put_u32(msg, block);
    auto ks = crypto::hmac_sha256(key, msg);
    for (std::size_t i = off; i < data.size() && i < off + 32; ++i) out[i] = data[i] ^ ks[i - off];
  }
  return out;
}

Tag compute_tag(const Key& key, const Bytes& header, const Bytes& cipher) {
  Bytes msg;
  crypto::put_str(msg, crypto::kTagLabel);
  msg.insert(msg.end(), header.begin(), header.end());
  msg.insert(msg.end(), cipher.begin(), cipher.end());
  auto digest = crypto::hmac_sha256(key, msg);
  Tag tag{};
  std::copy_n(digest.begin(), tag.size(), tag.begin());
  return tag;
}

const Key& require_key(const SecurityConfig& security) {
  security.check();
  if (!security.enabled)
    throw Error(ErrorCode::security_disabled, "security envelope requested on a security-disabled bus");
  return *security.key;
}

}  // namespace

Bytes encode_frame(const Frame& f) {
  if (f.topic.size() > 0xffff) throw Error(ErrorCode::invalid_topic, "topic longer than 65535 bytes");
  if (f.payload.size() > 0xffffffffull) throw Error(ErrorCode::invalid_argument, "payload too large");
  Bytes out;
  out.reserve(4 + 2 + 2 + f.topic.size() + 8 + 4 + f.payload.size() + (f.sealed() ? crypto::kTagSize : 0));
  crypto::put_str(out, "MBUS");
  out.push_back(kFrameVersion);
  out.push_back(f.sealed() ? kFlagSealed : 0);
  crypto::put_u16(out, static_cast<std::uint16_t>(f.topic.size()));
  crypto::put_str(out, f.topic);
  crypto::put_u64(out, f.seq);
  crypto::put_u32(out, static_cast<std::uint32_t>(f.payload.size()));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  if (f.tag) out.insert(out.end(), f.tag->begin(), f.tag->end());
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), "MBUS")) throw Error(ErrorCode::bad_magic, "bad frame magic");
  auto version = r.uint(1, "version");
  if (version != kFrameVersion)
    throw Error(ErrorCode::version_mismatch, "unsupported frame version " + std::to_string(version));
  auto flags = r.uint(1, "flags");
  if (flags & ~std::uint64_t{kFlagSealed})
    throw Error(ErrorCode::invalid_argument, "reserved frame flag bits set");

  Frame f;
  auto topic_len = r.uint(2, "topic length");
  auto topic = r.take(topic_len, "topic");
  f.topic.assign(topic.begin(), topic.end());
  f.seq = r.uint(8, "seq");
  auto payload_len = r.uint(4, "payload length");
  auto payload = r.take(payload_len, "payload");
  f.payload.assign(payload.begin(), payload.end());
  if (flags & kFlagSealed) {
    Tag tag{};
    auto t = r.take(tag.size(), "tag");
    std::copy(t.begin(), t.end(), tag.begin());
    f.tag = tag;
  }
  if (!r.done())
    throw Error(ErrorCode::invalid_argument, "trailing bytes after frame at offset " + std::to_string(r.pos()));
  return f;
}

void SecurityConfig::check() const {
  if (enabled && !key) throw Error(ErrorCode::configuration, "security enabled without a key");
  if (!enabled && key) throw Error(ErrorCode::configuration, "security key given while security is disabled");
}

Frame seal_frame(const SecurityConfig& security, std::uint32_t domain_id, const Frame& plain) {
  const Key& key = require_key(security);
  if (plain.sealed()) throw Error(ErrorCode::invalid_argument, "frame is already sealed");
  auto header = keyed_header(domain_id, plain.topic, plain.seq);
  Frame out{plain.topic, plain.seq, apply_keystream(key, header, plain.payload), std::nullopt};
  out.tag = compute_tag(key, header, out.payload);
  return out;
}

Frame open_frame(const SecurityConfig& security, std::uint32_t domain_id, const Frame& sealed) {
  const Key& key = require_key(security);
  if (!sealed.sealed()) throw Error(ErrorCode::tag_mismatch, "frame carries no tag");
  auto header = keyed_header(domain_id, sealed.topic, sealed.seq);
  auto expected = compute_tag(key, header, sealed.payload);
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) diff |= expected[i] ^ (*sealed.tag)[i];
  if (diff != 0) throw Error(ErrorCode::tag_mismatch, "frame tag mismatch on " + sealed.topic);
  return Frame{sealed.topic, sealed.seq, apply_keystream(key, header, sealed.payload), std::nullopt};
}

Key derive_bus_key(std::uint64_t seed) {
  crypto::Bytes k;
  crypto::put_u64(k, seed);
  auto digest = crypto::hmac_sha256(k, crypto::as_bytes(crypto::kBusKeyLabel));
  Key key{};
  std::copy(digest.begin(), digest.end(), key.begin());
  return key;
}

std::string hex_dump(std::span<const std::uint8_t> bytes) {
  std::string out;
  char buf[8];
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    std::snprintf(buf, sizeof buf, "%04zx:", off);
    out += buf;
    std::string ascii;
    for (std::size_t i = off; i < off + 16; ++i) {
      if (i < bytes.size()) {
        std::snprintf(buf, sizeof buf, " %02x", bytes[i]);
        out += buf;
        ascii.push_back(bytes[i] >= 0x20 && bytes[i] < 0x7f ? static_cast<char>(bytes[i]) : '.');
      } else {
        out += "   ";
      }
    }
    out += "  |" + ascii + "|\n";
  }
  return out;
}

}  // namespace rctf::minibus
