#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>

namespace rctf {

// Source of 128-bit capability tokens rendered as 32 lowercase hex chars.
class TokenSource {
 public:
  virtual ~TokenSource() = default;
  virtual std::string next() = 0;
};

class RandomTokenSource final : public TokenSource {
 public:
  std::string next() override;
};

// Deterministic tokens for reproducible playthroughs.
class SequentialTokenSource final : public TokenSource {
 public:
  explicit SequentialTokenSource(std::uint64_t stream = 0) : stream_(stream) {}
  std::string next() override;

 private:
  std::uint64_t stream_;
  std::atomic<std::uint64_t> counter_{0};
};

// Milliseconds since the Unix epoch.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() override;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() override { return now_.load(); }
  void advance_ms(std::int64_t delta) { now_ += delta; }
  void set_ms(std::int64_t value) { now_ = value; }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace rctf
