#include "rctf/tokens.hpp"

#include <array>
#include <chrono>
#include <cstdio>

#include "rctf/crypto.hpp"

namespace rctf {

std::string RandomTokenSource::next() {
  std::array<std::uint8_t, 16> raw{};
  crypto::fill_random(raw);
  return crypto::to_hex(raw);
}

std::string SequentialTokenSource::next() {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(stream_),
                static_cast<unsigned long long>(++counter_));
  return buf;
}

std::int64_t SystemClock::now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace rctf
