#include "rctf/blobs.hpp"

#include <algorithm>
#include <random>

#include "rctf/error.hpp"

namespace rctf::blobs {
namespace {

constexpr std::string_view kStringPool[] = {
    "/lib64/ld-linux-x86-64.so.2", "libroscpp.so", "librosconsole.so", "libroslib.so", "libstdc++.so.6",
    "libc.so.6", "GLIBC_2.17", "GLIBCXX_3.4.21", "_ZN3ros4initERiPPcRKSsj", "_ZN3ros10NodeHandleC1ERKSs",
    "_ZN3ros9PublisherD1Ev", "ros::init", "robot_ctl", "/ur10/joint_states", "/ur10/cmd_vel",
    "/ur10/diagnostics", "/rosout", "ROS_MASTER_URI", "ROS_HOSTNAME", "http://localhost:11311",
    "user:maintenance", "connecting to controller", "controller handshake failed", "invalid session",
    "emergency stop engaged", "emergency stop released", "joint limit exceeded", "payload: %f kg",
    "speed scaling: %d%%", "firmware 3.4.1", "calibration ok", "calibration failed", "tool0", "base_link",
    "shoulder_pan_joint", "shoulder_lift_joint", "elbow_joint", "wrist_1_joint", "wrist_2_joint",
    "wrist_3_joint", "Authenticating...", "Authentication failed", "Authentication succeeded",
    "usage: robot_ctl [--auth]", "config: /etc/robot_ctl.yaml", "log level: %s", "heartbeat timeout",
    "socket(): %s", "bind(): %s", "GCC: (Ubuntu 7.5.0) 7.5.0", ".shstrtab", ".rodata", ".text", ".data",
    "deprecated API call", "watchdog reset",
};

class Filler {
 public:
  explicit Filler(std::uint64_t seed) : rng_(seed) {}

  void emit(vfs::Bytes& out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      auto b = static_cast<std::uint8_t>(rng_());
      if (printable(b) && run_ == 3) b = non_printable();
      run_ = printable(b) ? run_ + 1 : 0;
      out.push_back(b);
    }
  }

  // Guarantees the next emitted string starts a fresh run.
  void separator(vfs::Bytes& out) {
    out.push_back(non_printable());
    run_ = 0;
  }

  std::uint64_t next() { return rng_(); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::uint8_t non_printable() {
    auto b = static_cast<std::uint8_t>(rng_());
    return printable(b) ? static_cast<std::uint8_t>(b | 0x80) : b;
  }

  std::mt19937_64 rng_;
  int run_ = 0;
};

}  // namespace

vfs::Blob generate_cred_blob(std::uint64_t seed, std::string_view credential) {
  Filler filler(seed);
  std::vector<std::string> strings(std::begin(kStringPool), std::end(kStringPool));
  std::shuffle(strings.begin(), strings.end(), filler.engine());
  strings.resize(48);
  auto slot = static_cast<std::ptrdiff_t>(filler.next() % (strings.size() + 1));
  strings.insert(strings.begin() + slot, "pass:" + std::string(credential));

  vfs::Bytes out;
  crypto::put_str(out, "RBIN");
  out.push_back(0x01);
  out.push_back(0x00);
  filler.emit(out, 16 + filler.next() % 32);
  for (const auto& s : strings) {
    filler.separator(out);
    crypto::put_str(out, s);
    out.push_back(0);
    filler.emit(out, 8 + filler.next() % 56);
  }
  return vfs::Blob{std::move(out), vfs::BlobKind::rbin};
}

std::vector<std::string> extract_strings(const vfs::Blob& blob, std::size_t min_len) {
  if (min_len < 1) throw Error(ErrorCode::invalid_argument, "min_len must be >= 1");
  std::vector<std::string> out;
  std::string run;
  for (auto b : blob.bytes) {
    if (printable(b)) {
      run.push_back(static_cast<char>(b));
      continue;
    }
    if (run.size() >= min_len) out.push_back(run);
    run.clear();
  }
  if (run.size() >= min_len) out.push_back(run);
  return out;
}

}  // namespace rctf::blobs
