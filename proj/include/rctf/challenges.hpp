#pragma once

// Scenario behaviors: what each kind installs into a base image and what it
// does on every tick of a running instance.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rctf/minibus.hpp"
#include "rctf/registry.hpp"
#include "rctf/vfs.hpp"
#include "rctf/world.hpp"

namespace rctf::challenges {

using registry::ScenarioKind;
using registry::ScenarioManifest;

struct BeaconConfig {
  std::string topic;
  std::uint64_t period = 1;
};
struct TriggerConfig {
  std::string trigger_topic;
  std::string answer_topic;
  std::string word;
};
struct SafetyConfig {
  double collision_radius = 0;
  double max_speed = 0;
};
struct SniffConfig {
  std::string private_topic;
  std::string status_topic;
  std::uint64_t period = 1;
};
struct InjectionConfig {
  std::string command_template;
};
struct CredConfig {
  std::string credential;
};
struct GuardConfig {
  std::uint32_t guard_constant = 0;
  std::size_t const_offset = 0;
  std::size_t branch_offset = 0;
};

using KindConfig =
    std::variant<BeaconConfig, TriggerConfig, SafetyConfig, SniffConfig, InjectionConfig, CredConfig, GuardConfig>;

struct NodeSpec {
  std::string name;
  std::vector<std::string> publishes;
  std::vector<std::string> subscribes;
};

struct BusLayout {
  std::uint32_t domain_id = 0;
  minibus::SecurityConfig security;
  bool security_available = false;  // ROS2-like domain: envelope exists, maybe unused
  minibus::NetworkProfile profile = minibus::NetworkProfile::flat;
  std::vector<std::pair<std::string, minibus::TopicOptions>> topics;
  std::vector<NodeSpec> nodes;
};

// Immutable initial state of a scenario, shared by every instance spawned
// from the same base image.
struct ImageState {
  ScenarioKind kind = ScenarioKind::eavesdrop;
  std::string flag;
  BusLayout bus;
  std::shared_ptr<const vfs::FileMap> files = std::make_shared<vfs::FileMap>();
  std::optional<world::WorldState> world;
  KindConfig config;
};

// Canonical byte serialization; two images are identical iff these match.
crypto::Bytes serialize(const ImageState& image);

// Populates `image` for the manifest's kind. Throws Error(install_failure)
// when params fail to coerce.
void install(ImageState& image, const ScenarioManifest& manifest, std::uint64_t seed);

enum class EventKind { frame, world, flag };

std::string_view to_string(EventKind kind);

struct Event {
  std::uint64_t tick = 0;
  EventKind kind = EventKind::frame;
  std::string topic;
  crypto::Bytes wire;  // encoded frame for frame events
  std::optional<world::WorldState> world;
  std::string detail;

  bool operator==(const Event&) const = default;
};

// One-line JSON rendering used for event logs and determinism checks.
std::string to_json_line(const Event& event);

struct AuthState {
  int consecutive_failures = 0;
  std::uint64_t locked_until = 0;
};

inline constexpr int kAuthMaxFailures = 3;
inline constexpr std::uint64_t kAuthLockoutTicks = 10;

struct AuthResult {
  enum class Status { granted, denied, locked_out };
  Status status = Status::denied;
  std::optional<std::string> flag;
  std::uint64_t retry_in = 0;
};

// Live state of one instance. Non-movable: the bus observer captures `this`.
class ScenarioRuntime {
 public:
  explicit ScenarioRuntime(std::shared_ptr<const ImageState> image);
  ScenarioRuntime(const ScenarioRuntime&) = delete;
  ScenarioRuntime& operator=(const ScenarioRuntime&) = delete;

  const ImageState& image() const { return *image_; }
  minibus::DomainBus& bus() { return *bus_; }
  const minibus::DomainBus& bus() const { return *bus_; }
  vfs::VirtualFS& fs() { return fs_; }
  const vfs::VirtualFS& fs() const { return fs_; }

  bool has_world() const { return image_->world.has_value(); }
  const world::WorldState& world() const;
  world::WorldState& mutable_world();

  std::uint64_t tick() const { return tick_; }
  AuthState& auth() { return auth_; }
  const AuthState& auth() const { return auth_; }

  // Advances one tick and appends everything observable to `out`.
  void step(std::vector<Event>& out);

  // Frames observed since the last step (player publishes land here).
  std::vector<Event> take_pending();

  // Human-readable dump of everything a player could observe.
  std::string observable_state() const;

  void close();

 private:
  friend std::optional<std::uint64_t> trigger_respond(ScenarioRuntime&, const minibus::Frame&);

  void on_frame(const minibus::Frame& frame);
  void publish_flag_on(const std::string& role);

  std::shared_ptr<const ImageState> image_;
  std::unique_ptr<minibus::DomainBus> bus_;
  vfs::VirtualFS fs_;
  std::optional<world::WorldState> world_overlay_;
  std::map<std::string, minibus::PublisherHandle> publishers_;
  std::map<std::string, minibus::SubscriberHandle> subscriptions_;
  AuthState auth_;
  std::uint64_t tick_ = 0;
  std::vector<Event> pending_;
};

// trigger-publish: answers with the flag iff the frame is on the trigger
// topic and its trimmed, case-folded payload equals the trigger word.
// Returns the sequence number of the answer.
std::optional<std::uint64_t> trigger_respond(ScenarioRuntime& runtime, const minibus::Frame& frame);

// cred-binary only (throws Error(unsupported) otherwise). Three consecutive
// failures lock authentication for kAuthLockoutTicks.
AuthResult auth_check(ScenarioRuntime& runtime, std::string_view password);

// safety-sim only. Clamped to the scenario's max_speed.
void apply_cmd_vel(ScenarioRuntime& runtime, double vx, double vy);

const SafetyConfig& safety_config(const ImageState& image);

}  // namespace rctf::challenges
