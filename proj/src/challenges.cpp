#include "rctf/challenges.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "rctf/blobs.hpp"
#include "rctf/bytecode.hpp"
#include "rctf/cmd_eval.hpp"
#include "rctf/error.hpp"

namespace rctf::challenges {
namespace {

using nlohmann::json;

[[noreturn]] void install_error(const std::string& what) { throw Error(ErrorCode::install_failure, what); }

const std::string& param(const ScenarioManifest& m, const std::string& key) {
  auto it = m.params.find(key);
  if (it == m.params.end()) install_error("missing parameter '" + key + "'");
  return it->second;
}

std::string param_or(const ScenarioManifest& m, const std::string& key, std::string fallback) {
  auto it = m.params.find(key);
  return it == m.params.end() ? fallback : it->second;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  int base = 10;
  std::string_view s = text;
  if (s.starts_with("0x") || s.starts_with("0X")) {
    s.remove_prefix(2);
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    install_error("parameter '" + key + "' is not an unsigned integer: '" + text + "'");
  return v;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    install_error("parameter '" + key + "' is not a finite number: '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  install_error("parameter '" + key + "' is not a boolean: '" + text + "'");
}

std::string topic_param(const ScenarioManifest& m, const std::string& key) {
  const std::string& t = param(m, key);
  if (!minibus::valid_topic_name(t)) install_error("parameter '" + key + "' is not a valid topic: '" + t + "'");
  return t;
}

std::string fold(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

json world_json(const world::WorldState& w) {
  return {{"ee_x", w.ee_x}, {"ee_y", w.ee_y},       {"vx", w.vx},
          {"vy", w.vy},     {"human_x", w.human_x}, {"human_y", w.human_y},
          {"collision", w.collision}, {"tick", w.tick}};
}

json topic_options_json(const minibus::TopicOptions& o) {
  return {{"visible", o.visible}, {"restricted", o.restricted}, {"latched", o.latched}, {"sniffable", o.sniffable}};
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::frame: return "frame";
    case EventKind::world: return "world";
    case EventKind::flag: return "flag";
  }
  return "?";
}

crypto::Bytes serialize(const ImageState& image) {
  json j;
  j["kind"] = registry::to_string(image.kind);
  j["flag"] = image.flag;
  json bus;
  bus["domain_id"] = image.bus.domain_id;
  bus["security"] = {{"enabled", image.bus.security.enabled},
                     {"key", image.bus.security.key ? crypto::to_hex(*image.bus.security.key) : ""}};
  bus["security_available"] = image.bus.security_available;
  bus["profile"] = registry::to_string(image.bus.profile);
  for (const auto& [name, opts] : image.bus.topics) bus["topics"].push_back({{"name", name}, {"options", topic_options_json(opts)}});
  for (const auto& n : image.bus.nodes)
    bus["nodes"].push_back({{"name", n.name}, {"publishes", n.publishes}, {"subscribes", n.subscribes}});
  j["bus"] = bus;
  for (const auto& [path, e] : *image.files)
    j["files"].push_back({{"path", path},
                          {"kind", vfs::to_string(e.blob->kind)},
                          {"read_only", e.read_only},
                          {"restricted", e.restricted},
                          {"bytes", crypto::to_hex(e.blob->bytes)}});
  if (image.world) j["world"] = world_json(*image.world);
  j["config"] = std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, BeaconConfig>) return {{"topic", c.topic}, {"period", c.period}};
        if constexpr (std::is_same_v<T, TriggerConfig>)
          return {{"trigger_topic", c.trigger_topic}, {"answer_topic", c.answer_topic}, {"word", c.word}};
        if constexpr (std::is_same_v<T, SafetyConfig>)
          return {{"collision_radius", c.collision_radius}, {"max_speed", c.max_speed}};
        if constexpr (std::is_same_v<T, SniffConfig>)
          return {{"private_topic", c.private_topic}, {"status_topic", c.status_topic}, {"period", c.period}};
        if constexpr (std::is_same_v<T, InjectionConfig>) return {{"template", c.command_template}};
        if constexpr (std::is_same_v<T, CredConfig>) return {{"credential", c.credential}};
        if constexpr (std::is_same_v<T, GuardConfig>)
          return {{"guard_constant", c.guard_constant},
                  {"const_offset", c.const_offset},
                  {"branch_offset", c.branch_offset}};
      },
      image.config);
  auto text = j.dump();
  return crypto::Bytes(text.begin(), text.end());
}

void install(ImageState& image, const ScenarioManifest& m, std::uint64_t seed) {
  image.kind = m.kind;
  image.flag = !m.flag.empty() ? m.flag : registry::derive_flag(seed, m.id, m.flag_spec.value);
  image.bus = BusLayout{};
  image.bus.profile = m.network_profile;
  image.world.reset();

  auto files = std::make_shared<vfs::FileMap>();
  auto put = [&](const std::string& path, vfs::Blob blob, bool read_only, bool restricted = false) {
    (*files)[path] = vfs::Entry{std::make_shared<const vfs::Blob>(std::move(blob)), read_only, restricted};
  };
  put("/README", vfs::Blob::text(m.title + "\n\n" + m.goal + "\n"), true);
  put("/etc/hostname", vfs::Blob::text("robot-" + std::to_string(m.id) + "\n"), true);
  put("/etc/motd", vfs::Blob::text("Robot maintenance shell. Type `help` for commands.\n"), true);

  switch (m.kind) {
    case ScenarioKind::eavesdrop:
    case ScenarioKind::eavesdrop_ros2: {
      BeaconConfig c{topic_param(m, "beacon_topic"), to_u64("beacon_period_ticks", param(m, "beacon_period_ticks"))};
      if (c.period == 0) install_error("beacon_period_ticks must be >= 1");
      if (m.kind == ScenarioKind::eavesdrop_ros2) {
        image.bus.security_available = true;
        image.bus.domain_id = static_cast<std::uint32_t>(to_u64("domain_id", param_or(m, "domain_id", "0")));
        if (to_bool("security_enabled", param_or(m, "security_enabled", "false")))
          image.bus.security = minibus::SecurityConfig::with_key(minibus::derive_bus_key(seed));
      }
      image.bus.topics.push_back({c.topic, minibus::TopicOptions{}});
      image.bus.nodes.push_back({"status_beacon", {c.topic}, {}});
      image.config = c;
      break;
    }
    case ScenarioKind::trigger_publish: {
      TriggerConfig c{topic_param(m, "trigger_topic"), topic_param(m, "answer_topic"), param(m, "trigger_word")};
      if (c.trigger_topic == c.answer_topic) install_error("trigger_topic and answer_topic must differ");
      if (fold(c.word).empty()) install_error("trigger_word must not be blank");
      image.bus.topics.push_back({c.trigger_topic, minibus::TopicOptions{}});
      image.bus.topics.push_back({c.answer_topic, minibus::TopicOptions{.latched = true}});
      image.bus.nodes.push_back({"gatekeeper", {c.answer_topic}, {c.trigger_topic}});
      image.config = c;
      break;
    }
    case ScenarioKind::safety_sim: {
      SafetyConfig c{to_double("collision_radius", param(m, "collision_radius")),
                     to_double("max_speed", param(m, "max_speed"))};
      if (c.collision_radius <= 0) install_error("collision_radius must be > 0");
      if (c.max_speed <= 0) install_error("max_speed must be > 0");
      world::WorldState w;
      w.ee_x = to_double("ee_x", param_or(m, "ee_x", "0"));
      w.ee_y = to_double("ee_y", param_or(m, "ee_y", "0"));
      w.human_x = to_double("human_x", param(m, "human_x"));
      w.human_y = to_double("human_y", param(m, "human_y"));
      if (world::check_collision(w, c.collision_radius))
        install_error("end-effector starts inside the collision radius");
      image.world = w;
      image.bus.topics.push_back({"/flag", minibus::TopicOptions{.latched = true}});
      image.bus.topics.push_back({"/ur10/cmd_vel", minibus::TopicOptions{}});
      image.bus.nodes.push_back({"ur10_driver", {"/flag"}, {"/ur10/cmd_vel"}});
      image.config = c;
      break;
    }
    case ScenarioKind::sniff_transport: {
      SniffConfig c{topic_param(m, "private_topic"), param_or(m, "status_topic", "/diagnostics"),
                    to_u64("exchange_period_ticks", param_or(m, "exchange_period_ticks", "5"))};
      if (!minibus::valid_topic_name(c.status_topic) || c.status_topic == c.private_topic)
        install_error("status_topic must be a valid topic distinct from private_topic");
      if (c.period == 0) install_error("exchange_period_ticks must be >= 1");
      image.bus.topics.push_back(
          {c.private_topic, minibus::TopicOptions{.visible = false, .restricted = true, .sniffable = true}});
      image.bus.topics.push_back({c.status_topic, minibus::TopicOptions{.sniffable = true}});
      image.bus.nodes.push_back({"planner", {c.private_topic}, {}});
      image.bus.nodes.push_back({"controller", {c.status_topic}, {c.private_topic}});
      image.config = c;
      break;
    }
    case ScenarioKind::cmd_injection: {
      InjectionConfig c{param(m, "template")};
      if (!cmd_eval::valid_template(c.command_template))
        install_error("template must contain exactly one {} placeholder");
      put("/flag.txt", vfs::Blob::text(image.flag), true, true);
      put("/usr/local/bin/diag",
          vfs::Blob::text("#!/bin/sh\n# remote diagnostics helper (run as root via `vuln <text>`)\n" +
                          c.command_template + "\n"),
          true);
      image.config = c;
      break;
    }
    case ScenarioKind::cred_binary: {
      CredConfig c{param(m, "credential")};
      if (c.credential.size() < 4 ||
          !std::all_of(c.credential.begin(), c.credential.end(),
                       [](unsigned char ch) { return blobs::printable(ch) && ch != ' '; }))
        install_error("credential must be >= 4 printable, non-space characters");
      put("/opt/robot_ctl", blobs::generate_cred_blob(seed, c.credential), true);
      image.config = c;
      break;
    }
    case ScenarioKind::const_patch: {
      auto value = to_u64("guard_constant", param(m, "guard_constant"));
      if (value == 0 || value > 0xffffffffull) install_error("guard_constant must be in 1..2^32-1");
      GuardConfig c{static_cast<std::uint32_t>(value), 0, 0};
      auto program = bytecode::assemble_guard(image.flag, c.guard_constant, seed);
      c.const_offset = program.const_offset;
      c.branch_offset = program.branch_offset;
      put("/opt/guard", program.to_blob(), false);
      image.config = c;
      break;
    }
  }
  image.files = std::move(files);
}

std::string to_json_line(const Event& e) {
  json j{{"tick", e.tick}, {"kind", to_string(e.kind)}, {"topic", e.topic}};
  if (!e.wire.empty()) j["wire"] = crypto::to_hex(e.wire);
  if (e.world) j["world"] = world_json(*e.world);
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j.dump();
}

ScenarioRuntime::ScenarioRuntime(std::shared_ptr<const ImageState> image)
    : image_(std::move(image)), fs_(image_->files) {
  const auto& layout = image_->bus;
  bus_ = std::make_unique<minibus::DomainBus>(layout.domain_id, layout.security, layout.profile);
  for (const auto& [name, opts] : layout.topics) bus_->declare_topic(name, opts);
  for (const auto& n : layout.nodes) {
    auto id = bus_->register_node(n.name);
    for (const auto& t : n.publishes) publishers_[n.name + ":" + t] = bus_->advertise(id, t);
    for (const auto& t : n.subscribes) subscriptions_[n.name + ":" + t] = bus_->subscribe(id, t);
  }
  bus_->set_transport_observer([this](const minibus::Frame& f) { on_frame(f); });
}

const world::WorldState& ScenarioRuntime::world() const {
  if (world_overlay_) return *world_overlay_;
  if (!image_->world) throw Error(ErrorCode::unsupported, "this scenario has no simulated world");
  return *image_->world;
}

world::WorldState& ScenarioRuntime::mutable_world() {
  if (!world_overlay_) world_overlay_ = world();
  return *world_overlay_;
}

void ScenarioRuntime::on_frame(const minibus::Frame& frame) {
  pending_.push_back(Event{tick_, EventKind::frame, frame.topic, minibus::encode_frame(frame), std::nullopt, {}});
}

std::vector<Event> ScenarioRuntime::take_pending() { return std::exchange(pending_, {}); }

void ScenarioRuntime::publish_flag_on(const std::string& role) {
  bus_->publish(publishers_.at(role), image_->flag);
}

void ScenarioRuntime::step(std::vector<Event>& out) {
  ++tick_;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, BeaconConfig>) {
          if (tick_ % c.period == 0) publish_flag_on("status_beacon:" + c.topic);
        } else if constexpr (std::is_same_v<T, TriggerConfig>) {
          auto sub = subscriptions_.at("gatekeeper:" + c.trigger_topic);
          for (auto& msg : bus_->poll(sub, minibus::kQueueCapacity))
            trigger_respond(*this, minibus::Frame{c.trigger_topic, msg.seq, std::move(msg.payload), std::nullopt});
        } else if constexpr (std::is_same_v<T, SniffConfig>) {
          if (tick_ % c.period == 0) {
            publish_flag_on("planner:" + c.private_topic);
            bus_->publish(publishers_.at("controller:" + c.status_topic),
                          "controller: nominal, tick " + std::to_string(tick_));
          }
          bus_->poll(subscriptions_.at("controller:" + c.private_topic), minibus::kQueueCapacity);
        } else if constexpr (std::is_same_v<T, SafetyConfig>) {
          for (const auto& msg : bus_->poll(subscriptions_.at("ur10_driver:/ur10/cmd_vel"), minibus::kQueueCapacity)) {
            std::istringstream in(std::string(msg.payload.begin(), msg.payload.end()));
            double vx = 0, vy = 0;
            if (in >> vx >> vy && std::isfinite(vx) && std::isfinite(vy))
              world::apply_cmd_vel(mutable_world(), vx, vy, c.max_speed);
          }
          const world::WorldState before = world();
          world::WorldState after = world::world_step(before, c.collision_radius);
          mutable_world() = after;
          if (after.ee_x != before.ee_x || after.ee_y != before.ee_y || after.collision != before.collision)
            pending_.push_back(Event{tick_, EventKind::world, {}, {}, after, {}});
          if (after.collision && !before.collision) {
            publish_flag_on("ur10_driver:/flag");
            pending_.push_back(Event{tick_, EventKind::flag, "/flag", {}, std::nullopt, "collision with human"});
          }
        }
      },
      image_->config);
  for (auto& e : pending_) out.push_back(std::move(e));
  pending_.clear();
}

std::string ScenarioRuntime::observable_state() const {
  json j;
  j["tick"] = tick_;
  for (const auto& t : bus_->list_topics())
    j["topics"].push_back({{"name", t.name}, {"publishers", t.publishers.size()}, {"subscribers", t.subscribers.size()}});
  for (const auto& [path, e] : fs_.merged())
    j["files"].push_back({{"path", path},
                          {"read_only", e.read_only},
                          {"restricted", e.restricted},
                          {"sha256", crypto::to_hex(crypto::sha256(e.blob->bytes))}});
  if (has_world()) j["world"] = world_json(world());
  j["auth"] = {{"failures", auth_.consecutive_failures}, {"locked_until", auth_.locked_until}};
  return j.dump();
}

void ScenarioRuntime::close() { bus_->close(); }

std::optional<std::uint64_t> trigger_respond(ScenarioRuntime& runtime, const minibus::Frame& frame) {
  const auto* c = std::get_if<TriggerConfig>(&runtime.image().config);
  if (!c || frame.topic != c->trigger_topic) return std::nullopt;
  if (fold(std::string_view(reinterpret_cast<const char*>(frame.payload.data()), frame.payload.size())) != fold(c->word))
    return std::nullopt;
  return runtime.bus().publish(runtime.publishers_.at("gatekeeper:" + c->answer_topic), runtime.image().flag);
}

AuthResult auth_check(ScenarioRuntime& runtime, std::string_view password) {
  const auto* c = std::get_if<CredConfig>(&runtime.image().config);
  if (!c) throw Error(ErrorCode::unsupported, "authentication is not part of this scenario");
  auto& auth = runtime.auth();
  if (runtime.tick() < auth.locked_until)
    return AuthResult{AuthResult::Status::locked_out, std::nullopt, auth.locked_until - runtime.tick()};
  if (crypto::constant_time_equal(password, c->credential)) {
    auth.consecutive_failures = 0;
    return AuthResult{AuthResult::Status::granted, runtime.image().flag, 0};
  }
  if (++auth.consecutive_failures >= kAuthMaxFailures) {
    auth.consecutive_failures = 0;
    auth.locked_until = runtime.tick() + kAuthLockoutTicks;
    return AuthResult{AuthResult::Status::locked_out, std::nullopt, kAuthLockoutTicks};
  }
  return AuthResult{AuthResult::Status::denied, std::nullopt, 0};
}

const SafetyConfig& safety_config(const ImageState& image) {
  const auto* c = std::get_if<SafetyConfig>(&image.config);
  if (!c) throw Error(ErrorCode::unsupported, "this scenario has no simulated world");
  return *c;
}

void apply_cmd_vel(ScenarioRuntime& runtime, double vx, double vy) {
  const auto& c = safety_config(runtime.image());
  world::apply_cmd_vel(runtime.mutable_world(), vx, vy, c.max_speed);
}

}  // namespace rctf::challenges
