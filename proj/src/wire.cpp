#include "rctf/wire.hpp"

#include "rctf/error.hpp"

namespace rctf::wire {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::bad_request, what); }

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<T>(j, key);
}

Channel parse_channel(const std::string& s) {
  if (s == "api") return Channel::api;
  if (s == "term") return Channel::term;
  if (s == "sim") return Channel::sim;
  bad("unknown channel '" + s + "'");
}

Message expect(std::string_view line, Channel channel) {
  auto m = decode_message(line);
  if (m.channel != channel) bad("expected channel " + std::string(to_string(channel)));
  return m;
}

}  // namespace

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::api: return "api";
    case Channel::term: return "term";
    case Channel::sim: return "sim";
  }
  return "?";
}

Message decode_message(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad("message is not a JSON object");
  if (field<int>(j, "v") != kProtocolVersion) bad("unsupported protocol version");
  Message m;
  m.channel = parse_channel(field<std::string>(j, "channel"));
  if (!j.contains("body") || !j["body"].is_object()) bad("missing object field 'body'");
  m.body = j["body"];
  return m;
}

std::string encode_message(const Message& m) {
  json j{{"v", kProtocolVersion}, {"channel", to_string(m.channel)}, {"body", m.body}};
  return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

json to_json(const world::WorldState& s) {
  return {{"ee_x", s.ee_x},     {"ee_y", s.ee_y},       {"vx", s.vx},       {"vy", s.vy},
          {"human_x", s.human_x}, {"human_y", s.human_y}, {"collision", s.collision}, {"tick", s.tick}};
}

world::WorldState world_from_json(const json& j) {
  world::WorldState s;
  s.ee_x = field<double>(j, "ee_x");
  s.ee_y = field<double>(j, "ee_y");
  s.vx = field<double>(j, "vx");
  s.vy = field<double>(j, "vy");
  s.human_x = field<double>(j, "human_x");
  s.human_y = field<double>(j, "human_y");
  s.collision = field<bool>(j, "collision");
  s.tick = field<std::uint64_t>(j, "tick");
  return s;
}

json to_json(const TermFrame& f) {
  json j{{"endpoint", f.endpoint}, {"direction", f.direction == Direction::input ? "input" : "output"}, {"data", f.data}};
  if (f.closed) j["closed"] = *f.closed;
  return j;
}

json to_json(const SimFrame& f) {
  json j{{"endpoint", f.endpoint}, {"tick", f.tick}, {"events", f.events}};
  if (f.world) j["world"] = to_json(*f.world);
  if (f.radius) j["radius"] = *f.radius;
  if (f.flag_event) j["flag_event"] = *f.flag_event;
  if (f.closed) j["closed"] = *f.closed;
  return j;
}

json to_json(const ApiEnvelope& e) {
  if (const auto* r = std::get_if<ApiRequest>(&e)) {
    json j{{"id", r->id}, {"op", r->op}, {"args", r->args}};
    if (r->auth) j["auth"] = *r->auth;
    return j;
  }
  const auto& r = std::get<ApiResponse>(e);
  json j{{"id", r.id}, {"ok", r.ok}};
  if (r.ok) j["body"] = r.body;
  else if (r.error) j["error"] = {{"code", r.error->code}, {"message", r.error->message}};
  return j;
}

TermFrame term_from_json(const json& j) {
  TermFrame f;
  f.endpoint = field<std::string>(j, "endpoint");
  auto dir = field<std::string>(j, "direction");
  if (dir == "input") f.direction = Direction::input;
  else if (dir == "output") f.direction = Direction::output;
  else bad("unknown direction '" + dir + "'");
  f.data = field<std::string>(j, "data");
  f.closed = optional_field<std::string>(j, "closed");
  return f;
}

SimFrame sim_from_json(const json& j) {
  SimFrame f;
  f.endpoint = field<std::string>(j, "endpoint");
  f.tick = field<std::uint64_t>(j, "tick");
  f.events = field<std::vector<std::string>>(j, "events");
  if (j.contains("world")) f.world = world_from_json(j.at("world"));
  f.radius = optional_field<double>(j, "radius");
  f.flag_event = optional_field<std::string>(j, "flag_event");
  f.closed = optional_field<std::string>(j, "closed");
  return f;
}

ApiEnvelope api_from_json(const json& j) {
  if (j.contains("op")) {
    ApiRequest r;
    r.id = optional_field<std::uint64_t>(j, "id").value_or(0);
    r.op = field<std::string>(j, "op");
    if (j.contains("args")) {
      if (!j["args"].is_object()) bad("field 'args' must be an object");
      r.args = j["args"];
    }
    r.auth = optional_field<std::string>(j, "auth");
    return r;
  }
  ApiResponse r;
  r.id = field<std::uint64_t>(j, "id");
  r.ok = field<bool>(j, "ok");
  if (r.ok) {
    r.body = j.contains("body") ? j["body"] : json::object();
  } else {
    const auto& e = j.contains("error") ? j["error"] : json();
    r.body = json::object();
    r.error = ApiError{field<std::string>(e, "code"), field<std::string>(e, "message")};
  }
  return r;
}

std::string encode(const TermFrame& f) { return encode_message({Channel::term, to_json(f)}); }
std::string encode(const SimFrame& f) { return encode_message({Channel::sim, to_json(f)}); }
std::string encode(const ApiEnvelope& e) { return encode_message({Channel::api, to_json(e)}); }

TermFrame decode_term(std::string_view line) { return term_from_json(expect(line, Channel::term).body); }
SimFrame decode_sim(std::string_view line) { return sim_from_json(expect(line, Channel::sim).body); }
ApiEnvelope decode_api(std::string_view line) { return api_from_json(expect(line, Channel::api).body); }

}  // namespace rctf::wire
