#pragma once

// Gateway wire protocol: one UTF-8 JSON message per line,
//   {"v":1,"channel":"api"|"term"|"sim","body":{...}}
// API requests carry an `id` echoed in the matching response so a client can
// pipeline requests over one connection.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rctf/world.hpp"

namespace rctf::wire {

inline constexpr int kProtocolVersion = 1;

enum class Channel { api, term, sim };
std::string_view to_string(Channel channel);

struct Message {
  Channel channel = Channel::api;
  nlohmann::json body = nlohmann::json::object();
};

// Throws Error(bad_request) for malformed lines, unknown channels or a
// version other than 1.
Message decode_message(std::string_view line);
std::string encode_message(const Message& message);  // no trailing newline

enum class Direction { input, output };

struct TermFrame {
  std::string endpoint;
  Direction direction = Direction::input;
  std::string data;
  std::optional<std::string> closed;  // close reason; stream ends after it

  bool operator==(const TermFrame&) const = default;
};

struct SimFrame {
  std::string endpoint;
  std::uint64_t tick = 0;
  std::optional<world::WorldState> world;
  std::optional<double> radius;
  std::vector<std::string> events;  // summary lines, never payload bytes
  std::optional<std::string> flag_event;
  std::optional<std::string> closed;

  bool operator==(const SimFrame&) const = default;
};

struct ApiRequest {
  std::uint64_t id = 0;
  std::string op;
  nlohmann::json args = nlohmann::json::object();
  std::optional<std::string> auth;

  bool operator==(const ApiRequest&) const = default;
};

struct ApiError {
  std::string code;
  std::string message;

  bool operator==(const ApiError&) const = default;
};

struct ApiResponse {
  std::uint64_t id = 0;
  bool ok = true;
  nlohmann::json body = nlohmann::json::object();  // when ok
  std::optional<ApiError> error;                    // when !ok

  bool operator==(const ApiResponse&) const = default;
};

using ApiEnvelope = std::variant<ApiRequest, ApiResponse>;

nlohmann::json to_json(const world::WorldState& state);
world::WorldState world_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TermFrame& frame);
nlohmann::json to_json(const SimFrame& frame);
nlohmann::json to_json(const ApiEnvelope& envelope);

TermFrame term_from_json(const nlohmann::json& j);
SimFrame sim_from_json(const nlohmann::json& j);
ApiEnvelope api_from_json(const nlohmann::json& j);

std::string encode(const TermFrame& frame);
std::string encode(const SimFrame& frame);
std::string encode(const ApiEnvelope& envelope);

// Decode a full line, checking the channel.
TermFrame decode_term(std::string_view line);
SimFrame decode_sim(std::string_view line);
ApiEnvelope decode_api(std::string_view line);

}  // namespace rctf::wire
