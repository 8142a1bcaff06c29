#pragma once

// Append-only, newline-delimited JSON event log. Each line is
//   {"body":{...},"kind":"...","seq":N,"ts":MS,"crc32":"xxxxxxxx"}
// where crc32 covers the line text preceding `,"crc32":`, with a closing
// brace appended (i.e. the line minus its crc field).

#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rctf/error.hpp"

namespace rctf::progression {

struct LogEvent {
  std::uint64_t seq = 0;
  std::int64_t ts = 0;
  std::string kind;
  nlohmann::json body = nlohmann::json::object();

  bool operator==(const LogEvent&) const = default;
};

std::string encode_log_line(const LogEvent& event);  // no trailing newline

class ReplayError : public Error {
 public:
  ReplayError(std::size_t byte_offset, const std::string& what)
      : Error(ErrorCode::log_corrupt, "event log corrupt at byte " + std::to_string(byte_offset) + ": " + what),
        offset_(byte_offset) {}
  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Parses every line; throws ReplayError naming the offset of the first bad
// line (checksum mismatch, malformed JSON, missing newline, seq gap).
std::vector<LogEvent> parse_log(std::string_view text);

class EventLog {
 public:
  EventLog() = default;  // memory only

  // Appends to (and first loads) the file at `path`. Throws Error(io) if it
  // cannot be opened for appending.
  static EventLog open_file(const std::string& path);

  const LogEvent& append(std::string kind, nlohmann::json body, std::int64_t ts);

  const std::vector<LogEvent>& events() const { return events_; }
  std::string text() const;
  void flush();

 private:
  std::vector<LogEvent> events_;
  std::string text_;
  std::shared_ptr<std::ofstream> file_;
};

}  // namespace rctf::progression
