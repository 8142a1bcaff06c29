#include "rctf/event_log.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "rctf/crypto.hpp"

namespace rctf::progression {
namespace {

constexpr std::string_view kCrcKey = ",\"crc32\":\"";

std::string crc_hex(std::string_view covered) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crypto::crc32(covered));
  return buf;
}

}  // namespace

std::string encode_log_line(const LogEvent& e) {
  nlohmann::json j{{"seq", e.seq}, {"ts", e.ts}, {"kind", e.kind}, {"body", e.body}};
  std::string covered = j.dump();
  std::string line = covered.substr(0, covered.size() - 1);
  line += kCrcKey;
  line += crc_hex(covered);
  line += "\"}";
  return line;
}

std::vector<LogEvent> parse_log(std::string_view text) {
  std::vector<LogEvent> out;
  std::size_t offset = 0;
  while (offset < text.size()) {
    auto nl = text.find('\n', offset);
    if (nl == std::string_view::npos) throw ReplayError(offset, "unterminated final line");
    std::string_view line = text.substr(offset, nl - offset);

    auto crc_at = line.rfind(kCrcKey);
    if (crc_at == std::string_view::npos || !line.ends_with("\"}") ||
        line.size() != crc_at + kCrcKey.size() + 8 + 2)
      throw ReplayError(offset, "missing crc32 field");
    std::string covered = std::string(line.substr(0, crc_at)) + "}";
    if (line.substr(crc_at + kCrcKey.size(), 8) != crc_hex(covered)) throw ReplayError(offset, "crc32 mismatch");

    LogEvent e;
    try {
      auto j = nlohmann::json::parse(covered);
      e.seq = j.at("seq").get<std::uint64_t>();
      e.ts = j.at("ts").get<std::int64_t>();
      e.kind = j.at("kind").get<std::string>();
      e.body = j.at("body");
    } catch (const nlohmann::json::exception& ex) {
      throw ReplayError(offset, std::string("malformed event: ") + ex.what());
    }
    if (e.seq != out.size() + 1)
      throw ReplayError(offset, "sequence gap: expected " + std::to_string(out.size() + 1) + ", found " +
                                    std::to_string(e.seq));
    out.push_back(std::move(e));
    offset = nl + 1;
  }
  return out;
}

EventLog EventLog::open_file(const std::string& path) {
  EventLog log;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read event log " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    log.text_ = buf.str();
    log.events_ = parse_log(log.text_);
  }
  log.file_ = std::make_shared<std::ofstream>(path, std::ios::binary | std::ios::app);
  if (!*log.file_) throw Error(ErrorCode::io, "cannot open event log for appending: " + path);
  return log;
}

const LogEvent& EventLog::append(std::string kind, nlohmann::json body, std::int64_t ts) {
  LogEvent e{events_.size() + 1, ts, std::move(kind), std::move(body)};
  std::string line = encode_log_line(e) + "\n";
  if (file_) {
    *file_ << line;
    file_->flush();
    if (!*file_) throw Error(ErrorCode::io, "event log write failed");
  }
  text_ += line;
  events_.push_back(std::move(e));
  return events_.back();
}

std::string EventLog::text() const { return text_; }

void EventLog::flush() {
  if (file_) file_->flush();
}

}  // namespace rctf::progression
