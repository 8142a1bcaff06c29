#include "rctf/solvers.hpp"

#include <cmath>
#include <regex>
#include <sstream>

#include "rctf/bytecode.hpp"
#include "rctf/error.hpp"
#include "rctf/frame.hpp"

namespace rctf::solvers {
namespace {

using registry::ScenarioKind;

class Session {
 public:
  Session(shell::ShellContext& shell, SolveResult& result) : shell_(shell), result_(result) {}

  std::string run(const std::string& line) {
    auto out = shell_.exec(line);
    result_.transcript.push_back("$ " + line);
    result_.transcript.push_back(out);
    return out;
  }

 private:
  shell::ShellContext& shell_;
  SolveResult& result_;
};

struct ListedTopic {
  std::string name;
  int publishers = 0;
  int subscribers = 0;
};

std::vector<ListedTopic> parse_topics(const std::string& out) {
  static const std::regex line_re{R"((/\S+)\s+\(publishers: (\d+), subscribers: (\d+)\))"};
  std::vector<ListedTopic> topics;
  std::istringstream in(out);
  for (std::string line; std::getline(in, line);) {
    std::smatch m;
    if (std::regex_search(line, m, line_re))
      topics.push_back({m[1], std::stoi(m[2]), std::stoi(m[3])});
  }
  return topics;
}

std::string param_or(const registry::Params& p, const std::string& key, const std::string& fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

std::optional<std::string> solve_beacon(Session& s) {
  for (const auto& t : parse_topics(s.run("topics")))
    if (auto flag = find_flag(s.run("echo-topic " + t.name + " 1"))) return flag;
  return std::nullopt;
}

std::optional<std::string> solve_trigger(Session& s, const registry::Params& params) {
  auto topics = parse_topics(s.run("topics"));
  const std::string word = param_or(params, "trigger_word", "please");
  for (const auto& trigger : topics) {
    if (trigger.subscribers == 0) continue;
    s.run("pub " + trigger.name + " " + word);
    for (const auto& answer : topics) {
      if (answer.publishers == 0 || answer.name == trigger.name) continue;
      if (auto flag = find_flag(s.run("echo-topic " + answer.name + " 1"))) return flag;
    }
  }
  return std::nullopt;
}

std::optional<std::string> solve_safety(Session& s, const registry::Params& params) {
  static const std::regex pos_re{R"(ee=\(([-0-9.]+),([-0-9.]+)\).*human=\(([-0-9.]+),([-0-9.]+)\))"};
  std::string w = s.run("world");
  std::smatch m;
  if (!std::regex_search(w, m, pos_re)) return std::nullopt;
  double dx = std::stod(m[3]) - std::stod(m[1]);
  double dy = std::stod(m[4]) - std::stod(m[2]);
  double norm = std::hypot(dx, dy);
  double speed = std::stod(param_or(params, "max_speed", "1"));
  std::ostringstream cmd;
  cmd.precision(17);
  cmd << "drive " << dx / norm * speed << " " << dy / norm * speed;
  s.run(cmd.str());
  return find_flag(s.run("echo-topic /flag 1"));
}

std::optional<std::string> solve_sniff(Session& s) {
  for (const auto& bytes : parse_hex_frames(s.run("sniff 8"))) {
    try {
      auto frame = minibus::decode_frame(bytes);
      if (frame.sealed()) continue;
      if (auto flag = find_flag(std::string(frame.payload.begin(), frame.payload.end()))) return flag;
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

std::optional<std::string> solve_injection(Session& s) {
  s.run("cat /flag.txt");
  return find_flag(s.run("vuln status; cat /flag.txt"));
}

std::optional<std::string> solve_cred(Session& s) {
  std::istringstream files(s.run("ls /opt"));
  for (std::string name; std::getline(files, name);) {
    std::istringstream strs(s.run("strings /opt/" + name + " 6"));
    for (std::string str; std::getline(strs, str);) {
      if (!str.starts_with("pass:")) continue;
      if (auto flag = find_flag(s.run("auth " + str.substr(5)))) return flag;
    }
  }
  return std::nullopt;
}

std::optional<std::string> solve_guard(Session& s) {
  const std::string path = "/opt/guard";
  s.run("run " + path + " 0");
  auto frames = parse_hex_frames(s.run("cat " + path));
  if (frames.empty()) return std::nullopt;
  const auto& b = frames.front();
  if (b.size() < bytecode::kHeaderSize) return std::nullopt;
  const std::size_t code_end = bytecode::kHeaderSize + (std::size_t{b[4]} << 8 | b[5]);
  for (std::size_t pc = bytecode::kHeaderSize; pc < code_end && pc < b.size();) {
    auto len = bytecode::instruction_length(b[pc]);
    if (len == 0) return std::nullopt;
    if (b[pc] == bytecode::JZ) {
      char hex[3];
      std::snprintf(hex, sizeof hex, "%02x", bytecode::JNZ);
      s.run("patch " + path + " " + std::to_string(pc) + " " + hex);
      return find_flag(s.run("run " + path + " 0"));
    }
    pc += len;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> find_flag(std::string_view text) {
  static const std::regex flag_re{R"(RCTF\{[0-9a-f]{16}\})"};
  std::cmatch m;
  if (std::regex_search(text.begin(), text.end(), m, flag_re)) return m.str();
  return std::nullopt;
}

std::vector<crypto::Bytes> parse_hex_frames(std::string_view dump) {
  static const std::regex row_re{R"(^[0-9a-f]{4,}:((?: [0-9a-f]{2})+))"};
  std::vector<crypto::Bytes> frames;
  bool open = false;
  std::istringstream in{std::string(dump)};
  for (std::string line; std::getline(in, line);) {
    std::smatch m;
    if (!std::regex_search(line, m, row_re)) {
      open = false;
      continue;
    }
    if (!open || line.starts_with("0000:")) {
      frames.emplace_back();
      open = true;
    }
    std::istringstream hex(m[1]);
    for (std::string byte; hex >> byte;) frames.back().push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
  }
  return frames;
}

SolveResult solve(shell::ShellContext& shell, registry::ScenarioKind kind, const registry::Params& params) {
  SolveResult result;
  Session s(shell, result);
  switch (kind) {
    case ScenarioKind::eavesdrop:
    case ScenarioKind::eavesdrop_ros2: result.flag = solve_beacon(s); break;
    case ScenarioKind::trigger_publish: result.flag = solve_trigger(s, params); break;
    case ScenarioKind::safety_sim: result.flag = solve_safety(s, params); break;
    case ScenarioKind::sniff_transport: result.flag = solve_sniff(s); break;
    case ScenarioKind::cmd_injection: result.flag = solve_injection(s); break;
    case ScenarioKind::cred_binary: result.flag = solve_cred(s); break;
    case ScenarioKind::const_patch: result.flag = solve_guard(s); break;
  }
  return result;
}

}  // namespace rctf::solvers
