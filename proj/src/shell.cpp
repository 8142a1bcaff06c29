#include "rctf/shell.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rctf/blobs.hpp"
#include "rctf/bytecode.hpp"
#include "rctf/cmd_eval.hpp"
#include "rctf/error.hpp"

namespace rctf::shell {
namespace {

using registry::NetworkProfile;
using registry::ScenarioKind;

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) out += (i ? "\n" : "") + lines[i];
  return out;
}

std::string render_payload(const crypto::Bytes& payload) {
  std::string out;
  for (auto b : payload) {
    if (blobs::printable(b)) {
      out.push_back(static_cast<char>(b));
    } else {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02x", b);
      out += buf;
    }
  }
  return out;
}

std::optional<std::uint64_t> parse_count(const std::string& text) {
  std::uint64_t v = 0;
  std::string_view s = text;
  int base = 10;
  if (s.starts_with("0x")) {
    s.remove_prefix(2);
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string drop_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

}  // namespace

ShellContext::ShellContext(std::shared_ptr<sandbox::Instance> instance) : instance_(std::move(instance)) {}

std::vector<std::string> ShellContext::available_commands() const {
  std::vector<std::string> cmds = {"help", "topics", "echo-topic", "pub"};
  if (instance_->base().state()->bus.profile != NetworkProfile::airgap) cmds.push_back("sniff");
  for (const char* c : {"ls", "cat", "strings", "patch", "run"}) cmds.push_back(c);
  switch (instance_->base().state()->kind) {
    case ScenarioKind::cmd_injection: cmds.push_back("vuln"); break;
    case ScenarioKind::cred_binary: cmds.push_back("auth"); break;
    case ScenarioKind::safety_sim:
      cmds.push_back("world");
      cmds.push_back("drive");
      break;
    default: break;
  }
  return cmds;
}

std::string ShellContext::exec(std::string_view line) {
  auto lock = instance_->lock();
  if (instance_->status() != sandbox::Status::running)
    throw Error(ErrorCode::stale_endpoint, "terminal endpoint is closed");

  history_.emplace_back(line);
  std::istringstream in{std::string(line)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  if (words.empty()) return "";

  // Raw remainder after the command word, for commands taking free text.
  std::string_view rest = line;
  rest.remove_prefix(rest.find(words[0]) + words[0].size());
  if (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);

  const std::string cmd = words[0];
  words.erase(words.begin());
  try {
    return dispatch(cmd, words, rest);
  } catch (const Error& e) {
    return cmd + ": " + e.what();
  }
}

std::string ShellContext::dispatch(const std::string& cmd, const std::vector<std::string>& args,
                                   std::string_view rest) {
  auto available = available_commands();
  if (std::find(available.begin(), available.end(), cmd) == available.end()) {
    if (cmd == "sniff") return "sniff: operation not permitted on this network";
    return cmd + ": command not found";
  }
  if (cmd == "help") {
    std::string out = "available commands:";
    for (const auto& c : available) out += " " + c;
    return out;
  }
  if (cmd == "topics") return cmd_topics();
  if (cmd == "echo-topic") return cmd_echo_topic(args);
  if (cmd == "pub") return cmd_pub(args, rest);
  if (cmd == "sniff") return cmd_sniff(args);
  if (cmd == "ls") return cmd_ls(args);
  if (cmd == "cat") return cmd_cat(args);
  if (cmd == "strings") return cmd_strings(args);
  if (cmd == "patch") return cmd_patch(args);
  if (cmd == "run") return cmd_run(args, rest);
  if (cmd == "vuln") return cmd_vuln(rest);
  if (cmd == "auth") return cmd_auth(args);
  if (cmd == "world") return cmd_world();
  if (cmd == "drive") return cmd_drive(args);
  return cmd + ": command not found";
}

minibus::NodeId ShellContext::node() {
  if (node_) return *node_;
  auto& bus = instance_->bus();
  std::string name = "hacker_shell";
  for (int i = 2; bus.find_node(name); ++i) name = "hacker_shell_" + std::to_string(i);
  node_ = bus.register_node(name, minibus::NodeTrust::guest);
  return *node_;
}

std::string ShellContext::cmd_topics() {
  auto topics = instance_->bus().list_topics();
  if (topics.empty()) return "(no topics)";
  std::vector<std::string> lines;
  for (const auto& t : topics)
    lines.push_back(t.name + "  (publishers: " + std::to_string(t.publishers.size()) +
                    ", subscribers: " + std::to_string(t.subscribers.size()) + ")");
  return join_lines(lines);
}

std::string ShellContext::cmd_echo_topic(const std::vector<std::string>& args) {
  if (args.empty() || args.size() > 2) return "usage: echo-topic <topic> [n]";
  const std::string& topic = args[0];
  auto n = args.size() > 1 ? parse_count(args[1]) : std::optional<std::uint64_t>{1};
  if (!n || *n == 0) return "echo-topic: n must be a positive integer";

  auto& bus = instance_->bus();
  auto it = subscriptions_.find(topic);
  if (it == subscriptions_.end()) it = subscriptions_.emplace(topic, bus.subscribe(node(), topic)).first;

  std::vector<minibus::Message> got = bus.poll(it->second, *n);
  for (std::uint64_t waited = 0; got.size() < *n && waited < kWaitBudgetTicks; ++waited) {
    instance_->advance(1);
    auto more = bus.poll(it->second, *n - got.size());
    got.insert(got.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  if (got.empty())
    return "echo-topic: no messages on " + topic + " within " + std::to_string(kWaitBudgetTicks) + " ticks";
  std::vector<std::string> lines;
  for (const auto& m : got) lines.push_back("[seq " + std::to_string(m.seq) + "] " + render_payload(m.payload));
  return join_lines(lines);
}

std::string ShellContext::cmd_pub(const std::vector<std::string>& args, std::string_view rest) {
  if (args.size() < 2) return "usage: pub <topic> <text...>";
  const std::string& topic = args[0];
  std::string_view text = rest.substr(rest.find(topic) + topic.size());
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  auto& bus = instance_->bus();
  auto it = publishers_.find(topic);
  if (it == publishers_.end()) it = publishers_.emplace(topic, bus.advertise(node(), topic)).first;
  auto seq = bus.publish(it->second, text);
  return "published seq=" + std::to_string(seq) + " to " + topic;
}

std::string ShellContext::cmd_sniff(const std::vector<std::string>& args) {
  if (args.size() > 1) return "usage: sniff [n]";
  auto n = args.empty() ? std::optional<std::uint64_t>{4} : parse_count(args[0]);
  if (!n || *n == 0) return "sniff: n must be a positive integer";
  auto& bus = instance_->bus();
  if (!sniffer_) {
    try {
      sniffer_ = bus.attach_sniffer(std::nullopt);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::profile_forbidden) return "sniff: operation not permitted on this network";
      throw;
    }
  }
  auto got = bus.sniff_poll_raw(*sniffer_, *n);
  for (std::uint64_t waited = 0; got.size() < *n && waited < kWaitBudgetTicks; ++waited) {
    instance_->advance(1);
    auto more = bus.sniff_poll_raw(*sniffer_, *n - got.size());
    got.insert(got.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  if (got.empty()) return "sniff: no traffic captured within " + std::to_string(kWaitBudgetTicks) + " ticks";
  std::string out;
  for (std::size_t i = 0; i < got.size(); ++i) {
    out += "frame #" + std::to_string(i + 1) + " (" + std::to_string(got[i].size()) + " bytes)\n";
    out += minibus::hex_dump(got[i]);
  }
  return drop_newline(out);
}

std::string ShellContext::cmd_ls(const std::vector<std::string>& args) {
  const auto& fs = instance_->runtime().fs();
  std::string path = vfs::normalize_path(args.empty() ? cwd_ : args[0], cwd_);
  if (fs.exists(path)) return path;
  if (!fs.is_dir(path)) return "ls: cannot access '" + (args.empty() ? path : args[0]) + "': No such file or directory";
  return join_lines(fs.list(path));
}

std::string ShellContext::cmd_cat(const std::vector<std::string>& args) {
  if (args.size() != 1) return "usage: cat <path>";
  const auto& fs = instance_->runtime().fs();
  std::string path = vfs::normalize_path(args[0], cwd_);
  const vfs::Entry* e = fs.find(path);
  if (!e) return "cat: " + args[0] + (fs.is_dir(path) ? ": Is a directory" : ": No such file or directory");
  if (e->restricted) return "cat: " + args[0] + ": Permission denied";
  if (e->blob->kind == vfs::BlobKind::text) return drop_newline(e->blob->as_string());
  return drop_newline(minibus::hex_dump(e->blob->bytes));
}

std::string ShellContext::cmd_strings(const std::vector<std::string>& args) {
  if (args.empty() || args.size() > 2) return "usage: strings <path> [minlen]";
  auto min_len = args.size() > 1 ? parse_count(args[1]) : std::optional<std::uint64_t>{4};
  if (!min_len || *min_len == 0) return "strings: minlen must be a positive integer";
  const auto& fs = instance_->runtime().fs();
  std::string path = vfs::normalize_path(args[0], cwd_);
  const vfs::Entry* e = fs.find(path);
  if (!e) return "strings: " + args[0] + ": No such file or directory";
  if (e->restricted) return "strings: " + args[0] + ": Permission denied";
  return join_lines(blobs::extract_strings(*e->blob, *min_len));
}

std::string ShellContext::cmd_patch(const std::vector<std::string>& args) {
  if (args.size() != 3) return "usage: patch <path> <offset> <hexbyte>";
  auto& fs = instance_->runtime().fs();
  std::string path = vfs::normalize_path(args[0], cwd_);
  auto offset = parse_count(args[1]);
  if (!offset) return "patch: invalid offset '" + args[1] + "'";
  std::string hex = args[2].starts_with("0x") ? args[2].substr(2) : args[2];
  if (hex.size() != 2) return "patch: invalid byte '" + args[2] + "' (expected two hex digits)";
  auto value = crypto::from_hex(hex);
  const vfs::Entry* e = fs.find(path);
  if (e && e->restricted) return "patch: " + args[0] + ": Permission denied";
  std::uint8_t old = e && *offset < e->blob->bytes.size() ? e->blob->bytes[*offset] : 0;
  vfs::patch_blob(fs, path, *offset, value[0]);
  char buf[96];
  std::snprintf(buf, sizeof buf, ": offset %llu: %02x -> %02x", static_cast<unsigned long long>(*offset), old,
                value[0]);
  return "patched " + path + buf;
}

std::string ShellContext::cmd_run(const std::vector<std::string>& args, std::string_view rest) {
  if (args.empty()) return "usage: run <path> [stdin-line]";
  const auto& fs = instance_->runtime().fs();
  std::string path = vfs::normalize_path(args[0], cwd_);
  const vfs::Entry* e = fs.find(path);
  if (!e) return "run: " + args[0] + ": No such file or directory";
  if (e->restricted) return "run: " + args[0] + ": Permission denied";
  if (e->blob->kind != vfs::BlobKind::bytecode) return "run: " + args[0] + ": cannot execute binary file";
  std::string_view input = rest.substr(rest.find(args[0]) + args[0].size());
  while (!input.empty() && (input.front() == ' ' || input.front() == '\t')) input.remove_prefix(1);
  return bytecode::run_vm(*e->blob, input);
}

std::string ShellContext::cmd_vuln(std::string_view rest) {
  const auto& cfg = std::get<challenges::InjectionConfig>(instance_->base().state()->config);
  return cmd_eval::eval_command(cfg.command_template, rest, instance_->runtime().fs());
}

std::string ShellContext::cmd_auth(const std::vector<std::string>& args) {
  if (args.size() != 1) return "usage: auth <password>";
  auto result = challenges::auth_check(instance_->runtime(), args[0]);
  switch (result.status) {
    case challenges::AuthResult::Status::granted:
      authenticated_ = true;
      return "authenticated. maintenance token: " + *result.flag;
    case challenges::AuthResult::Status::denied: return "auth: access denied";
    case challenges::AuthResult::Status::locked_out:
      return "auth: too many failures, locked for " + std::to_string(result.retry_in) + " ticks";
  }
  return "auth: access denied";
}

std::string ShellContext::cmd_world() { return world::describe(instance_->runtime().world()); }

std::string ShellContext::cmd_drive(const std::vector<std::string>& args) {
  if (args.size() != 2) return "usage: drive <vx> <vy>";
  auto vx = parse_double(args[0]);
  auto vy = parse_double(args[1]);
  if (!vx || !vy) return "drive: velocities must be numbers";
  if (!std::isfinite(*vx) || !std::isfinite(*vy)) return "drive: velocity must be finite";
  challenges::apply_cmd_vel(instance_->runtime(), *vx, *vy);
  const auto& w = instance_->runtime().world();
  char buf[96];
  std::snprintf(buf, sizeof buf, "cmd_vel set to (%.3f,%.3f)", w.vx, w.vy);
  return buf;
}

}  // namespace rctf::shell
