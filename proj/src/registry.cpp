#include "rctf/registry.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "rctf/crypto.hpp"
#include "rctf/error.hpp"

namespace rctf::registry {
namespace {

constexpr std::pair<ScenarioKind, std::string_view> kKindNames[] = {
    {ScenarioKind::eavesdrop, "eavesdrop"},
    {ScenarioKind::eavesdrop_ros2, "eavesdrop-ros2"},
    {ScenarioKind::trigger_publish, "trigger-publish"},
    {ScenarioKind::safety_sim, "safety-sim"},
    {ScenarioKind::sniff_transport, "sniff-transport"},
    {ScenarioKind::cmd_injection, "cmd-injection"},
    {ScenarioKind::cred_binary, "cred-binary"},
    {ScenarioKind::const_patch, "const-patch"},
};

constexpr std::pair<NetworkProfile, std::string_view> kProfileNames[] = {
    {NetworkProfile::flat, "flat"},
    {NetworkProfile::segmented, "segmented"},
    {NetworkProfile::airgap, "airgap"},
};

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void syntax_error(std::size_t line, std::size_t column, const std::string& what) {
  throw Error(ErrorCode::syntax,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

std::uint32_t parse_ordinal(std::string_view value, std::size_t line, std::size_t column) {
  std::uint32_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    syntax_error(line, column, "expected an unsigned integer, got '" + std::string(value) + "'");
  return out;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  for (auto [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

std::string_view to_string(NetworkProfile profile) {
  for (auto [p, name] : kProfileNames)
    if (p == profile) return name;
  return "?";
}

ScenarioKind parse_kind(std::string_view text) {
  for (auto [k, name] : kKindNames)
    if (name == text) return k;
  throw Error(ErrorCode::unknown_kind, "unknown scenario kind '" + std::string(text) + "'");
}

NetworkProfile parse_profile(std::string_view text) {
  for (auto [p, name] : kProfileNames)
    if (name == text) return p;
  throw Error(ErrorCode::unknown_profile, "unknown network profile '" + std::string(text) + "'");
}

bool matches_flag_grammar(std::string_view flag) {
  static const std::regex grammar{std::string(kFlagGrammar)};
  return std::regex_match(flag.begin(), flag.end(), grammar);
}

const std::vector<std::string>& required_params(ScenarioKind kind) {
  static const std::map<ScenarioKind, std::vector<std::string>> table = {
      {ScenarioKind::eavesdrop, {"beacon_topic", "beacon_period_ticks"}},
      {ScenarioKind::eavesdrop_ros2, {"beacon_topic", "beacon_period_ticks"}},
      {ScenarioKind::trigger_publish, {"trigger_topic", "answer_topic", "trigger_word"}},
      {ScenarioKind::safety_sim, {"human_x", "human_y", "collision_radius", "max_speed"}},
      {ScenarioKind::sniff_transport, {"private_topic"}},
      {ScenarioKind::cmd_injection, {"template"}},
      {ScenarioKind::cred_binary, {"credential"}},
      {ScenarioKind::const_patch, {"guard_constant"}},
  };
  return table.at(kind);
}

ScenarioManifest parse_manifest(std::string_view text) {
  ScenarioManifest m;
  std::set<std::string> seen;
  bool in_params = false;
  std::size_t line_no = 0;

  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    std::string_view line = trim(raw);
    std::size_t indent = static_cast<std::size_t>(line.data() - raw.data());
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line != "[params]") syntax_error(line_no, indent + 1, "unknown section " + std::string(line));
      if (in_params) syntax_error(line_no, indent + 1, "duplicate [params] section");
      in_params = true;
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string_view::npos) syntax_error(line_no, indent + 1, "expected 'key = value'");
    std::string key{trim(line.substr(0, eq))};
    std::string_view value = trim(line.substr(eq + 1));
    std::size_t value_col = indent + eq + 2;
    if (key.empty()) syntax_error(line_no, indent + 1, "empty key");

    if (in_params) {
      if (!m.params.emplace(key, std::string(value)).second)
        syntax_error(line_no, indent + 1, "duplicate parameter '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) syntax_error(line_no, indent + 1, "duplicate key '" + key + "'");

    if (key == "id") {
      m.id = parse_ordinal(value, line_no, value_col);
    } else if (key == "original_id") {
      m.original_id = parse_ordinal(value, line_no, value_col);
    } else if (key == "title") {
      m.title = value;
    } else if (key == "cwe") {
      m.cwe = std::string(value);
    } else if (key == "kind") {
      m.kind = parse_kind(value);
    } else if (key == "goal") {
      m.goal = value;
    } else if (key == "flag") {
      auto colon = value.find(':');
      auto source = colon == std::string_view::npos ? value : value.substr(0, colon);
      if (source == "literal") {
        m.flag_spec.source = FlagSpec::Source::literal;
      } else if (source == "derived") {
        m.flag_spec.source = FlagSpec::Source::derived;
      } else {
        syntax_error(line_no, value_col, "flag must be 'literal:<flag>' or 'derived:<domain>'");
      }
      m.flag_spec.value = colon == std::string_view::npos ? "" : std::string(trim(value.substr(colon + 1)));
    } else if (key == "unlock_password") {
      m.unlock_password = value;
    } else if (key == "network_profile") {
      m.network_profile = parse_profile(value);
    } else {
      syntax_error(line_no, indent + 1, "unknown key '" + key + "'");
    }
  }

  for (const char* required : {"id", "title", "kind", "goal", "flag", "unlock_password"})
    if (!seen.contains(required))
      throw Error(ErrorCode::syntax, "line " + std::to_string(line_no) + ": missing required key '" +
                                         required + "'");

  if (m.flag_spec.source == FlagSpec::Source::literal) m.flag = m.flag_spec.value;
  return m;
}

std::string serialize_manifest(const ScenarioManifest& m) {
  std::ostringstream out;
  out << "id = " << m.id << '\n';
  if (m.original_id) out << "original_id = " << *m.original_id << '\n';
  out << "title = " << m.title << '\n';
  if (m.cwe) out << "cwe = " << *m.cwe << '\n';
  out << "kind = " << to_string(m.kind) << '\n';
  out << "goal = " << m.goal << '\n';
  out << "flag = " << (m.flag_spec.source == FlagSpec::Source::literal ? "literal:" : "derived:")
      << m.flag_spec.value << '\n';
  out << "unlock_password = " << m.unlock_password << '\n';
  out << "network_profile = " << to_string(m.network_profile) << '\n';
  out << "\n[params]\n";
  for (const auto& [k, v] : m.params) out << k << " = " << v << '\n';
  return out.str();
}

std::vector<Violation> validate_manifest(const ScenarioManifest& m) {
  static const std::regex cwe_pattern{"CWE-[0-9]+"};
  std::vector<Violation> out;
  if (m.id < 1) out.push_back({"id", "id must be >= 1"});
  if (m.title.empty()) out.push_back({"title", "title must not be empty"});
  if (m.goal.empty()) out.push_back({"goal", "goal must not be empty"});
  if (m.unlock_password.empty()) out.push_back({"unlock_password", "unlock_password must not be empty"});
  if (m.cwe && !std::regex_match(*m.cwe, cwe_pattern))
    out.push_back({"cwe", "cwe '" + *m.cwe + "' is not of the form CWE-<n>"});
  if (m.flag_spec.source == FlagSpec::Source::literal) {
    if (!matches_flag_grammar(m.flag_spec.value))
      out.push_back({"flag", "literal flag '" + m.flag_spec.value + "' does not match " +
                                 std::string(kFlagGrammar)});
  } else if (m.flag_spec.value.empty()) {
    out.push_back({"flag", "derived flag needs a seed domain"});
  }
  for (const auto& key : required_params(m.kind)) {
    auto it = m.params.find(key);
    if (it == m.params.end() || it->second.empty())
      out.push_back({"params." + key, "missing required parameter '" + key + "' for kind " +
                                          std::string(to_string(m.kind))});
  }
  return out;
}

std::string derive_flag(std::uint64_t catalog_seed, std::uint32_t scenario_id, std::string_view domain) {
  crypto::Bytes key;
  crypto::put_u64(key, catalog_seed);
  crypto::Bytes msg;
  crypto::put_str(msg, crypto::kFlagLabel);
  crypto::put_u32(msg, scenario_id);
  crypto::put_str(msg, domain);
  auto digest = crypto::hmac_sha256(key, msg);
  return "RCTF{" + crypto::to_hex(std::span(digest).first(8)) + "}";
}

const ScenarioManifest& Catalog::at(std::uint32_t id) const {
  if (!contains(id)) throw Error(ErrorCode::unknown_scenario, "unknown scenario id " + std::to_string(id));
  return manifests_[id - 1];
}

Catalog load_catalog(const std::vector<std::string>& documents, std::uint64_t catalog_seed) {
  if (documents.empty()) throw Error(ErrorCode::empty_catalog, "catalog has no scenario documents");

  std::vector<ScenarioManifest> manifests;
  std::string report;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    try {
      auto m = parse_manifest(documents[i]);
      for (const auto& v : validate_manifest(m))
        report += "document " + std::to_string(i + 1) + ": " + v.field + ": " + v.message + "\n";
      manifests.push_back(std::move(m));
    } catch (const Error& e) {
      report += "document " + std::to_string(i + 1) + ": " + e.what() + "\n";
    }
  }
  if (!report.empty()) throw Error(ErrorCode::invalid_manifest, report);

  std::sort(manifests.begin(), manifests.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    if (manifests[i].id != i + 1) {
      bool dup = i > 0 && manifests[i].id == manifests[i - 1].id;
      throw Error(ErrorCode::catalog_ids, dup ? "duplicate scenario id " + std::to_string(manifests[i].id)
                                              : "scenario ids are not contiguous: expected " +
                                                    std::to_string(i + 1) + ", found " +
                                                    std::to_string(manifests[i].id));
    }
  }

  for (auto& m : manifests)
    m.flag = m.flag_spec.source == FlagSpec::Source::literal ? m.flag_spec.value
                                                             : derive_flag(catalog_seed, m.id, m.flag_spec.value);
  return Catalog(std::move(manifests), catalog_seed);
}

std::vector<std::string> read_catalog_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "scenario directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".scenario") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::string> docs;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    docs.push_back(buf.str());
  }
  return docs;
}

}  // namespace rctf::registry
