#pragma once

// Scenario manifests and the catalog that defines the serial progression.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rctf::registry {

enum class ScenarioKind {
  eavesdrop,
  eavesdrop_ros2,
  trigger_publish,
  safety_sim,
  sniff_transport,
  cmd_injection,
  cred_binary,
  const_patch,
};

enum class NetworkProfile { flat, segmented, airgap };

std::string_view to_string(ScenarioKind kind);
std::string_view to_string(NetworkProfile profile);
ScenarioKind parse_kind(std::string_view text);         // throws Error(unknown_kind)
NetworkProfile parse_profile(std::string_view text);    // throws Error(unknown_profile)

struct FlagSpec {
  enum class Source { literal, derived };
  Source source = Source::derived;
  std::string value;  // the flag itself, or the seed domain

  bool operator==(const FlagSpec&) const = default;
};

using Params = std::map<std::string, std::string>;

struct ScenarioManifest {
  std::uint32_t id = 0;
  std::optional<std::uint32_t> original_id;
  std::string title;
  std::optional<std::string> cwe;
  ScenarioKind kind = ScenarioKind::eavesdrop;
  std::string goal;
  FlagSpec flag_spec;
  std::string unlock_password;
  NetworkProfile network_profile = NetworkProfile::flat;
  Params params;

  // Resolved flag: the literal, or derive_flag() once loaded into a catalog.
  // Not part of the file format.
  std::string flag;

  bool operator==(const ScenarioManifest&) const = default;
};

struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

inline constexpr std::string_view kFlagGrammar = "RCTF\\{[0-9a-f]{16}\\}";

bool matches_flag_grammar(std::string_view flag);

// Keys each kind must carry in its [params] section.
const std::vector<std::string>& required_params(ScenarioKind kind);

ScenarioManifest parse_manifest(std::string_view text);
std::string serialize_manifest(const ScenarioManifest& manifest);
std::vector<Violation> validate_manifest(const ScenarioManifest& manifest);

std::string derive_flag(std::uint64_t catalog_seed, std::uint32_t scenario_id, std::string_view domain);

class Catalog {
 public:
  Catalog(std::vector<ScenarioManifest> manifests, std::uint64_t seed)
      : manifests_(std::move(manifests)), seed_(seed) {}

  const std::vector<ScenarioManifest>& manifests() const { return manifests_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return manifests_.size(); }

  const ScenarioManifest& at(std::uint32_t id) const;  // throws Error(unknown_scenario)
  bool contains(std::uint32_t id) const { return id >= 1 && id <= manifests_.size(); }

 private:
  std::vector<ScenarioManifest> manifests_;
  std::uint64_t seed_;
};

Catalog load_catalog(const std::vector<std::string>& documents, std::uint64_t catalog_seed);

// Reads every `*.scenario` file in `dir` in lexical order.
std::vector<std::string> read_catalog_dir(const std::string& dir);

}  // namespace rctf::registry
