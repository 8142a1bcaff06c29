#include <doctest.h>

#include <algorithm>

#include "rctf/error.hpp"
#include "rctf/registry.hpp"

using namespace rctf;
using namespace rctf::registry;

namespace {

std::string eavesdrop_doc(std::uint32_t id = 1) {
  return "id = " + std::to_string(id) +
         "\n"
         "title = Beacon\n"
         "cwe = CWE-319\n"
         "kind = eavesdrop\n"
         "goal = listen\n"
         "flag = derived:beacon\n"
         "unlock_password = pw" +
         std::to_string(id) +
         "\n"
         "\n[params]\n"
         "beacon_topic = /chatter\n"
         "beacon_period_ticks = 10\n";
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

ScenarioManifest safety() {
  ScenarioManifest m;
  m.id = 4;
  m.title = "safety";
  m.kind = ScenarioKind::safety_sim;
  m.goal = "collide";
  m.flag_spec = {FlagSpec::Source::literal, "RCTF{0123456789abcdef}"};
  m.unlock_password = "pw";
  m.flag = m.flag_spec.value;
  m.params = {{"human_x", "1"}, {"human_y", "0"}, {"collision_radius", "0.15"}, {"max_speed", "1"}};
  return m;
}

}  // namespace

TEST_CASE("minimal eavesdrop manifest parses") {
  auto m = parse_manifest(eavesdrop_doc());
  CHECK(m.id == 1);
  CHECK(m.kind == ScenarioKind::eavesdrop);
  CHECK(m.cwe == std::optional<std::string>("CWE-319"));
  CHECK(m.network_profile == NetworkProfile::flat);
  CHECK(m.params.at("beacon_topic") == "/chatter");
  CHECK(validate_manifest(m).empty());
}

TEST_CASE("unknown kind and profile") {
  auto doc = eavesdrop_doc();
  auto bad = doc;
  bad.replace(bad.find("eavesdrop"), 9, "warp-drive");
  CHECK(code_of([&] { parse_manifest(bad); }) == ErrorCode::unknown_kind);
  CHECK(code_of([&] { parse_manifest("network_profile = mesh\n" + doc); }) == ErrorCode::unknown_profile);
  CHECK(code_of([] { parse_profile("mesh"); }) == ErrorCode::unknown_profile);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_manifest("id = 1\ntitle = x\n  garbage line\n");
    FAIL("expected syntax error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::syntax);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("column 3") != std::string::npos);
  }
  CHECK(code_of([] { parse_manifest("id = 1\nid = 2\n"); }) == ErrorCode::syntax);
}

TEST_CASE("manifest serialization round-trips") {
  auto m = parse_manifest(eavesdrop_doc());
  CHECK(parse_manifest(serialize_manifest(m)) == m);
  auto s = safety();
  CHECK(parse_manifest(serialize_manifest(s)) == s);
}

TEST_CASE("validation: required params and flag grammar") {
  CHECK(validate_manifest(safety()).empty());

  auto missing = safety();
  missing.params.erase("collision_radius");
  auto v = validate_manifest(missing);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "params.collision_radius");

  auto bad_flag = safety();
  bad_flag.flag_spec.value = "FLAG{x}";
  v = validate_manifest(bad_flag);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message.find("RCTF") != std::string::npos);

  CHECK(matches_flag_grammar("RCTF{0123456789abcdef}"));
  CHECK_FALSE(matches_flag_grammar("RCTF{0123456789ABCDEF}"));
  CHECK_FALSE(matches_flag_grammar("RCTF{0123456789abcde}"));
}

TEST_CASE("every kind lists its required params") {
  for (auto k : {ScenarioKind::eavesdrop, ScenarioKind::eavesdrop_ros2, ScenarioKind::trigger_publish,
                 ScenarioKind::safety_sim, ScenarioKind::sniff_transport, ScenarioKind::cmd_injection,
                 ScenarioKind::cred_binary, ScenarioKind::const_patch}) {
    CHECK_FALSE(required_params(k).empty());
    CHECK(parse_kind(to_string(k)) == k);
  }
}

TEST_CASE("load_catalog rules") {
  CHECK(code_of([] { load_catalog({}, 42); }) == ErrorCode::empty_catalog);
  CHECK(code_of([] { load_catalog({eavesdrop_doc(1), eavesdrop_doc(3)}, 42); }) == ErrorCode::catalog_ids);
  CHECK(code_of([] { load_catalog({eavesdrop_doc(1), eavesdrop_doc(1)}, 42); }) == ErrorCode::catalog_ids);

  auto c = load_catalog({eavesdrop_doc(2), eavesdrop_doc(1)}, 42);
  REQUIRE(c.size() == 2);
  CHECK(c.at(1).id == 1);
  CHECK(c.at(2).flag == derive_flag(42, 2, "beacon"));
  CHECK(code_of([&] { c.at(3); }) == ErrorCode::unknown_scenario);
}

TEST_CASE("shipped catalog: eight scenarios with contiguous ids and remapped original ids") {
  auto c = load_catalog(read_catalog_dir(RCTF_SCENARIO_DIR), 42);
  REQUIRE(c.size() == 8);
  std::vector<std::uint32_t> original;
  for (std::uint32_t i = 1; i <= 8; ++i) {
    CHECK(c.at(i).id == i);
    CHECK(matches_flag_grammar(c.at(i).flag));
    original.push_back(c.at(i).original_id.value_or(0));
  }
  CHECK(original == std::vector<std::uint32_t>{1, 2, 3, 4, 5, 6, 8, 9});

  auto again = load_catalog(read_catalog_dir(RCTF_SCENARIO_DIR), 42);
  auto other = load_catalog(read_catalog_dir(RCTF_SCENARIO_DIR), 43);
  for (std::uint32_t i = 1; i <= 8; ++i) {
    CHECK(again.at(i).flag == c.at(i).flag);
    CHECK(other.at(i).flag != c.at(i).flag);
  }
}

TEST_CASE("aggregated validation report names every bad document") {
  auto bad = eavesdrop_doc(2);
  bad.replace(bad.find("beacon_topic"), 12, "beacon_topik");
  try {
    load_catalog({eavesdrop_doc(1), bad}, 1);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_manifest);
    CHECK(std::string(e.what()).find("beacon_topic") != std::string::npos);
  }
}
