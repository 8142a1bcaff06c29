#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "rctf/error.hpp"
#include "rctf/event_log.hpp"

using namespace rctf;
using namespace rctf::progression;

TEST_CASE("line encoding matches the crc reference") {
  LogEvent e{1, 0, "x", nlohmann::json::object()};
  CHECK(encode_log_line(e) == R"({"body":{},"kind":"x","seq":1,"ts":0,"crc32":"ab58486d"})");
}

TEST_CASE("append and parse round trip") {
  EventLog log;
  log.append("a", {{"k", 1}}, 10);
  log.append("b", {{"s", "x\ny"}}, 20);
  auto parsed = parse_log(log.text());
  CHECK(parsed == log.events());
  CHECK(parsed[1].seq == 2);
  CHECK(parse_log("").empty());
}

TEST_CASE("corruption names the byte offset") {
  EventLog log;
  log.append("a", nlohmann::json::object(), 1);
  log.append("b", nlohmann::json::object(), 2);
  auto text = log.text();
  auto second = text.find('\n') + 1;

  SUBCASE("crash mid-line") {
    auto cut = text.substr(0, text.size() - 7);
    try {
      parse_log(cut);
      FAIL("accepted a torn line");
    } catch (const ReplayError& e) {
      CHECK(e.byte_offset() == second);
      CHECK(e.code() == ErrorCode::log_corrupt);
    }
  }
  SUBCASE("flipped byte") {
    auto bad = text;
    bad[second + 10] = bad[second + 10] == 'k' ? 'K' : 'k';
    try {
      parse_log(bad);
      FAIL("accepted a corrupt line");
    } catch (const ReplayError& e) {
      CHECK(e.byte_offset() == second);
    }
  }
  SUBCASE("sequence gap") {
    auto only_second = text.substr(second);
    CHECK_THROWS_AS(parse_log(only_second), ReplayError);
  }
}

TEST_CASE("file-backed log reloads and appends") {
  auto path = std::filesystem::temp_directory_path() / ("rctf_log_test_" + std::to_string(::getpid()) + ".ndjson");
  std::filesystem::remove(path);
  {
    auto log = EventLog::open_file(path.string());
    log.append("a", nlohmann::json::object(), 1);
  }
  {
    auto log = EventLog::open_file(path.string());
    REQUIRE(log.events().size() == 1);
    CHECK(log.append("b", nlohmann::json::object(), 2).seq == 2);
  }
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(parse_log(ss.str()).size() == 2);
  std::filesystem::remove(path);

  try {
    EventLog::open_file("/nonexistent-dir/x/log.ndjson");
    FAIL("opened an unwritable path");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}
