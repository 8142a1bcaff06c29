#pragma once

#include <memory>
#include <string>

#include "rctf/registry.hpp"
#include "rctf/sandbox.hpp"
#include "rctf/shell.hpp"

namespace support {

inline rctf::registry::Catalog shipped(std::uint64_t seed = 42) {
  return rctf::registry::load_catalog(rctf::registry::read_catalog_dir(RCTF_SCENARIO_DIR), seed);
}

struct Fixture {
  explicit Fixture(const rctf::registry::ScenarioManifest& m, std::uint64_t seed = 42)
      : base(backend.build_base(m, seed)), instance(backend.spawn_instance(base)), shell(instance) {}

  std::string run(const std::string& line) { return shell.exec(line); }
  void tick(std::uint64_t n) { backend.tick(*instance, n); }

  rctf::sandbox::InProcessBackend backend;
  std::shared_ptr<const rctf::sandbox::BaseImage> base;
  std::shared_ptr<rctf::sandbox::Instance> instance;
  rctf::shell::ShellContext shell;
};

inline bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace support
