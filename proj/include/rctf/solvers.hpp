#pragma once

// Bundled oracle solvers: scripted exploits that play a scenario through the
// player shell only. They receive the scenario kind and its public knobs
// (what a player could learn from the goal text), never the flag.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rctf/registry.hpp"
#include "rctf/shell.hpp"

namespace rctf::solvers {

struct SolveResult {
  std::optional<std::string> flag;
  std::vector<std::string> transcript;  // "$ cmd" lines followed by output
};

SolveResult solve(shell::ShellContext& shell, registry::ScenarioKind kind, const registry::Params& params);

// First substring matching the flag grammar, if any.
std::optional<std::string> find_flag(std::string_view text);

// Parses `hex_dump` output (possibly several frames separated by header
// lines) back into byte strings, one per frame.
std::vector<crypto::Bytes> parse_hex_frames(std::string_view dump);

}  // namespace rctf::solvers
