#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "rctf/error.hpp"
#include "rctf/registry.hpp"
#include "rctf/sandbox.hpp"
#include "rctf/server.hpp"
#include "rctf/shell.hpp"
#include "rctf/solvers.hpp"

using namespace rctf;

namespace {

std::uint64_t env_seed(std::uint64_t fallback) {
  if (const char* s = std::getenv("RCTF_SEED"); s && *s) {
    try {
      return std::stoull(s, nullptr, 0);
    } catch (const std::exception&) {
      throw Error(ErrorCode::configuration, std::string("RCTF_SEED is not an unsigned integer: ") + s);
    }
  }
  return fallback;
}

registry::Catalog load(const std::string& dir, std::uint64_t seed) {
  return registry::load_catalog(registry::read_catalog_dir(dir), seed);
}

std::shared_ptr<sandbox::Instance> spawn_local(sandbox::InProcessBackend& backend, const registry::Catalog& catalog,
                                               std::uint32_t id, const std::string& net) {
  auto manifest = catalog.at(id);
  if (!net.empty()) manifest.network_profile = registry::parse_profile(net);
  return backend.spawn_instance(backend.build_base(manifest, catalog.seed()));
}

int play(const registry::Catalog& catalog, std::uint32_t id, const std::string& net) {
  sandbox::InProcessBackend backend(1);
  auto instance = spawn_local(backend, catalog, id, net);
  const auto& m = instance->base().manifest();
  std::cout << "[" << m.id << "] " << m.title << (m.cwe ? " (" + *m.cwe + ")" : "") << "\n"
            << m.goal << "\n"
            << "network: " << registry::to_string(m.network_profile) << ". Type `help` for commands, `exit` to quit.\n";

  std::atomic<bool> running{true};
  std::thread ticker([&] {
    while (running) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      auto lock = instance->lock();
      if (instance->status() == sandbox::Status::running) instance->advance(1);
    }
  });
  shell::ShellContext sh(instance);
  std::string line;
  while (std::cout << "hacker@robot:" << sh.cwd() << "$ " << std::flush, std::getline(std::cin, line)) {
    if (line == "exit" || line == "quit") break;
    std::string out = sh.exec(line);
    if (!out.empty()) std::cout << out << (out.back() == '\n' ? "" : "\n");
  }
  running = false;
  ticker.join();
  backend.teardown(*instance);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robot hacking capture-the-flag platform"};
  app.require_subcommand(1);

  std::string scenarios = RCTF_SCENARIO_DIR;
  std::uint64_t seed = 0;
  app.add_option("--scenarios", scenarios, "scenario directory")->capture_default_str();
  app.add_option("--seed", seed, "catalog seed (RCTF_SEED overrides)")->capture_default_str();

  server::ServerConfig serve_cfg;
  auto* serve = app.add_subcommand("serve", "run the gateway server");
  serve->add_option("--listen", serve_cfg.listen, "host:port (RCTF_LISTEN overrides)")->capture_default_str();
  serve->add_option("--scenarios", scenarios, "scenario directory");
  serve->add_option("--log", serve_cfg.log_path, "event log file");
  serve->add_option("--seed", seed, "catalog seed (RCTF_SEED overrides)");
  serve->add_option("--tick-hz", serve_cfg.tick_hz, "simulation ticks per second, 0 = manual")->capture_default_str();
  serve->add_option("--idle-timeout", serve_cfg.gateway.idle_timeout_ms, "idle instance timeout in ms")
      ->capture_default_str();

  auto* list = app.add_subcommand("list", "list the scenario catalog");

  std::uint32_t id = 0;
  std::string net;
  auto* play_cmd = app.add_subcommand("play", "play a scenario in a local terminal");
  play_cmd->add_option("id", id, "scenario id")->required();
  play_cmd->add_option("--net", net, "network profile override")->check(CLI::IsMember({"flat", "segmented", "airgap"}));

  bool testing = false;
  auto* solve = app.add_subcommand("solve", "run the bundled solver and print the flag");
  solve->add_option("id", id, "scenario id")->required();
  solve->add_option("--net", net, "network profile override")->check(CLI::IsMember({"flat", "segmented", "airgap"}));
  solve->add_flag("--i-am-testing", testing, "acknowledge that this prints solutions");
  bool verbose = false;
  solve->add_flag("-v,--verbose", verbose, "print the solver transcript");

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "lint a scenario directory");
  validate->add_option("dir", validate_dir, "scenario directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    seed = env_seed(seed);
    if (*serve) {
      if (const char* l = std::getenv("RCTF_LISTEN"); l && *l) serve_cfg.listen = l;
      serve_cfg.scenarios_dir = scenarios;
      serve_cfg.seed = seed;
      server::Server srv(serve_cfg);
      std::cerr << "rctf: serving " << srv.gateway().catalog().size() << " scenarios on port " << srv.port()
                << "\n";
      srv.run(true);
      std::cerr << "rctf: stopped\n";
      return 0;
    }
    if (*list) {
      auto catalog = load(scenarios, seed);
      for (const auto& m : catalog.manifests())
        std::cout << m.id << "\t" << registry::to_string(m.kind) << "\t" << m.cwe.value_or("-") << "\t" << m.title
                  << "\n";
      return 0;
    }
    if (*play_cmd) return play(load(scenarios, seed), id, net);
    if (*solve) {
      if (!testing) {
        std::cerr << "rctf: solve prints flags; pass --i-am-testing to confirm\n";
        return 2;
      }
      auto catalog = load(scenarios, seed);
      sandbox::InProcessBackend backend(1);
      auto instance = spawn_local(backend, catalog, id, net);
      shell::ShellContext sh(instance);
      const auto& m = instance->base().manifest();
      auto result = solvers::solve(sh, m.kind, m.params);
      if (verbose)
        for (const auto& l : result.transcript) std::cout << l << "\n";
      if (!result.flag) {
        std::cerr << "rctf: solver did not recover a flag\n";
        return 1;
      }
      std::cout << *result.flag << "\n";
      return 0;
    }
    if (*validate) {
      auto catalog = load(validate_dir, seed);
      std::cout << "ok: " << catalog.size() << " scenarios\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "rctf: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
