#include <doctest.h>

#include "rctf/error.hpp"
#include "support.hpp"

using namespace rctf;
using namespace rctf::sandbox;
using support::contains;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("build_base is deterministic") {
  auto catalog = support::shipped();
  InProcessBackend backend;
  for (const auto& m : catalog.manifests()) {
    auto a = backend.build_base(m, 42);
    auto b = backend.build_base(m, 42);
    CHECK(a->snapshot_hash() == b->snapshot_hash());
    CHECK(a->snapshot_hash().size() == 64);
  }
  auto beacon = backend.build_base(catalog.at(1), 42);
  bool found = false;
  for (const auto& n : beacon->state()->bus.nodes)
    if (n.name == "status_beacon") found = !n.publishes.empty();
  CHECK(found);
}

TEST_CASE("copy-on-write between siblings") {
  auto catalog = support::shipped();
  InProcessBackend backend;
  auto base = backend.build_base(catalog.at(8), 42);
  auto hash = base->snapshot_hash();
  auto a = backend.spawn_instance(base);
  auto b = backend.spawn_instance(base);
  std::string b_state;
  {
    auto lock = b->lock();
    b_state = b->runtime().observable_state();
  }
  {
    auto lock = a->lock();
    a->runtime().fs().patch("/opt/guard", 10, 0xff);
    a->runtime().fs().write("/tmp/x", vfs::Blob::text("x"));
    a->advance(3);
  }
  CHECK(base->snapshot_hash() == hash);
  auto lock = b->lock();
  CHECK(b->runtime().observable_state() == b_state);
}

TEST_CASE("instance cap, endpoints and teardown") {
  auto catalog = support::shipped();
  InProcessBackend backend(2);
  auto base = backend.build_base(catalog.at(1), 42);
  auto a = backend.spawn_instance(base);
  auto b = backend.spawn_instance(base);
  CHECK(code_of([&] { backend.spawn_instance(base); }) == ErrorCode::resource_limit);
  CHECK(a->endpoints().terminal != a->endpoints().simulation);
  CHECK(a->endpoints().terminal.size() == 32);
  CHECK(backend.by_terminal(a->endpoints().terminal) == a);
  CHECK(backend.by_simulation(a->endpoints().simulation) == a);
  CHECK(backend.live_instances() == 2);

  backend.teardown(*a);
  CHECK(code_of([&] { backend.by_terminal(a->endpoints().terminal); }) == ErrorCode::stale_endpoint);
  CHECK(code_of([&] { backend.teardown(*a); }) == ErrorCode::torn_down);
  CHECK(code_of([&] { backend.tick(*a, 1); }) == ErrorCode::torn_down);

  shell::ShellContext sa(a);
  CHECK(code_of([&] { sa.exec("topics"); }) == ErrorCode::stale_endpoint);

  shell::ShellContext sb(b);
  CHECK(contains(sb.exec("echo-topic /chatter"), "RCTF{"));
  CHECK_NOTHROW(backend.spawn_instance(base));
}

TEST_CASE("tick observer fires once per tick") {
  auto catalog = support::shipped();
  InProcessBackend backend;
  auto inst = backend.spawn_instance(backend.build_base(catalog.at(1), 42));
  std::vector<std::uint64_t> ticks;
  {
    auto lock = inst->lock();
    inst->set_tick_observer([&](std::uint64_t t, const std::vector<Event>&) { ticks.push_back(t); });
  }
  backend.tick(*inst, 5);
  CHECK(ticks == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
}
