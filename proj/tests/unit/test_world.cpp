#include <doctest.h>

#include <cmath>

#include "rctf/error.hpp"
#include "rctf/world.hpp"

using namespace rctf;
using namespace rctf::world;

namespace {

WorldState start() {
  WorldState s;
  s.human_x = 1.0;
  return s;
}

}  // namespace

TEST_CASE("nine-tick collision matches the reference oracle") {
  auto s = start();
  apply_cmd_vel(s, 1.0, 0.0, 1.0);
  for (int i = 0; i < 8; ++i) s = world_step(s, 0.15);
  CHECK(distance_to_human(s) == doctest::Approx(0.20000000000000007).epsilon(1e-12));
  CHECK_FALSE(s.collision);
  s = world_step(s, 0.15);
  CHECK(std::abs(distance_to_human(s) - 0.10000000000000009) < 1e-9);
  CHECK(std::abs(distance_to_human(s) - 0.10) < 1e-9);
  CHECK(s.collision);
  CHECK(s.tick == 9);
}

TEST_CASE("zero command never collides") {
  auto s = start();
  for (int i = 0; i < 10000; ++i) s = world_step(s, 0.15);
  CHECK_FALSE(s.collision);
  CHECK(distance_to_human(s) == 1.0);
}

TEST_CASE("commands are clamped to max speed") {
  auto s = start();
  apply_cmd_vel(s, 10.0, 0.0, 1.0);
  CHECK(s.vx == 1.0);
  apply_cmd_vel(s, 3.0, 4.0, 1.0);
  CHECK(std::hypot(s.vx, s.vy) == doctest::Approx(1.0));
  CHECK(s.vx == doctest::Approx(0.6));
  CHECK_THROWS_AS(apply_cmd_vel(s, NAN, 0, 1.0), Error);
  CHECK_THROWS_AS(apply_cmd_vel(s, INFINITY, 0, 1.0), Error);
}

TEST_CASE("displacement over five ticks") {
  WorldState s;
  s.human_x = 100;
  apply_cmd_vel(s, 0.5, -0.25, 1.0);
  for (int i = 0; i < 5; ++i) s = world_step(s, 0.15);
  CHECK(s.ee_x == doctest::Approx(5 * kTimestep * 0.5));
  CHECK(s.ee_y == doctest::Approx(5 * kTimestep * -0.25));
}

TEST_CASE("collision latches") {
  auto s = start();
  apply_cmd_vel(s, 1.0, 0.0, 1.0);
  for (int i = 0; i < 9; ++i) s = world_step(s, 0.15);
  REQUIRE(s.collision);
  for (int i = 0; i < 20; ++i) s = world_step(s, 0.15);  // passes through and beyond
  CHECK(s.collision);
  CHECK(check_collision(WorldState{0.95, 0, 0, 0, 1, 0, false, 0}, 0.15));
  CHECK(describe(start()).find("collision=no") != std::string::npos);
}
