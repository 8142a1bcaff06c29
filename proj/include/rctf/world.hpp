#pragma once

// Planar kinematic world for the safety scenario: a point end-effector
// driven by a velocity command and a static human.

#include <cstdint>
#include <string>

namespace rctf::world {

inline constexpr double kTimestep = 0.1;  // seconds per tick

struct WorldState {
  double ee_x = 0, ee_y = 0;
  double vx = 0, vy = 0;
  double human_x = 0, human_y = 0;
  bool collision = false;
  std::uint64_t tick = 0;

  bool operator==(const WorldState&) const = default;
};

// Clamps (vx, vy) to max_speed preserving direction. Throws
// Error(invalid_argument) for non-finite input.
void apply_cmd_vel(WorldState& state, double vx, double vy, double max_speed);

bool check_collision(const WorldState& state, double radius);

// One dt step: integrate position, then latch collision.
WorldState world_step(WorldState state, double radius);

double distance_to_human(const WorldState& state);

// `tick=.. ee=(x,y) v=(vx,vy) human=(x,y) dist=.. collision=yes|no`
std::string describe(const WorldState& state);

}  // namespace rctf::world
