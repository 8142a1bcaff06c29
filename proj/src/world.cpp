#include "rctf/world.hpp"

#include <cmath>
#include <cstdio>

#include "rctf/error.hpp"

namespace rctf::world {

void apply_cmd_vel(WorldState& state, double vx, double vy, double max_speed) {
  if (!std::isfinite(vx) || !std::isfinite(vy))
    throw Error(ErrorCode::invalid_argument, "velocity command must be finite");
  double speed = std::hypot(vx, vy);
  if (speed > max_speed) {
    vx *= max_speed / speed;
    vy *= max_speed / speed;
  }
  state.vx = vx;
  state.vy = vy;
}

double distance_to_human(const WorldState& s) { return std::hypot(s.ee_x - s.human_x, s.ee_y - s.human_y); }

bool check_collision(const WorldState& state, double radius) { return distance_to_human(state) <= radius; }

WorldState world_step(WorldState state, double radius) {
  state.ee_x += state.vx * kTimestep;
  state.ee_y += state.vy * kTimestep;
  ++state.tick;
  state.collision = state.collision || check_collision(state, radius);
  return state;
}

std::string describe(const WorldState& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "tick=%llu ee=(%.3f,%.3f) v=(%.3f,%.3f) human=(%.3f,%.3f) dist=%.3f collision=%s",
                static_cast<unsigned long long>(s.tick), s.ee_x, s.ee_y, s.vx, s.vy, s.human_x, s.human_y,
                distance_to_human(s), s.collision ? "yes" : "no");
  return buf;
}

}  // namespace rctf::world
