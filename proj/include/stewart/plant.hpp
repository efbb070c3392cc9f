#pragma once

// Ball rolling on a tilting plate.
//
//   x'' =  k g sin(pitch) - c x'
//   y'' = -k g sin(roll)  - c y'
//
// k is the rolling factor (5/7 for a solid sphere), c the viscous damping.
// Positive pitch tips +x downhill; positive roll tips -y downhill. The plate
// slews toward the commanded angles no faster than the actuator rate limit.

#include "stewart/types.hpp"

#include <optional>
#include <vector>

namespace stewart {

struct PlateAngles {
  double roll = 0;   // degrees
  double pitch = 0;  // degrees

  bool operator==(const PlateAngles&) const = default;
};

struct PlantParams {
  double plate_half_extent = 200.0;   // mm
  double gravity = 9810.0;            // mm/s^2
  double rolling_factor = 5.0 / 7.0;
  double viscous_damping = 0.2;       // 1/s
  double actuator_rate_limit = 120.0; // deg/s
  double sensor_period = 1.0 / 30.0;  // s
  double integrator_dt = 1e-3;        // s, upper bound on the RK4 substep

  void validate() const;
  bool operator==(const PlantParams&) const = default;
};

struct SimState {
  Vec2d ball_pos = Vec2d::Zero();  // mm, plate frame
  Vec2d ball_vel = Vec2d::Zero();  // mm/s
  PlateAngles plate;
  double time = 0;
  bool ball_fell = false;

  double radius() const { return ball_pos.norm(); }
};

/// One fixed RK4 step of length dt toward the commanded plate angles.
SimState step(const SimState& state, const PlateAngles& commanded, const PlantParams& params,
              double dt);

/// Advances by `duration` using equal RK4 substeps no longer than params.integrator_dt.
/// Stops early (with ball_fell set) on the substep where the ball leaves the plate.
SimState advance(const SimState& state, const PlateAngles& commanded, const PlantParams& params,
                 double duration);

struct Trajectory {
  std::vector<SimState> samples;

  double duration() const {
    return samples.empty() ? 0.0 : samples.back().time - samples.front().time;
  }
};

/// Mean radial distance from the plate centre over the final `window` seconds.
double oscillation_band(const Trajectory& traj, double window);

/// First time after which the ball stays inside `band` for at least `hold`
/// seconds; nullopt when that never happens.
std::optional<double> stabilization_time(const Trajectory& traj, double band, double hold);

/// Number of times the ball, having come within `inner` of the centre, is
/// later driven back out beyond `outer`.
int divergence_episodes(const Trajectory& traj, double inner, double outer);

}  // namespace stewart
