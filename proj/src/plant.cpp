#include "stewart/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stewart {

void PlantParams::validate() const {
  if (!(plate_half_extent > 0)) throw ContractViolation("plate_half_extent must be positive");
  if (!(gravity > 0)) throw ContractViolation("gravity must be positive");
  if (!(rolling_factor > 0 && rolling_factor <= 1))
    throw ContractViolation("rolling_factor must lie in (0, 1]");
  if (!(viscous_damping >= 0)) throw ContractViolation("viscous_damping must be non-negative");
  if (!(actuator_rate_limit > 0)) throw ContractViolation("actuator_rate_limit must be positive");
  if (!(sensor_period > 0)) throw ContractViolation("sensor_period must be positive");
  if (!(integrator_dt > 0)) throw ContractViolation("integrator_dt must be positive");
}

namespace {

double slewed(double from, double to, double rate, double tau) {
  const double reach = rate * tau;
  return from + std::clamp(to - from, -reach, reach);
}

struct Deriv {
  Vec2d dpos;
  Vec2d dvel;
};

}  // namespace

SimState step(const SimState& state, const PlateAngles& commanded, const PlantParams& params,
              double dt) {
  if (!(dt > 0)) throw ContractViolation("step needs dt > 0");
  const double kg = params.rolling_factor * params.gravity;
  const double c = params.viscous_damping;
  const double rate = params.actuator_rate_limit;

  auto accel = [&](double tau, const Vec2d& vel) {
    const double roll = deg2rad(slewed(state.plate.roll, commanded.roll, rate, tau));
    const double pitch = deg2rad(slewed(state.plate.pitch, commanded.pitch, rate, tau));
    return Vec2d(kg * std::sin(pitch) - c * vel.x(), -kg * std::sin(roll) - c * vel.y());
  };
  auto f = [&](double tau, const Vec2d&, const Vec2d& vel) { return Deriv{vel, accel(tau, vel)}; };

  const Vec2d& p = state.ball_pos;
  const Vec2d& v = state.ball_vel;
  const Deriv k1 = f(0.0, p, v);
  const Deriv k2 = f(0.5 * dt, p + 0.5 * dt * k1.dpos, v + 0.5 * dt * k1.dvel);
  const Deriv k3 = f(0.5 * dt, p + 0.5 * dt * k2.dpos, v + 0.5 * dt * k2.dvel);
  const Deriv k4 = f(dt, p + dt * k3.dpos, v + dt * k3.dvel);

  SimState next = state;
  next.ball_pos = p + dt / 6.0 * (k1.dpos + 2.0 * k2.dpos + 2.0 * k3.dpos + k4.dpos);
  next.ball_vel = v + dt / 6.0 * (k1.dvel + 2.0 * k2.dvel + 2.0 * k3.dvel + k4.dvel);
  next.plate.roll = slewed(state.plate.roll, commanded.roll, rate, dt);
  next.plate.pitch = slewed(state.plate.pitch, commanded.pitch, rate, dt);
  next.time = state.time + dt;
  next.ball_fell = state.ball_fell || next.ball_pos.cwiseAbs().maxCoeff() > params.plate_half_extent;
  return next;
}

SimState advance(const SimState& state, const PlateAngles& commanded, const PlantParams& params,
                 double duration) {
  const int substeps = std::max(1, static_cast<int>(std::ceil(duration / params.integrator_dt - 1e-9)));
  const double dt = duration / substeps;
  SimState s = state;
  for (int k = 0; k < substeps && !s.ball_fell; ++k) s = step(s, commanded, params, dt);
  return s;
}

double oscillation_band(const Trajectory& traj, double window) {
  if (traj.samples.empty() || traj.duration() < window)
    throw InsufficientData("trajectory shorter than the averaging window");
  const double start = traj.samples.back().time - window;
  double sum = 0.0;
  int n = 0;
  for (const auto& s : traj.samples) {
    if (s.time + 1e-9 < start) continue;
    sum += s.radius();
    ++n;
  }
  return sum / n;
}

std::optional<double> stabilization_time(const Trajectory& traj, double band, double hold) {
  if (!(band > 0) || !(hold > 0)) throw ContractViolation("band and hold must be positive");
  std::optional<double> entered;
  for (const auto& s : traj.samples) {
    if (s.radius() < band) {
      if (!entered) entered = s.time;
      if (s.time - *entered >= hold - 1e-9) return *entered;
    } else {
      entered.reset();
    }
  }
  return std::nullopt;
}

int divergence_episodes(const Trajectory& traj, double inner, double outer) {
  int episodes = 0;
  bool armed = false;
  for (const auto& s : traj.samples) {
    const double r = s.radius();
    if (r < inner) {
      armed = true;
    } else if (armed && r > outer) {
      ++episodes;
      armed = false;
    }
  }
  return episodes;
}

}  // namespace stewart
