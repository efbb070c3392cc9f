#pragma once

// Closed-loop experiment runner, comparison tables and output files.

#include "stewart/config.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stewart {

/// Gravity row for leg chains: chain frame y points up.
GravityRow<double> leg_gravity_row(double gravity_mm_s2 = 9810.0);

/// Horn angle and rod-to-horn angle of one leg at `pose` (radians).
/// The rod is projected into the horn's vertical plane.
Vec2d leg_joint_angles(const Pose<double>& pose, const PlatformGeometryd& geom, int leg);

/// Plate pose for a tilt at the configured home height.
Pose<double> plate_pose(const PlatformGeometryd& geom, const PlateAngles& angles);

struct RunReport {
  std::string controller;
  std::string experiment;
  double band = 0;                          // mm
  std::optional<double> stabilization;      // s; nullopt = not stabilized
  std::array<double, kLegCount> servo_min{};  // deg
  std::array<double, kLegCount> servo_max{};  // deg
  std::array<double, kLegCount> peak_torque{};  // N*mm, horn joint
  bool ball_fell = false;
  double simulated = 0;  // s
  int divergence_episodes = 0;
  long samples = 0;
  long unreachable_samples = 0;
  long dropped_frames = 0;
  long geometry_checks = 0;
  long geometry_check_failures = 0;
};

struct RunResult {
  RunReport report;
  Trajectory trajectory;
  std::vector<PlateAngles> commands;  // one per sample
};

RunResult run_experiment(const ExperimentConfig& cfg);

struct ComparisonRow {
  std::string name;
  std::optional<RunReport> report;
  std::string failure;  // set when the run threw
};

/// Runs every config (in parallel) and ranks: stabilized runs first by
/// stabilization time, then the rest by band. Failed runs go last.
std::vector<ComparisonRow> compare_controllers(const std::vector<ExperimentConfig>& configs);

void write_csv(const Trajectory& traj, const std::filesystem::path& path);
void write_csv(const Trajectory& traj, std::ostream& out);
Trajectory read_csv(const std::filesystem::path& path);

std::string report_csv_header();
std::string report_csv_row(const RunReport& r);
std::string report_text(const RunReport& r);
/// `<path>.csv` gets the header and row, `<path>.txt` the formatted text.
void write_report(const RunReport& r, const std::filesystem::path& path);

void write_comparison(const std::vector<ComparisonRow>& rows, std::ostream& csv, std::ostream& text);

struct DampingCalibration {
  double damping = 0;
  std::optional<double> stabilization;
  int iterations = 0;
};

/// Bisects viscous damping until the run stabilizes at `target` seconds
/// (within `tolerance`). Larger damping settles sooner.
DampingCalibration calibrate_damping(ExperimentConfig cfg, double target, double lo, double hi,
                                     double tolerance = 0.25, int max_iterations = 30);

}  // namespace stewart
