#include "stewart/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

namespace stewart {

GravityRow<double> leg_gravity_row(double gravity_mm_s2) {
  GravityRow<double> g;
  g << 0, -gravity_mm_s2, 0, 0;
  return g;
}

Pose<double> plate_pose(const PlatformGeometryd& geom, const PlateAngles& angles) {
  Pose<double> p = geom.neutral_pose();
  p.roll = deg2rad(angles.roll);
  p.pitch = deg2rad(angles.pitch);
  return p;
}

Vec2d leg_joint_angles(const Pose<double>& pose, const PlatformGeometryd& geom, int leg) {
  const double alpha = servo_angle(pose, geom, leg);
  const Vec3d rod = platform_joint_world(pose, geom, leg) - horn_tip(geom, leg, alpha);
  const double lambda = geom.horn_axis_heading[leg];
  const double along = std::cos(lambda) * rod.x() + std::sin(lambda) * rod.y();
  return {alpha, std::atan2(rod.z(), along) - alpha};
}

namespace {

double clamp_to(const Variable& v, double x) { return std::clamp(x, v.lo, v.hi); }

// Band over the final window, or over whatever exists when the run ended early.
double band_of(const Trajectory& traj, double window) {
  if (traj.samples.size() < 2) return traj.samples.empty() ? 0.0 : traj.samples.back().radius();
  return oscillation_band(traj, std::min(window, traj.duration()));
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult out;
  RunReport& rep = out.report;
  rep.controller = cfg.controller.name;
  rep.experiment = cfg.name;
  rep.servo_min.fill(std::numeric_limits<double>::infinity());
  rep.servo_max.fill(-std::numeric_limits<double>::infinity());

  const FuzzyControllerSpec& spec = cfg.controller;
  const Variable& roll_universe = spec.outputs[0];
  const Variable& pitch_universe = spec.single_axis() ? spec.outputs[0] : spec.outputs[1];
  const PlantParams& plant = cfg.plant;
  const double T = plant.sensor_period;
  const long steps = std::lround(cfg.duration / T);

  const LegChain<double> chain = leg_chain(cfg.geometry, cfg.legs);
  const GravityRow<double> gravity = leg_gravity_row(plant.gravity);
  std::array<std::vector<Vec2d>, kLegCount> q_hist;  // last three joint samples per leg

  SceneConfig scene = cfg.scene;
  scene.platform_half_extent = plant.plate_half_extent;
  scene.seed = cfg.seed;
  Calibration cal = nominal_calibration(scene);
  const double expected_area =
      kPi * std::pow(scene.ball_radius / scene.mm_per_pixel, 2);

  SimState s;
  s.ball_pos = cfg.initial_position;
  s.ball_vel = cfg.initial_velocity;
  Vec2d prev = Vec2d::Zero();
  long prev_k = -1;
  PlateAngles cmd;

  for (long k = 0; k <= steps; ++k) {
    if (!s.ball_fell) s.time = k * T;
    out.trajectory.samples.push_back(s);
    if (s.ball_fell) break;

    // Sense.
    std::optional<Vec2d> pos;
    if (cfg.sensor == SensorMode::Direct) {
      pos = s.ball_pos;
    } else {
      const Image frame = render_frame(s, scene, static_cast<std::uint64_t>(k));
      if (k == 0) {
        try {
          cal = locate_platform(frame, cfg.pipeline, plant.plate_half_extent);
        } catch (const std::exception&) {
          cal = nominal_calibration(scene);
        }
      }
      try {
        pos = locate_ball(frame, cfg.pipeline, cal, expected_area).position_mm;
      } catch (const BallNotFound&) {
        ++rep.dropped_frames;
      }
    }

    // Decide; a dropped frame holds the last command.
    if (pos) {
      ControllerInputs in;
      in.x = pos->x();
      in.y = pos->y();
      in.radial_error = pos->norm();
      if (prev_k >= 0) {
        const double dt = (k - prev_k) * T;
        in.dx = (pos->x() - prev.x()) / dt;
        in.dy = (pos->y() - prev.y()) / dt;
      }
      prev = *pos;
      prev_k = k;
      const TiltCommand c = controller_step(spec, in, cfg.gains);
      cmd = PlateAngles{-clamp_to(pitch_universe, c.pitch), clamp_to(roll_universe, c.roll)};
    }
    out.commands.push_back(cmd);

    // Actuators: servo angles at the commanded pose.
    try {
      const Pose<double> pose = plate_pose(cfg.geometry, cmd);
      for (int leg = 0; leg < kLegCount; ++leg) {
        const double alpha = servo_angle(pose, cfg.geometry, leg);
        rep.servo_min[leg] = std::min(rep.servo_min[leg], rad2deg(alpha));
        rep.servo_max[leg] = std::max(rep.servo_max[leg], rad2deg(alpha));
        if (k % 100 == 0) {
          ++rep.geometry_checks;
          const double len = (horn_tip(cfg.geometry, leg, alpha) -
                              platform_joint_world(pose, cfg.geometry, leg))
                                 .norm();
          if (std::abs(len - cfg.geometry.rod_length) > 1e-9 * cfg.geometry.rod_length)
            ++rep.geometry_check_failures;
        }
      }
    } catch (const UnreachablePose&) {
      ++rep.unreachable_samples;
    } catch (const DegenerateGeometry&) {
      ++rep.unreachable_samples;
    }

    // Torque follows the plate's actual motion.
    try {
      const Pose<double> actual = plate_pose(cfg.geometry, s.plate);
      for (int leg = 0; leg < kLegCount; ++leg) {
        auto& h = q_hist[leg];
        h.push_back(leg_joint_angles(actual, cfg.geometry, leg));
        if (h.size() > 3) h.erase(h.begin());
        LegChainState<double> st;
        st.q = h.back();
        if (h.size() >= 2) st.qd = (h[h.size() - 1] - h[h.size() - 2]) / T;
        if (h.size() == 3) st.qdd = (h[2] - 2 * h[1] + h[0]) / (T * T);
        const double tau = torque_to_newton_mm(joint_torque(chain, st, gravity)(0));
        rep.peak_torque[leg] = std::max(rep.peak_torque[leg], std::abs(tau));
      }
    } catch (const UnreachablePose&) {
      for (auto& h : q_hist) h.clear();
    } catch (const DegenerateGeometry&) {
      for (auto& h : q_hist) h.clear();
    }

    s = advance(s, cmd, plant, T);
  }

  const Trajectory& traj = out.trajectory;
  for (int leg = 0; leg < kLegCount; ++leg)
    if (rep.servo_min[leg] > rep.servo_max[leg]) rep.servo_min[leg] = rep.servo_max[leg] = 0;
  rep.samples = static_cast<long>(traj.samples.size());
  rep.simulated = traj.duration();
  rep.ball_fell = traj.samples.back().ball_fell;
  rep.band = band_of(traj, cfg.band_window);
  rep.stabilization = stabilization_time(traj, cfg.stabilization_band, cfg.stabilization_hold);
  rep.divergence_episodes = divergence_episodes(traj, 20, 60);
  return out;
}

std::vector<ComparisonRow> compare_controllers(const std::vector<ExperimentConfig>& configs) {
  std::vector<std::future<RunReport>> jobs;
  for (const auto& cfg : configs)
    jobs.push_back(std::async(std::launch::async, [&cfg] { return run_experiment(cfg).report; }));
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    ComparisonRow row;
    row.name = configs[i].name;
    try {
      row.report = jobs[i].get();
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.report.has_value() != b.report.has_value()) return a.report.has_value();
    if (!a.report) return false;
    const auto& ra = *a.report;
    const auto& rb = *b.report;
    if (ra.ball_fell != rb.ball_fell) return !ra.ball_fell;
    if (ra.stabilization.has_value() != rb.stabilization.has_value())
      return ra.stabilization.has_value();
    if (ra.stabilization && *ra.stabilization != *rb.stabilization)
      return *ra.stabilization < *rb.stabilization;
    return ra.band < rb.band;
  });
  return rows;
}

// ---------------------------------------------------------------- CSV

namespace {

void put(std::string& line, double v) {
  char buf[32];
  line.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

}  // namespace

void write_csv(const Trajectory& traj, std::ostream& out) {
  out << "time_s,x_mm,y_mm,vx,vy,roll_deg,pitch_deg,ball_fell\n";
  std::string line;
  for (const auto& s : traj.samples) {
    line.clear();
    for (double v : {s.time, s.ball_pos.x(), s.ball_pos.y(), s.ball_vel.x(), s.ball_vel.y(),
                     s.plate.roll, s.plate.pitch}) {
      put(line, v);
      line.push_back(',');
    }
    line += s.ball_fell ? "1\n" : "0\n";
    out << line;
  }
}

void write_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(traj, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Trajectory read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "time_s,x_mm,y_mm,vx,vy,roll_deg,pitch_deg,ball_fell")
    throw std::runtime_error(path.string() + ": unexpected trajectory header");
  Trajectory traj;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_list(line, ',');
    if (f.size() != 8) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    const std::string where = path.string() + ":" + std::to_string(line_no);
    SimState s;
    s.time = parse_number(f[0], where);
    s.ball_pos = Vec2d(parse_number(f[1], where), parse_number(f[2], where));
    s.ball_vel = Vec2d(parse_number(f[3], where), parse_number(f[4], where));
    s.plate = {parse_number(f[5], where), parse_number(f[6], where)};
    s.ball_fell = f[7] == "1";
    traj.samples.push_back(s);
  }
  return traj;
}

// ---------------------------------------------------------------- reports

std::string report_csv_header() {
  std::string h = "experiment,controller,band_mm,stabilization_s,ball_fell,simulated_s,episodes,"
                  "unreachable,dropped_frames,geometry_failures";
  for (int i = 1; i <= kLegCount; ++i) h += ",servo" + std::to_string(i) + "_min_deg";
  for (int i = 1; i <= kLegCount; ++i) h += ",servo" + std::to_string(i) + "_max_deg";
  for (int i = 1; i <= kLegCount; ++i) h += ",torque" + std::to_string(i) + "_Nmm";
  return h;
}

std::string report_csv_row(const RunReport& r) {
  std::string row = r.experiment + "," + r.controller + ",";
  put(row, r.band);
  row += ",";
  row += r.stabilization ? format_number(*r.stabilization) : "NotStabilized";
  row += r.ball_fell ? ",1," : ",0,";
  put(row, r.simulated);
  row += "," + std::to_string(r.divergence_episodes) + "," + std::to_string(r.unreachable_samples) + "," +
         std::to_string(r.dropped_frames) + "," + std::to_string(r.geometry_check_failures);
  for (const auto* arr : {&r.servo_min, &r.servo_max, &r.peak_torque})
    for (double v : *arr) {
      row += ",";
      put(row, v);
    }
  return row;
}

std::string report_text(const RunReport& r) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "experiment      " << r.experiment << "\n"
    << "controller      " << r.controller << "\n"
    << "simulated       " << r.simulated << " s (" << r.samples << " samples)"
    << (r.ball_fell ? ", BALL FELL" : "") << "\n"
    << "band            " << r.band << " mm\n"
    << "stabilization   ";
  if (r.stabilization)
    o << *r.stabilization << " s\n";
  else
    o << "NotStabilized\n";
  o << "episodes        " << r.divergence_episodes << "\n"
    << "unreachable     " << r.unreachable_samples << "\n"
    << "dropped frames  " << r.dropped_frames << "\n"
    << "geometry checks " << r.geometry_checks << " (" << r.geometry_check_failures << " failed)\n"
    << "leg   servo min   servo max   peak torque\n";
  for (int i = 0; i < kLegCount; ++i)
    o << std::setw(3) << i + 1 << std::setw(10) << r.servo_min[i] << " deg" << std::setw(8)
      << r.servo_max[i] << " deg" << std::setw(9) << r.peak_torque[i] << " N*mm\n";
  return o.str();
}

void write_report(const RunReport& r, const std::filesystem::path& path) {
  auto csv_path = path;
  csv_path += ".csv";
  auto txt_path = path;
  txt_path += ".txt";
  std::ofstream csv(csv_path), txt(txt_path);
  if (!csv || !txt) throw std::runtime_error("cannot write report " + path.string());
  csv << report_csv_header() << "\n" << report_csv_row(r) << "\n";
  txt << report_text(r);
}

void write_comparison(const std::vector<ComparisonRow>& rows, std::ostream& csv, std::ostream& text) {
  const std::string header = report_csv_header();
  csv << "rank," << header << ",failure\n";
  text << "rank  experiment            controller   band mm  stabilization    episodes\n";
  int rank = 0;
  for (const auto& row : rows) {
    ++rank;
    if (row.report) {
      const RunReport& r = *row.report;
      csv << rank << "," << report_csv_row(r) << ",\n";
      std::ostringstream stab;
      stab << std::fixed << std::setprecision(2);
      if (r.ball_fell)
        stab << "ball fell";
      else if (r.stabilization)
        stab << *r.stabilization << " s";
      else
        stab << "NotStabilized";
      text << std::left << std::setw(6) << rank << std::setw(22) << r.experiment << std::setw(13)
           << r.controller << std::right << std::fixed << std::setprecision(2) << std::setw(7)
           << r.band << "  " << std::left << std::setw(17) << stab.str() << std::right
           << r.divergence_episodes << "\n";
    } else {
      const auto fields = std::count(header.begin(), header.end(), ',') + 1;
      csv << rank << "," << row.name << std::string(fields, ',') << '"' << row.failure << "\"\n";
      text << std::left << std::setw(6) << rank << std::setw(22) << row.name << "FAILED: " << row.failure
           << std::right << "\n";
    }
  }
}

DampingCalibration calibrate_damping(ExperimentConfig cfg, double target, double lo, double hi,
                                     double tolerance, int max_iterations) {
  DampingCalibration best;
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    cfg.plant.viscous_damping = mid;
    const RunReport r = run_experiment(cfg).report;
    best = {mid, r.stabilization, it + 1};
    if (r.stabilization && std::abs(*r.stabilization - target) <= tolerance) break;
    // Not settling, or settling late: more damping.
    if (!r.stabilization || *r.stabilization > target)
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

}  // namespace stewart
