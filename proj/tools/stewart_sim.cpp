// stewart-sim: command-line front end for the ball-on-plate simulator.

#include "stewart/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>

using namespace stewart;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBallFell = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> sensor;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "Random seed (overrides the config)");
    app->add_option("--out-dir", out_dir, "Output directory (overrides the config)");
    app->add_option("--sensor", sensor, "Sensor mode (overrides the config)")
        ->check(CLI::IsMember({"direct", "vision"}));
  }

  void apply(ExperimentConfig& cfg) const {
    if (seed) cfg.seed = cfg.scene.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (sensor) cfg.sensor = *sensor_mode_from_string(*sensor);
  }
};

FuzzyControllerSpec controller_by_name(const std::string& ref, ControllerGains* gains = nullptr) {
  if (const auto kind = controller_kind_from_string(ref)) {
    if (gains) *gains = shipped_gains(*kind);
    return shipped_controller(*kind);
  }
  const LoadedController c = load_controller_file(ref);
  if (gains) *gains = c.gains;
  return c.spec;
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

int cmd_run(const std::string& path, const Overrides& ov, bool quiet) {
  ExperimentConfig cfg = load_config(path);
  ov.apply(cfg);
  const RunResult res = run_experiment(cfg);
  const auto dir = prepare_out_dir(cfg);
  write_csv(res.trajectory, dir / (cfg.name + ".csv"));
  write_report(res.report, dir / (cfg.name + "_report"));
  if (!quiet) std::cout << report_text(res.report);
  return res.report.ball_fell ? kExitBallFell : kExitOk;
}

int cmd_compare(const std::vector<std::string>& paths, const Overrides& ov) {
  std::vector<ExperimentConfig> configs;
  for (const auto& p : paths) {
    configs.push_back(load_config(p));
    ov.apply(configs.back());
  }
  for (std::size_t i = 1; i < configs.size(); ++i)
    if (!(configs[i].plant == configs[0].plant))
      throw ConfigError("compare needs configs that share plant parameters; " + paths[i] +
                        " differs from " + paths[0]);
  const auto rows = compare_controllers(configs);
  const auto dir = prepare_out_dir(configs.front());
  std::ofstream csv(dir / "comparison.csv"), txt(dir / "comparison.txt");
  if (!csv || !txt) throw std::runtime_error("cannot write comparison files in " + dir.string());
  write_comparison(rows, csv, txt);
  std::ostringstream unused;
  write_comparison(rows, unused, std::cout);
  for (const auto& r : rows)
    if (r.report) std::cout << "\n" << report_text(*r.report);
  bool fell = false;
  for (const auto& r : rows) fell = fell || (r.report && r.report->ball_fell);
  return fell ? kExitBallFell : kExitOk;
}

std::string rule_text(const FuzzyControllerSpec& spec, const Rule& rule) {
  std::string s;
  for (std::size_t i = 0; i < rule.antecedent.size(); ++i)
    if (rule.antecedent[i]) s += spec.inputs[i].name + ":" + spec.inputs[i].terms[*rule.antecedent[i]].label + " ";
  s += "->";
  for (std::size_t i = 0; i < rule.consequent.size(); ++i)
    if (rule.consequent[i])
      s += " " + spec.outputs[i].name + ":" + spec.outputs[i].terms[*rule.consequent[i]].label;
  return s;
}

int cmd_fuzzy_eval(const std::string& ref, const std::vector<double>& values, bool all_rules,
                   int surface, const std::string& surface_out) {
  ControllerGains gains;
  const FuzzyControllerSpec spec = controller_by_name(ref, &gains);

  if (surface > 0) {
    // Grid through controller_step: (x, dx) for single-axis specs, (x, y) otherwise.
    std::ofstream file;
    if (!surface_out.empty()) {
      file.open(surface_out);
      if (!file) throw std::runtime_error("cannot write " + surface_out);
    }
    std::ostream& out = surface_out.empty() ? std::cout : file;
    const Variable& a = spec.inputs[0];
    const Variable& b = spec.inputs[1];
    const bool single = spec.single_axis();
    out << (single ? "x_mm,dx_mm_s,roll_deg\n" : "x_mm,y_mm,roll_deg,pitch_deg\n");
    for (int i = 0; i < surface; ++i)
      for (int j = 0; j < surface; ++j) {
        const double u = a.lo + (a.hi - a.lo) * i / (surface - 1);
        const double v = b.lo + (b.hi - b.lo) * j / (surface - 1);
        ControllerInputs in;
        in.x = u;
        if (single) {
          in.dx = v;
        } else {
          in.y = v;
          in.radial_error = std::hypot(u, v);
        }
        const TiltCommand c = controller_step(spec, in, gains);
        out << format_number(u) << "," << format_number(v) << "," << format_number(c.roll);
        if (!single) out << "," << format_number(c.pitch);
        out << "\n";
      }
    return kExitOk;
  }

  if (values.size() != spec.inputs.size()) {
    std::string names;
    for (const auto& v : spec.inputs) names += " " + v.name;
    throw ConfigError(spec.name + " takes " + std::to_string(spec.inputs.size()) +
                      " input values:" + names);
  }
  const InferenceResult res = infer(spec, values);
  std::cout << "controller " << spec.name << "\n";
  for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
    const Variable& v = spec.inputs[i];
    std::cout << "input " << v.name << " = " << format_number(values[i]);
    if (v.clamp(values[i]) != values[i]) std::cout << " (clamped to " << format_number(v.clamp(values[i])) << ")";
    std::cout << "\n";
    for (const auto& t : v.terms) {
      const double mu = membership_degree(t, v.clamp(values[i]));
      if (mu > 0) std::cout << "  " << t.label << " " << format_number(mu) << "\n";
    }
  }
  std::cout << "rules\n";
  for (std::size_t r = 0; r < spec.rules.size(); ++r)
    if (all_rules || res.firing[r] > 0)
      std::cout << "  " << std::setw(3) << r + 1 << "  " << std::fixed << std::setprecision(6)
                << res.firing[r] << std::defaultfloat << "  " << rule_text(spec, spec.rules[r]) << "\n";
  for (std::size_t o = 0; o < spec.outputs.size(); ++o) {
    const Variable& v = spec.outputs[o];
    const PiecewiseLinear& agg = res.aggregates[o];
    std::cout << "aggregate " << v.name << "\n";
    for (std::size_t i = 0; i < agg.xs.size(); ++i)
      std::cout << "  " << format_number(agg.xs[i]) << " " << format_number(agg.ys[i]) << "\n";
    const Defuzzified d = defuzzify_centroid(agg, v.lo, v.hi);
    std::cout << "output " << v.name << " = " << format_number(d.value)
              << (d.degenerate ? " (no rule fired; universe midpoint)" : "") << "\n";
  }
  return kExitOk;
}

int cmd_vision_run(const std::string& dir, const std::string& config_path, const std::string& render,
                   const std::string& out_path, const Overrides& ov) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  ov.apply(cfg);
  SceneConfig scene = cfg.scene;
  scene.platform_half_extent = cfg.plant.plate_half_extent;
  scene.seed = cfg.seed;

  std::filesystem::create_directories(dir);
  if (!render.empty()) {
    ExperimentConfig run_cfg = load_config(render);
    ov.apply(run_cfg);
    run_cfg.sensor = SensorMode::Direct;
    const RunResult res = run_experiment(run_cfg);
    SceneConfig rs = run_cfg.scene;
    rs.platform_half_extent = run_cfg.plant.plate_half_extent;
    rs.seed = run_cfg.seed;
    for (std::size_t k = 0; k < res.trajectory.samples.size(); ++k) {
      std::ostringstream name;
      name << "frame_" << std::setw(5) << std::setfill('0') << k << ".ppm";
      write_pnm(render_frame(res.trajectory.samples[k], rs, k), std::filesystem::path(dir) / name.str());
    }
    scene = rs;
    cfg.pipeline = run_cfg.pipeline;
  }

  std::vector<std::filesystem::path> frames;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".ppm") frames.push_back(e.path());
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) throw std::runtime_error("no .ppm frames in " + dir);

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "frame,file,found,x_px,y_px,x_mm,y_mm,pixels,confidence\n";
  Calibration cal = nominal_calibration(scene);
  const double expected = kPi * std::pow(scene.ball_radius / scene.mm_per_pixel, 2);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Image img = read_pnm(frames[k]);
    if (k == 0) cal = locate_platform(img, cfg.pipeline, scene.platform_half_extent);
    out << k << "," << frames[k].filename().string() << ",";
    try {
      const BallFix f = locate_ball(img, cfg.pipeline, cal, expected);
      out << "1," << format_number(f.position_px.x()) << "," << format_number(f.position_px.y()) << ","
          << format_number(f.position_mm.x()) << "," << format_number(f.position_mm.y()) << ","
          << f.pixel_count << "," << format_number(f.confidence) << "\n";
    } catch (const BallNotFound&) {
      out << "0,,,,,0,0\n";
    }
  }
  return kExitOk;
}

int cmd_torque_report(const std::string& config_path, const std::string& traj_path, double amplitude,
                      double frequency, double duration, double dt) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  std::vector<std::pair<double, PlateAngles>> poses;
  if (!traj_path.empty()) {
    for (const auto& s : read_csv(traj_path).samples) poses.push_back({s.time, s.plate});
  } else {
    if (!(dt > 0) || !(duration > 0)) throw ConfigError("--dt and --duration must be positive");
    const long n = std::lround(duration / dt);
    for (long k = 0; k <= n; ++k) {
      const double t = k * dt;
      const double w = 2 * kPi * frequency * t;
      poses.push_back({t, PlateAngles{amplitude * std::sin(w), amplitude * std::cos(w) - amplitude}});
    }
  }
  if (poses.size() < 3) throw std::runtime_error("torque report needs at least three poses");

  const LegChain<double> chain = leg_chain(cfg.geometry, cfg.legs);
  const GravityRow<double> g = leg_gravity_row(cfg.plant.gravity);
  std::vector<std::array<Vec2d, kLegCount>> q(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const Pose<double> pose = plate_pose(cfg.geometry, poses[k].second);
    for (int leg = 0; leg < kLegCount; ++leg) q[k][leg] = leg_joint_angles(pose, cfg.geometry, leg);
  }

  std::cout << "time_s,roll_deg,pitch_deg";
  for (int leg = 1; leg <= kLegCount; ++leg)
    std::cout << ",alpha" << leg << "_deg,tau" << leg << "_horn_Nmm,tau" << leg << "_rod_Nmm";
  std::cout << "\n";
  std::array<double, kLegCount> peak{};
  for (std::size_t k = 1; k + 1 < poses.size(); ++k) {
    const double h0 = poses[k].first - poses[k - 1].first;
    const double h1 = poses[k + 1].first - poses[k].first;
    std::cout << format_number(poses[k].first) << "," << format_number(poses[k].second.roll) << ","
              << format_number(poses[k].second.pitch);
    for (int leg = 0; leg < kLegCount; ++leg) {
      LegChainState<double> st;
      st.q = q[k][leg];
      st.qd = (q[k + 1][leg] - q[k - 1][leg]) / (h0 + h1);
      st.qdd = 2 * ((q[k + 1][leg] - q[k][leg]) / h1 - (q[k][leg] - q[k - 1][leg]) / h0) / (h0 + h1);
      const Vec2d tau = joint_torque(chain, st, g);
      peak[leg] = std::max(peak[leg], std::abs(torque_to_newton_mm(tau(0))));
      std::cout << "," << format_number(rad2deg(st.q(0))) << "," << format_number(torque_to_newton_mm(tau(0)))
                << "," << format_number(torque_to_newton_mm(tau(1)));
    }
    std::cout << "\n";
  }
  std::cerr << "peak horn torque (N*mm):";
  for (double p : peak) std::cerr << " " << std::fixed << std::setprecision(3) << p;
  std::cerr << "\n";
  return kExitOk;
}

int cmd_calibrate(const std::string& path, double target, double lo, double hi) {
  ExperimentConfig cfg = load_config(path);
  cfg.sensor = SensorMode::Direct;
  const DampingCalibration c = calibrate_damping(cfg, target, lo, hi);
  std::cout << "viscous_damping = " << format_number(c.damping) << "\n"
            << "stabilization   = "
            << (c.stabilization ? format_number(*c.stabilization) + " s" : std::string("NotStabilized"))
            << "\niterations      = " << c.iterations << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stewart platform ball-balancing simulator"};
  app.require_subcommand(1);

  Overrides ov;
  bool quiet = false;
  std::string run_path;
  auto* run = app.add_subcommand("run", "Run one experiment; writes trajectory CSV and report");
  run->add_option("config", run_path, "Experiment config")->required();
  run->add_flag("-q,--quiet", quiet, "Do not print the report");
  ov.add_to(run);

  std::vector<std::string> compare_paths;
  auto* compare = app.add_subcommand("compare", "Run several experiments and rank them");
  compare->add_option("configs", compare_paths, "Experiment configs")->required()->expected(2, -1);
  ov.add_to(compare);

  std::string fe_controller = "FuzzyPD", fe_surface_out;
  std::vector<double> fe_values;
  bool fe_all = false;
  int fe_surface = 0;
  auto* fe = app.add_subcommand("fuzzy-eval", "Evaluate a controller at one input tuple");
  fe->add_option("controller", fe_controller, "Fuzzy1|Fuzzy2|Fuzzy3|FuzzyPD or a controller file")->required();
  fe->add_option("values", fe_values, "Crisp input values in declaration order");
  fe->add_flag("--all", fe_all, "List rules that did not fire too");
  fe->add_option("--surface", fe_surface, "Sweep an N x N control-surface grid instead")->check(CLI::Range(2, 1000));
  fe->add_option("--out", fe_surface_out, "Surface CSV path (default stdout)");

  std::string vr_dir, vr_config, vr_render, vr_out;
  auto* vr = app.add_subcommand("vision-run", "Locate the ball in a directory of PPM frames");
  vr->add_option("frames", vr_dir, "Frame directory")->required();
  vr->add_option("--config", vr_config, "Experiment config supplying scene and pipeline");
  vr->add_option("--render", vr_render, "First render the frames of this experiment into the directory");
  vr->add_option("--out", vr_out, "Centroid CSV path (default stdout)");
  ov.add_to(vr);

  std::string tr_config, tr_traj;
  double tr_amp = 4, tr_freq = 0.5, tr_dur = 4, tr_dt = 1.0 / 30;
  auto* tr = app.add_subcommand("torque-report", "Per-leg joint torque CSV over a commanded tilt trajectory");
  tr->add_option("--config", tr_config, "Experiment config supplying geometry and leg masses");
  tr->add_option("--trajectory", tr_traj, "Trajectory CSV whose roll/pitch columns are replayed");
  tr->add_option("--amplitude", tr_amp, "Circular tilt amplitude, deg")->capture_default_str();
  tr->add_option("--frequency", tr_freq, "Circular tilt frequency, Hz")->capture_default_str();
  tr->add_option("--duration", tr_dur, "s")->capture_default_str();
  tr->add_option("--dt", tr_dt, "s")->capture_default_str();

  std::string cal_path;
  double cal_target = 40, cal_lo = 0.01, cal_hi = 0.5;
  auto* cal = app.add_subcommand("calibrate", "Bisect plant damping for a target stabilization time");
  cal->add_option("config", cal_path, "Experiment config (normally FuzzyPD)")->required();
  cal->add_option("--target", cal_target, "Target stabilization time, s")->capture_default_str();
  cal->add_option("--lo", cal_lo, "Lower damping bound, 1/s")->capture_default_str();
  cal->add_option("--hi", cal_hi, "Upper damping bound, 1/s")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_path, ov, quiet);
    if (*compare) return cmd_compare(compare_paths, ov);
    if (*fe) return cmd_fuzzy_eval(fe_controller, fe_values, fe_all, fe_surface, fe_surface_out);
    if (*vr) return cmd_vision_run(vr_dir, vr_config, vr_render, vr_out, ov);
    if (*tr) return cmd_torque_report(tr_config, tr_traj, tr_amp, tr_freq, tr_dur, tr_dt);
    if (*cal) return cmd_calibrate(cal_path, cal_target, cal_lo, cal_hi);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
