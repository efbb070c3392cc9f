// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include "oracles.hpp"

#include "stewart/config.hpp"
#include "stewart/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

using namespace stewart;
namespace fs = std::filesystem;

namespace {

const fs::path kConfig = fs::path(STEWART_SOURCE_DIR) / "config";

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::printf("%s  %-34s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome kinematics() {
  const PlatformGeometryd g = default_geometry();
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> ang(-deg2rad(10), deg2rad(10)), lat(-15, 15);
  Stopwatch sw;
  double worst = 0;
  int poses = 0;
  while (poses < 1000) {
    Posed p;
    p.translation = Vec3d(lat(rng), lat(rng), g.home_height + lat(rng));
    p.roll = ang(rng);
    p.pitch = ang(rng);
    p.yaw = ang(rng);
    const auto rep = pose_reachable(p, g);
    if (!rep.reachable()) continue;
    for (int leg = 0; leg < kLegCount; ++leg) {
      const double r = (horn_tip(g, leg, *rep.angles[leg]) - platform_joint_world(p, g, leg)).norm() - g.rod_length;
      worst = std::max(worst, std::abs(r));
    }
    ++poses;
  }
  const double t = sw.seconds();
  return {worst <= 1e-9 * g.rod_length && t < 1.0,
          fmt("1000 poses, max residual %.2e e, %.3f s", worst / g.rod_length, t)};
}

Outcome dynamics() {
  std::mt19937 rng(202);
  Stopwatch sw;
  double worst_rel = 0, worst_asym = 0, min_eig = 1e300;
  for (int n = 0; n < 200; ++n) {
    const auto chain = oracle::random_chain(rng);
    const auto s = oracle::random_state(rng);
    const auto g = oracle::gravity_row(rng);
    const Vec2d tau = joint_torque(chain, s, g);
    const Vec2d ref = oracle::euler_lagrange_torque(chain, s, g);
    worst_rel = std::max(worst_rel, (tau - ref).norm() / ref.norm());
    const Eigen::Matrix2d d = kinetic_matrix(chain, s);
    worst_asym = std::max(worst_asym, (d - d.transpose()).cwiseAbs().maxCoeff() / d.cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(d).eigenvalues().minCoeff());
  }
  const double t = sw.seconds();
  return {worst_rel <= 1e-4 && worst_asym <= 1e-12 && min_eig >= -1e-9 && t < 10.0,
          fmt("200 states, max rel err %.2e, D asym %.1e, min eig %.3g, %.2f s", worst_rel, worst_asym, min_eig, t)};
}

Outcome energy() {
  const LegChain<double> chain{uniform_rod_link(40.0, 0.02), uniform_rod_link(125.0, 0.015)};
  LegChainState<double> s;
  s.q = Vec2d(0.4, -0.9);
  s.qd = Vec2d(1.5, -2.0);
  const double swing = oracle::energy_drift(chain, s, leg_gravity_row(), 1e-4, 1.0);

  PlantParams p;
  p.viscous_damping = 0;
  p.plate_half_extent = 1e9;
  SimState ball;
  ball.ball_vel = Vec2d(37.5, -12.25);
  const double k0 = ball.ball_vel.squaredNorm();
  const double flat = std::abs(advance(ball, {}, p, 10.0).ball_vel.squaredNorm() - k0) / k0;
  return {swing <= 1e-4 && flat <= 1e-10, fmt("swing |dE|/E %.2e, flat plate |dKE|/KE %.2e", swing, flat)};
}

Outcome fuzzy_engine() {
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> u(0, 1);
  double worst_centroid = 0;
  for (int n = 0; n < 100; ++n) {
    PiecewiseLinear f;
    const int k = 3 + static_cast<int>(u(rng) * 10);
    for (int i = 0; i < k; ++i) f.xs.push_back(-5 + 10 * u(rng));
    std::sort(f.xs.begin(), f.xs.end());
    f.xs.front() = -5;
    f.xs.back() = 5;
    for (int i = 0; i < k; ++i) f.ys.push_back(u(rng));
    const int samples = 1000000;
    double area = 0, moment = 0;
    for (int i = 0; i < samples; ++i) {
      const double x = -5 + (i + 0.5) * 10.0 / samples;
      area += f(x);
      moment += x * f(x);
    }
    worst_centroid = std::max(worst_centroid, std::abs(defuzzify_centroid(f, -5, 5).value - moment / area) / 10);
  }

  double worst_zero = 0, worst_anti = 0;
  long outside = 0;
  std::uniform_real_distribution<double> pos(-300, 300), vel(-900, 900);
  for (auto kind : {ControllerKind::Fuzzy1, ControllerKind::Fuzzy2, ControllerKind::Fuzzy3, ControllerKind::FuzzyPD}) {
    const auto spec = shipped_controller(kind);
    const auto gains = shipped_gains(kind);
    const auto z = controller_step(spec, {}, gains);
    worst_zero = std::max({worst_zero, std::abs(z.roll), std::abs(z.pitch)});
    const double lo = spec.outputs[0].lo, hi = spec.outputs[0].hi;
    for (int n = 0; n < 10000; ++n) {
      ControllerInputs in{pos(rng), pos(rng), 0, vel(rng), vel(rng)};
      in.radial_error = std::hypot(in.x, in.y);
      const ControllerInputs neg{-in.x, -in.y, in.radial_error, -in.dx, -in.dy};
      const auto a = controller_step(spec, in, gains), b = controller_step(spec, neg, gains);
      worst_anti = std::max({worst_anti, std::abs(a.roll + b.roll), std::abs(a.pitch + b.pitch)});
      outside += a.roll < lo || a.roll > hi || a.pitch < lo || a.pitch > hi;
    }
  }
  return {worst_centroid <= 1e-6 && worst_zero <= 1e-9 && worst_anti <= 1e-9 && outside == 0,
          fmt("centroid err %.1e width, zero %.1e, antisym %.1e, %ld outside", worst_centroid, worst_zero,
              worst_anti, outside)};
}

Outcome vision_round_trip() {
  SceneConfig scene;
  const PipelineConfig pipe;
  const Calibration cal = nominal_calibration(scene);
  std::mt19937 rng(404);
  const double reach = scene.platform_half_extent - scene.ball_radius;
  std::uniform_real_distribution<double> u(-reach, reach);
  double worst_clean = 0, worst_noisy = 0;
  long missed = 0;
  Stopwatch sw;
  for (int n = 0; n < 1000; ++n) {
    const bool noisy = n >= 500;
    scene.noise_sigma = noisy ? 8.0 : 0.0;
    SimState s;
    s.ball_pos = Vec2d(u(rng), u(rng));
    try {
      const BallFix fix = locate_ball(render_frame(s, scene, n), pipe, cal);
      const double err = (fix.position_mm - s.ball_pos).norm() / scene.mm_per_pixel;
      (noisy ? worst_noisy : worst_clean) = std::max(noisy ? worst_noisy : worst_clean, err);
    } catch (const BallNotFound&) {
      ++missed;
    }
  }
  const double t = sw.seconds();
  return {worst_clean <= 1 && worst_noisy <= 2 && missed == 0 && t < 30,
          fmt("max err %.3f px clean, %.3f px noisy, %ld missed, %.1f s", worst_clean, worst_noisy, missed, t)};
}

std::vector<ExperimentConfig> reproduction_configs(SensorMode mode) {
  std::vector<ExperimentConfig> out;
  for (const char* f : {"fuzzy1.ini", "fuzzy2.ini", "fuzzy3.ini", "fuzzy_pd.ini"}) {
    ExperimentConfig cfg = load_config(kConfig / "experiments" / f);
    cfg.sensor = mode;
    out.push_back(cfg);
  }
  return out;
}

const RunReport& row(const std::vector<ComparisonRow>& rows, const std::string& controller) {
  for (const auto& r : rows)
    if (r.report && r.report->controller == controller) return *r.report;
  throw std::runtime_error("no comparison row for " + controller);
}

std::string stab(const RunReport& r) {
  return r.stabilization ? fmt("%.2f s", *r.stabilization) : std::string("NotStabilized");
}

// Sign changes of x after the ball first comes within 20 mm of the centre.
int centre_crossings(const Trajectory& t) {
  int crossings = 0;
  bool armed = false;
  double last = 0;
  for (const auto& s : t.samples) {
    armed = armed || s.radius() < 20;
    if (armed && last != 0 && (s.ball_pos.x() > 0) != (last > 0)) ++crossings;
    last = s.ball_pos.x();
  }
  return crossings;
}

void reproduction() {
  Stopwatch sw;
  const auto rows = compare_controllers(reproduction_configs(SensorMode::Direct));
  const double direct_time = sw.seconds();
  for (const auto& r : rows)
    if (!r.report) {
      report("reproduction", {false, r.name + " failed: " + r.failure});
      return;
    }
  const RunReport& pd = row(rows, "FuzzyPD");
  const RunReport& f1 = row(rows, "Fuzzy1");
  const RunReport& f2 = row(rows, "Fuzzy2");
  const RunReport& f3 = row(rows, "Fuzzy3");

  report("(a) FuzzyPD settles",
         {pd.stabilization && std::abs(*pd.stabilization - 40) <= 15 && pd.band <= 15 && !pd.ball_fell,
          fmt("stabilization %s, band %.2f mm", stab(pd).c_str(), pd.band)});
  report("(b) Fuzzy1 never settles",
         {!f1.stabilization && f1.band >= 40 && f1.band <= 120 && !f1.ball_fell,
          fmt("stabilization %s, band %.2f mm", stab(f1).c_str(), f1.band)});
  report("(c) Fuzzy2 never settles",
         {!f2.stabilization && f2.band >= 20 && f2.band <= 75 && !f2.ball_fell,
          fmt("stabilization %s, band %.2f mm", stab(f2).c_str(), f2.band)});

  ExperimentConfig f3cfg = reproduction_configs(SensorMode::Direct)[2];
  const int crossings = centre_crossings(run_experiment(f3cfg).trajectory);
  report("(d) Fuzzy3 recurrent divergence",
         {!f3.stabilization && f3.divergence_episodes >= 3 && crossings >= 3,
          fmt("stabilization %s, %d episodes, %d centre crossings", stab(f3).c_str(), f3.divergence_episodes,
              crossings)});
  report("(e) band ordering PD < F2 < F1",
         {pd.band < f2.band && f2.band < f1.band, fmt("%.2f < %.2f < %.2f mm", pd.band, f2.band, f1.band)});
  report("direct comparison runtime", {direct_time < 120, fmt("%.2f s (limit 120 s)", direct_time)});

  Stopwatch vw;
  const auto vrows = compare_controllers(reproduction_configs(SensorMode::Vision));
  const double vision_time = vw.seconds();
  std::string summary;
  bool ok = vision_time < 600;
  for (const auto& r : vrows) {
    if (!r.report) {
      ok = false;
      summary += r.name + " failed; ";
      continue;
    }
    summary += fmt("%s %.1f mm; ", r.report->controller.c_str(), r.report->band);
  }
  report("vision comparison runtime", {ok, fmt("%.1f s (limit 600 s); ", vision_time) + summary});
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "stewart_acceptance";
  fs::create_directories(dir);
  int configs = 0;
  std::string differing;
  for (const auto& entry : fs::directory_iterator(kConfig / "experiments")) {
    if (entry.path().extension() != ".ini") continue;
    const ExperimentConfig cfg = load_config(entry.path());
    const fs::path a = dir / (cfg.name + "_a.csv"), b = dir / (cfg.name + "_b.csv");
    write_csv(run_experiment(cfg).trajectory, a);
    write_csv(run_experiment(cfg).trajectory, b);
    if (file_bytes(a) != file_bytes(b)) differing += " " + cfg.name;
    ++configs;
  }
  return {configs > 0 && differing.empty(),
          fmt("%d shipped configs run twice", configs) + (differing.empty() ? "" : ", differ:" + differing)};
}

}  // namespace

int main() {
  report("kinematics round trip", kinematics());
  report("dynamics oracle", dynamics());
  report("energy conservation", energy());
  report("fuzzy engine", fuzzy_engine());
  report("vision round trip", vision_round_trip());
  reproduction();
  report("full-loop determinism", determinism());
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
