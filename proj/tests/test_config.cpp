#include <doctest.h>

#include "stewart/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace stewart;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = fs::path(STEWART_SOURCE_DIR) / "config";

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "stewart_test_config";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int cli(const std::string& args) {
  const std::string cmd = std::string(STEWART_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kMinimal =
    "[experiment]\n"
    "controller = FuzzyPD\n"
    "duration = 2\n"
    "initial_x = 40\n"
    "initial_y = -20\n";

void check_same(const ExperimentConfig& a, const ExperimentConfig& b) {
  CHECK(a.name == b.name);
  CHECK(a.controller == b.controller);
  CHECK(a.gains == b.gains);
  CHECK(a.initial_position == b.initial_position);
  CHECK(a.initial_velocity == b.initial_velocity);
  CHECK(a.duration == b.duration);
  CHECK(a.sensor == b.sensor);
  CHECK(a.seed == b.seed);
  CHECK(a.band_window == b.band_window);
  CHECK(a.stabilization_band == b.stabilization_band);
  CHECK(a.stabilization_hold == b.stabilization_hold);
  CHECK(a.geometry.base_anchors == b.geometry.base_anchors);
  CHECK(a.geometry.platform_joints == b.geometry.platform_joints);
  for (int i = 0; i < kLegCount; ++i)
    CHECK(std::abs(a.geometry.horn_axis_heading[i] - b.geometry.horn_axis_heading[i]) <= 1e-14);
  CHECK(a.geometry.horn_length == b.geometry.horn_length);
  CHECK(a.geometry.rod_length == b.geometry.rod_length);
  CHECK(a.geometry.home_height == b.geometry.home_height);
  CHECK(a.legs == b.legs);
  CHECK(a.plant == b.plant);
  CHECK(a.scene == b.scene);
  CHECK(a.pipeline == b.pipeline);
}

}  // namespace

TEST_CASE("ini parsing") {
  std::istringstream in(
      "# leading comment\n"
      "[a]\n"
      "x = 1   ; trailing\n"
      "name = hello world\n"
      "\n"
      "[b.c]\n"
      "list = 1, 2,3\n");
  IniFile ini = IniFile::parse(in, "mem");
  CHECK(ini.section_names() == std::vector<std::string>{"a", "b.c"});
  CHECK(ini.take("a", "x") == "1");
  CHECK(ini.require("a", "name") == "hello world");
  CHECK(!ini.take("a", "missing"));
  CHECK(ini.sections_with_prefix("b.") == std::vector<std::string>{"b.c"});
  CHECK(ini.line_of("b.c", "list") == 7);
  const std::string err = error_of([&] { ini.reject_unused(); });
  CHECK(err.find("mem:7") != std::string::npos);
  CHECK(err.find("list") != std::string::npos);
  CHECK(parse_number_list(*ini.take("b.c", "list"), "list") == std::vector<double>{1, 2, 3});
  CHECK_NOTHROW(ini.reject_unused());
}

TEST_CASE("ini syntax errors carry line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return error_of([&] { IniFile::parse(in, "f.ini"); });
  };
  CHECK(parse("[a]\nx = 1\nnot a pair\n").find("f.ini:3") != std::string::npos);
  CHECK(parse("x = 1\n").find("f.ini:1") != std::string::npos);
  CHECK(parse("[a]\nx = 1\nx = 2\n").find("f.ini:3") != std::string::npos);
  CHECK(parse("[a]\n[a]\n").find("f.ini:2") != std::string::npos);
  CHECK(parse("[a\n").find("f.ini:1") != std::string::npos);
}

TEST_CASE("numbers") {
  CHECK(parse_number("2.5", "k") == 2.5);
  CHECK(parse_number("-1e-3", "k") == -1e-3);
  CHECK_THROWS_AS(parse_number("2.5mm", "k"), ConfigError);
  CHECK_THROWS_AS(parse_number("", "k"), ConfigError);
  CHECK(parse_integer("42", "k") == 42);
  CHECK_THROWS_AS(parse_integer("4.2", "k"), ConfigError);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 13 - 6);
    CHECK(parse_number(format_number(v), "k") == v);
  }
}

TEST_CASE("minimal experiment uses defaults") {
  const ExperimentConfig cfg = load_config(write_file("minimal.ini", kMinimal));
  CHECK(cfg.controller == shipped_controller(ControllerKind::FuzzyPD));
  CHECK(cfg.gains == shipped_gains(ControllerKind::FuzzyPD));
  CHECK(cfg.initial_position == Vec2d(40, -20));
  CHECK(cfg.duration == 2);
  CHECK(cfg.sensor == SensorMode::Direct);
  CHECK(cfg.out_dir == "out");
}

TEST_CASE("unknown keys are rejected with their line") {
  const std::string err =
      error_of([] { load_config(write_file("unknown.ini", kMinimal + "\n[plant]\ngravty = 9.81\n")); });
  CHECK(err.find("unknown.ini:8") != std::string::npos);
  CHECK(err.find("gravty") != std::string::npos);
}

TEST_CASE("invalid experiments") {
  CHECK(!error_of([] { load_config(write_file("empty.ini", "")); }).empty());
  CHECK(!error_of([] { load_config(scratch_dir() / "does_not_exist.ini"); }).empty());
  CHECK(!error_of([] {
           load_config(write_file("neg.ini", "[experiment]\ncontroller = FuzzyPD\nduration = -1\ninitial_x = 0\ninitial_y = 0\n"));
         }).empty());
  CHECK(!error_of([] {
           load_config(write_file("off.ini", "[experiment]\ncontroller = FuzzyPD\nduration = 1\ninitial_x = 500\ninitial_y = 0\n"));
         }).empty());
  CHECK(!error_of([] {
           load_config(write_file("kind.ini", "[experiment]\ncontroller = Fuzzy7\nduration = 1\ninitial_x = 0\ninitial_y = 0\n"));
         }).empty());
  CHECK(!error_of([] { load_config(write_file("sensor.ini", kMinimal + "sensor = sonar\n")); }).empty());
}

TEST_CASE("write then load reproduces every field") {
  for (const char* name : {"fuzzy1.ini", "fuzzy2.ini", "fuzzy3.ini", "fuzzy_pd.ini", "fuzzy_pd_vision.ini"}) {
    const ExperimentConfig original = load_config(kConfigDir / "experiments" / name);
    const auto copy = scratch_dir() / (std::string("copy_") + name);
    write_config(original, copy);
    check_same(original, load_config(copy));
  }

  ExperimentConfig odd = load_config(write_file("odd.ini", kMinimal));
  odd.name = "odd";
  odd.initial_velocity = Vec2d(1.0 / 3, -2e-7);
  odd.sensor = SensorMode::Vision;
  odd.seed = odd.scene.seed = 123456789012345ull;
  odd.plant.viscous_damping = 0.1234567890123;
  odd.scene.noise_sigma = 3.5;
  odd.scene.ball = {1, 2, 3};
  odd.pipeline.ball_range.hue_lo = 350;
  odd.pipeline.ball_range.hue_hi = 15;
  odd.geometry.horn_axis_heading[2] = 0.1;
  odd.legs.rod = 0.1;
  odd.gains = {0.7, 0.2};
  odd.controller.rules.pop_back();
  write_config(odd, scratch_dir() / "odd_copy.ini");
  check_same(odd, load_config(scratch_dir() / "odd_copy.ini"));
}

TEST_CASE("shipped controller files match the built-in rule bases") {
  const std::pair<const char*, ControllerKind> files[] = {{"fuzzy1.ini", ControllerKind::Fuzzy1},
                                                          {"fuzzy2.ini", ControllerKind::Fuzzy2},
                                                          {"fuzzy3.ini", ControllerKind::Fuzzy3},
                                                          {"fuzzy_pd.ini", ControllerKind::FuzzyPD}};
  for (const auto& [file, kind] : files) {
    const LoadedController c = load_controller_file(kConfigDir / "controllers" / file);
    CHECK(c.spec == shipped_controller(kind));
    CHECK(c.gains == shipped_gains(kind));
  }
}

TEST_CASE("shipped platform file is the default geometry") {
  const ExperimentConfig cfg = load_config(kConfigDir / "experiments" / "fuzzy_pd.ini");
  const PlatformGeometryd g = default_geometry();
  for (int i = 0; i < kLegCount; ++i) {
    CHECK((cfg.geometry.base_anchors[i] - g.base_anchors[i]).norm() < 1e-12);
    CHECK((cfg.geometry.platform_joints[i] - g.platform_joints[i]).norm() < 1e-12);
    CHECK(std::abs(cfg.geometry.horn_axis_heading[i] - g.horn_axis_heading[i]) < 1e-12);
  }
  CHECK(cfg.geometry.home_height == doctest::Approx(g.home_height).epsilon(1e-12));
  CHECK(cfg.legs == LegMasses{});
}

TEST_CASE("leg chain") {
  const LegChain<double> c = leg_chain(default_geometry(), LegMasses{});
  CHECK(c[0].length == 40);
  CHECK(c[1].length == 125);
  CHECK(c[0].mass == 0.02);
  CHECK(c[1].mass == 0.015);
  CHECK(c[0].center_of_mass == Vec3d(-20, 0, 0));
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch_dir();
  const auto good = write_file("cli_good.ini", kMinimal);
  CHECK(cli("run -q " + good.string() + " --out-dir " + (dir / "cli_out").string()) == 0);
  CHECK(fs::exists(dir / "cli_out" / "cli_good.csv"));
  CHECK(cli("run -q " + write_file("cli_bad.ini", kMinimal + "bogus = 1\n").string()) == 2);
  CHECK(cli("run -q " + (dir / "nope.ini").string()) == 2);
  CHECK(cli("run -q " + good.string() + " --sensor sonar") == 2);
  const auto fast = write_file("cli_fell.ini", kMinimal + "initial_vx = 3000\n");
  CHECK(cli("run -q " + fast.string() + " --out-dir " + (dir / "cli_out").string()) == 3);
  CHECK(cli("fuzzy-eval FuzzyPD 100 0") == 0);
  CHECK(cli("fuzzy-eval Fuzzy9 1 2") == 2);
  CHECK(cli("torque-report --duration 0.5") == 0);
  CHECK(cli("") != 0);
}
