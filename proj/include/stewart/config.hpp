#pragma once

// Line-oriented `key = value` files with `[section]` headers. `#` and `;`
// start comments. Every key must be consumed by a loader; leftovers are
// reported as unknown keys with their line numbers.

#include "stewart/dynamics.hpp"
#include "stewart/fuzzy.hpp"
#include "stewart/geometry.hpp"
#include "stewart/plant.hpp"
#include "stewart/vision.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stewart {

class IniFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    bool used = false;
  };
  struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
  };

  static IniFile parse(std::istream& in, const std::string& source = "<input>");
  static IniFile load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  bool has_section(const std::string& name) const;
  /// Section names in file order.
  std::vector<std::string> section_names() const;
  /// Names of sections starting with `prefix`, in file order.
  std::vector<std::string> sections_with_prefix(const std::string& prefix) const;

  /// Marks the key used. nullopt when absent.
  std::optional<std::string> take(const std::string& section, const std::string& key);
  std::string require(const std::string& section, const std::string& key);
  /// All entries of a section in order, marking them used.
  std::vector<Entry> take_all(const std::string& section);
  int line_of(const std::string& section, const std::string& key) const;

  /// Throws ConfigError listing every key nobody consumed.
  void reject_unused() const;

  /// Error text prefixed with "source:line: ".
  [[noreturn]] void fail(int line, const std::string& message) const;

 private:
  Section* find(const std::string& name);
  const Section* find(const std::string& name) const;

  std::string source_;
  std::vector<Section> sections_;
};

// Value parsing helpers; `where` feeds the error message.
double parse_number(const std::string& text, const std::string& where);
long parse_integer(const std::string& text, const std::string& where);
std::vector<double> parse_number_list(const std::string& text, const std::string& where);
std::vector<std::string> split_list(const std::string& text, char sep);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

struct LegMasses {
  double horn = 0.020;  // kg
  double rod = 0.015;   // kg

  void validate() const;
  bool operator==(const LegMasses&) const = default;
};

/// Horn + rod chain for one leg, in the leg's vertical horn plane.
LegChain<double> leg_chain(const PlatformGeometryd& geom, const LegMasses& masses);

enum class SensorMode { Direct, Vision };
const char* to_string(SensorMode mode);
std::optional<SensorMode> sensor_mode_from_string(const std::string& text);

/// Shipped default geometry: 130 mm base radius, 100 mm platform radius,
/// 40 mm horns, 125 mm rods.
PlatformGeometryd default_geometry();

struct ExperimentConfig {
  std::string name = "experiment";
  FuzzyControllerSpec controller;
  ControllerGains gains;
  Vec2d initial_position = Vec2d::Zero();  // mm
  Vec2d initial_velocity = Vec2d::Zero();  // mm/s
  double duration = 120.0;                 // s
  SensorMode sensor = SensorMode::Direct;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";

  // Metrics.
  double band_window = 30.0;       // s, tail over which the band is averaged
  double stabilization_band = 10;  // mm
  double stabilization_hold = 10;  // s

  PlatformGeometryd geometry = default_geometry();
  LegMasses legs;
  PlantParams plant;
  SceneConfig scene;
  PipelineConfig pipeline;

  /// Throws ConfigError naming the broken invariant.
  void validate() const;
};


/// Shipped rule bases and universes for each controller kind.
FuzzyControllerSpec shipped_controller(ControllerKind kind);
ControllerGains shipped_gains(ControllerKind kind);

// Section loaders. Each consumes its keys from `ini`.
PlatformGeometryd load_geometry(IniFile& ini, const std::string& section = "geometry");
PlantParams load_plant(IniFile& ini, const std::string& section = "plant");
LegMasses load_legs(IniFile& ini, const std::string& section = "legs");
SceneConfig load_scene(IniFile& ini, const std::string& section = "scene");
PipelineConfig load_pipeline(IniFile& ini, const std::string& section = "pipeline");

struct LoadedController {
  FuzzyControllerSpec spec;
  ControllerGains gains;
};
LoadedController load_controller(IniFile& ini);
LoadedController load_controller_file(const std::filesystem::path& path);

ExperimentConfig load_config(const std::filesystem::path& path);

void write_geometry(std::ostream& out, const PlatformGeometryd& geom);
void write_plant(std::ostream& out, const PlantParams& plant);
void write_legs(std::ostream& out, const LegMasses& legs);
void write_scene(std::ostream& out, const SceneConfig& scene);
void write_pipeline(std::ostream& out, const PipelineConfig& pipe);
void write_controller(std::ostream& out, const FuzzyControllerSpec& spec,
                      const ControllerGains& gains);
/// Self-contained file: every section inline.
void write_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace stewart
