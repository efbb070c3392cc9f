#pragma once

// Mamdani fuzzy inference (min firing, clip, max aggregation, centroid) and the
// routing that turns a controller spec into plate tilt commands.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stewart {

enum class MfShape { Triangular, Trapezoidal };

/// Trapezoid (a, b, c, d) with a <= b <= c <= d; a triangle has b == c.
/// a == b (or c == d) gives a shoulder that is 1 at the bound.
struct MembershipFunction {
  std::string label;
  MfShape shape = MfShape::Triangular;
  std::array<double, 4> points{};

  static MembershipFunction triangle(std::string label, double a, double peak, double d);
  static MembershipFunction trapezoid(std::string label, double a, double b, double c, double d);

  bool operator==(const MembershipFunction&) const = default;
};

double membership_degree(const MembershipFunction& mf, double x);

/// Which measured signal feeds an input variable.
enum class Signal { PositionX, PositionY, RadialError, DerivativeX, DerivativeY };

struct Variable {
  std::string name;
  double lo = 0;
  double hi = 0;
  std::string units;
  std::vector<MembershipFunction> terms;
  Signal signal = Signal::PositionX;

  std::optional<int> term_index(const std::string& label) const;
  double clamp(double x) const;

  bool operator==(const Variable&) const = default;
};

/// Evenly spaced triangles with 50% overlap; the two end terms are shoulders.
Variable uniform_partition(std::string name, double lo, double hi,
                           const std::vector<std::string>& labels, std::string units = {},
                           Signal signal = Signal::PositionX);

/// Conjunctive rule. An empty antecedent slot matches anything; an empty
/// consequent slot leaves that output untouched.
struct Rule {
  std::vector<std::optional<int>> antecedent;
  std::vector<std::optional<int>> consequent;

  bool operator==(const Rule&) const = default;
};

enum class ControllerKind { Fuzzy1, Fuzzy2, Fuzzy3, FuzzyPD };

std::string to_string(ControllerKind kind);
std::optional<ControllerKind> controller_kind_from_string(const std::string& name);

struct FuzzyControllerSpec {
  std::string name;
  ControllerKind kind = ControllerKind::FuzzyPD;
  std::vector<Variable> inputs;
  std::vector<Variable> outputs;
  std::vector<Rule> rules;

  /// Throws ContractViolation on a broken invariant; empty rules are reported by infer().
  void validate() const;
  /// True when the controller drives one axis and is mirrored for the other.
  bool single_axis() const { return outputs.size() == 1; }

  bool operator==(const FuzzyControllerSpec&) const = default;
};

/// Piecewise-linear membership curve sampled at its breakpoints.
struct PiecewiseLinear {
  std::vector<double> xs;
  std::vector<double> ys;

  double operator()(double x) const;
};

struct InferenceResult {
  std::vector<double> firing;                // one per rule
  std::vector<PiecewiseLinear> aggregates;   // one per output
};

/// Inputs are clamped to their universes before fuzzification.
InferenceResult infer(const FuzzyControllerSpec& spec, std::span<const double> crisp_inputs);

struct Defuzzified {
  double value = 0;
  bool degenerate = false;  // zero-area aggregate; value is the universe midpoint
};

Defuzzified defuzzify_centroid(const PiecewiseLinear& aggregate, double lo, double hi);

/// (x1 - x2) / (t1 - t2).
double error_derivative(double x1, double t1, double x2, double t2);

struct ControllerInputs {
  double x = 0;             // mm
  double y = 0;             // mm
  double radial_error = 0;  // mm, distance between ball and plate centres
  double dx = 0;            // mm/s
  double dy = 0;            // mm/s
};

struct ControllerGains {
  double proportional = 1.0;
  double derivative = 1.0;

  bool operator==(const ControllerGains&) const = default;
};

/// Corrective command in the controller's own naming: `roll` answers the X
/// axis, `pitch` the Y axis. Degrees.
struct TiltCommand {
  double roll = 0;
  double pitch = 0;
  bool degenerate = false;
};

/// Single-axis specs are evaluated twice, once on (x, dx) and once mirrored on
/// (y, dy). For FuzzyPD the gains scale the position and derivative inputs
/// before fuzzification; other kinds ignore them.
TiltCommand controller_step(const FuzzyControllerSpec& spec, const ControllerInputs& in,
                            const ControllerGains& gains = {});

}  // namespace stewart
