#include "stewart/fuzzy.hpp"

#include "stewart/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace stewart {

MembershipFunction MembershipFunction::triangle(std::string label, double a, double peak,
                                                double d) {
  return {std::move(label), MfShape::Triangular, {a, peak, peak, d}};
}

MembershipFunction MembershipFunction::trapezoid(std::string label, double a, double b, double c,
                                                 double d) {
  return {std::move(label), MfShape::Trapezoidal, {a, b, c, d}};
}

double membership_degree(const MembershipFunction& mf, double x) {
  const auto [a, b, c, d] = mf.points;
  if (x < a || x > d) return 0.0;
  if (x >= b && x <= c) return 1.0;
  if (x < b) return (x - a) / (b - a);
  return (d - x) / (d - c);
}

namespace {

enum class Side { Left, Right };

// One-sided limit of the membership curve, so vertical edges are handled exactly.
double one_sided_degree(const std::array<double, 4>& p, double x, Side side) {
  const auto [a, b, c, d] = p;
  if (side == Side::Right) {
    if (x < a || x >= d) return 0.0;
    if (x < b) return (x - a) / (b - a);
    if (x < c) return 1.0;
    return (d - x) / (d - c);
  }
  if (x <= a || x > d) return 0.0;
  if (x <= b) return (x - a) / (b - a);
  if (x <= c) return 1.0;
  return (d - x) / (d - c);
}

struct ClippedTerm {
  std::array<double, 4> points;
  double height;

  double value(double x, Side side) const { return std::min(height, one_sided_degree(points, x, side)); }
};

PiecewiseLinear upper_envelope(const std::vector<ClippedTerm>& terms, double lo, double hi) {
  std::vector<double> cuts{lo, hi};
  for (const auto& t : terms) {
    const auto [a, b, c, d] = t.points;
    const double h = t.height;
    for (double x : {a, a + h * (b - a), d - h * (d - c), d})
      if (x > lo && x < hi) cuts.push_back(x);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  PiecewiseLinear out;
  auto push = [&out](double x, double y) {
    if (!out.xs.empty() && out.xs.back() == x && out.ys.back() == y) return;
    out.xs.push_back(x);
    out.ys.push_back(y);
  };

  const std::size_t n = terms.size();
  std::vector<double> left(n), right(n);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double x0 = cuts[k], x1 = cuts[k + 1];
    for (std::size_t j = 0; j < n; ++j) {
      left[j] = terms[j].value(x0, Side::Right);
      right[j] = terms[j].value(x1, Side::Left);
    }
    // Pairwise crossings in normalized interval coordinate s in (0, 1).
    std::vector<double> ss{0.0, 1.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d0 = left[i] - left[j], d1 = right[i] - right[j];
        if ((d0 < 0 && d1 > 0) || (d0 > 0 && d1 < 0)) ss.push_back(d0 / (d0 - d1));
      }
    }
    std::sort(ss.begin(), ss.end());
    for (double s : ss) {
      double y = 0.0;
      for (std::size_t j = 0; j < n; ++j) y = std::max(y, left[j] + s * (right[j] - left[j]));
      const double x = s == 1.0 ? x1 : x0 + s * (x1 - x0);
      push(x, y);
    }
  }
  if (out.xs.empty()) {
    out.xs = {lo, hi};
    out.ys = {0.0, 0.0};
  }
  return out;
}

struct KindLayout {
  ControllerKind kind;
  std::vector<std::pair<double, double>> inputs;
  std::vector<std::pair<double, double>> outputs;
};

const std::vector<KindLayout>& kind_layouts() {
  static const std::vector<KindLayout> layouts{
      {ControllerKind::Fuzzy1, {{-200, 200}, {-200, 200}, {-300, 300}}, {{-6, 6}, {-6, 6}}},
      {ControllerKind::Fuzzy2, {{-150, 150}, {-600, 600}}, {{-6, 6}}},
      {ControllerKind::Fuzzy3, {{-150, 150}, {-150, 150}}, {{-4, 4}}},
      {ControllerKind::FuzzyPD, {{-150, 150}, {-600, 600}}, {{-5, 5}}},
  };
  return layouts;
}

void validate_variable(const Variable& v) {
  if (!(v.lo < v.hi)) throw ContractViolation("variable '" + v.name + "' has an empty universe");
  if (v.terms.empty()) throw ContractViolation("variable '" + v.name + "' has no terms");
  std::vector<double> probes{v.lo, v.hi};
  for (const auto& t : v.terms) {
    const auto& p = t.points;
    if (!(p[0] <= p[1] && p[1] <= p[2] && p[2] <= p[3]))
      throw ContractViolation("term '" + t.label + "' breakpoints are not non-decreasing");
    if (p[0] < v.lo || p[3] > v.hi)
      throw ContractViolation("term '" + t.label + "' extends outside universe of '" + v.name + "'");
    probes.insert(probes.end(), p.begin(), p.end());
  }
  std::sort(probes.begin(), probes.end());
  const std::size_t count = probes.size();
  for (std::size_t i = 0; i + 1 < count; ++i) probes.push_back(0.5 * (probes[i] + probes[i + 1]));
  for (double x : probes) {
    double total = 0.0;
    for (const auto& t : v.terms) total += membership_degree(t, x);
    if (!(total > 0.0))
      throw ContractViolation("terms of '" + v.name + "' leave a gap at " + std::to_string(x));
  }
}

}  // namespace

double Variable::clamp(double x) const { return std::clamp(x, lo, hi); }

std::optional<int> Variable::term_index(const std::string& label) const {
  for (std::size_t i = 0; i < terms.size(); ++i)
    if (terms[i].label == label) return static_cast<int>(i);
  return std::nullopt;
}

Variable uniform_partition(std::string name, double lo, double hi,
                           const std::vector<std::string>& labels, std::string units,
                           Signal signal) {
  Variable v{std::move(name), lo, hi, std::move(units), {}, signal};
  const int n = static_cast<int>(labels.size());
  if (n < 2) throw ContractViolation("a partition needs at least two terms");
  const double step = (hi - lo) / (n - 1);
  auto peak = [&](int k) { return k == n - 1 ? hi : lo + k * step; };
  for (int k = 0; k < n; ++k) {
    if (k == 0)
      v.terms.push_back(MembershipFunction::trapezoid(labels[k], lo, lo, lo, peak(1)));
    else if (k == n - 1)
      v.terms.push_back(MembershipFunction::trapezoid(labels[k], peak(n - 2), hi, hi, hi));
    else
      v.terms.push_back(MembershipFunction::triangle(labels[k], peak(k - 1), peak(k), peak(k + 1)));
  }
  return v;
}

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Fuzzy1: return "Fuzzy1";
    case ControllerKind::Fuzzy2: return "Fuzzy2";
    case ControllerKind::Fuzzy3: return "Fuzzy3";
    case ControllerKind::FuzzyPD: return "FuzzyPD";
  }
  return "?";
}

std::optional<ControllerKind> controller_kind_from_string(const std::string& name) {
  for (auto k : {ControllerKind::Fuzzy1, ControllerKind::Fuzzy2, ControllerKind::Fuzzy3,
                 ControllerKind::FuzzyPD})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

void FuzzyControllerSpec::validate() const {
  for (const auto& v : inputs) validate_variable(v);
  for (const auto& v : outputs) validate_variable(v);
  for (const auto& layout : kind_layouts()) {
    if (layout.kind != kind) continue;
    if (inputs.size() != layout.inputs.size() || outputs.size() != layout.outputs.size())
      throw ContractViolation(name + ": wrong number of inputs or outputs for " + to_string(kind));
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i].lo != layout.inputs[i].first || inputs[i].hi != layout.inputs[i].second)
        throw ContractViolation(name + ": input '" + inputs[i].name + "' universe differs from " +
                                to_string(kind));
    for (std::size_t i = 0; i < outputs.size(); ++i)
      if (outputs[i].lo != layout.outputs[i].first || outputs[i].hi != layout.outputs[i].second)
        throw ContractViolation(name + ": output '" + outputs[i].name +
                                "' universe differs from " + to_string(kind));
  }
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const Rule& rule = rules[r];
    if (rule.antecedent.size() != inputs.size() || rule.consequent.size() != outputs.size())
      throw ContractViolation(name + ": rule " + std::to_string(r + 1) + " has the wrong arity");
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (rule.antecedent[i] &&
          (*rule.antecedent[i] < 0 || *rule.antecedent[i] >= int(inputs[i].terms.size())))
        throw ContractViolation(name + ": rule " + std::to_string(r + 1) + " names a missing term");
    for (std::size_t i = 0; i < outputs.size(); ++i)
      if (rule.consequent[i] &&
          (*rule.consequent[i] < 0 || *rule.consequent[i] >= int(outputs[i].terms.size())))
        throw ContractViolation(name + ": rule " + std::to_string(r + 1) + " names a missing term");
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (xs.empty() || x < xs.front() || x > xs.back()) return 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    if (x <= xs[k + 1]) {
      const double dx = xs[k + 1] - xs[k];
      if (dx == 0.0) return std::max(ys[k], ys[k + 1]);
      return ys[k] + (x - xs[k]) / dx * (ys[k + 1] - ys[k]);
    }
  }
  return ys.back();
}

InferenceResult infer(const FuzzyControllerSpec& spec, std::span<const double> crisp_inputs) {
  if (spec.rules.empty()) throw NoRulesError(spec.name);
  if (crisp_inputs.size() != spec.inputs.size())
    throw ContractViolation(spec.name + ": expected " + std::to_string(spec.inputs.size()) +
                            " inputs");

  std::vector<std::vector<double>> degrees(spec.inputs.size());
  for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
    const Variable& v = spec.inputs[i];
    const double x = v.clamp(crisp_inputs[i]);
    for (const auto& t : v.terms) degrees[i].push_back(membership_degree(t, x));
  }

  InferenceResult result;
  result.firing.reserve(spec.rules.size());
  std::vector<std::vector<double>> heights(spec.outputs.size());
  for (std::size_t o = 0; o < spec.outputs.size(); ++o)
    heights[o].assign(spec.outputs[o].terms.size(), 0.0);

  for (const Rule& rule : spec.rules) {
    double strength = 1.0;
    for (std::size_t i = 0; i < rule.antecedent.size(); ++i)
      if (rule.antecedent[i]) strength = std::min(strength, degrees[i][*rule.antecedent[i]]);
    result.firing.push_back(strength);
    if (strength <= 0.0) continue;
    for (std::size_t o = 0; o < rule.consequent.size(); ++o)
      if (rule.consequent[o])
        heights[o][*rule.consequent[o]] = std::max(heights[o][*rule.consequent[o]], strength);
  }

  for (std::size_t o = 0; o < spec.outputs.size(); ++o) {
    const Variable& v = spec.outputs[o];
    std::vector<ClippedTerm> clipped;
    for (std::size_t t = 0; t < v.terms.size(); ++t)
      if (heights[o][t] > 0.0) clipped.push_back({v.terms[t].points, heights[o][t]});
    result.aggregates.push_back(upper_envelope(clipped, v.lo, v.hi));
  }
  return result;
}

Defuzzified defuzzify_centroid(const PiecewiseLinear& aggregate, double lo, double hi) {
  double area = 0.0, moment = 0.0;
  for (std::size_t k = 0; k + 1 < aggregate.xs.size(); ++k) {
    const double x0 = aggregate.xs[k], x1 = aggregate.xs[k + 1];
    const double y0 = aggregate.ys[k], y1 = aggregate.ys[k + 1];
    const double dx = x1 - x0;
    area += 0.5 * dx * (y0 + y1);
    moment += dx / 6.0 * (x0 * (2.0 * y0 + y1) + x1 * (y0 + 2.0 * y1));
  }
  if (!(area > 0.0)) return {0.5 * (lo + hi), true};
  return {std::clamp(moment / area, lo, hi), false};
}

double error_derivative(double x1, double t1, double x2, double t2) {
  if (t1 == t2) throw DivisionByZeroTime();
  return (x1 - x2) / (t1 - t2);
}

namespace {

double signal_value(Signal s, const ControllerInputs& in, bool mirrored) {
  switch (s) {
    case Signal::PositionX: return mirrored ? in.y : in.x;
    case Signal::PositionY: return mirrored ? in.x : in.y;
    case Signal::RadialError: return in.radial_error;
    case Signal::DerivativeX: return mirrored ? in.dy : in.dx;
    case Signal::DerivativeY: return mirrored ? in.dx : in.dy;
  }
  return 0.0;
}

double gain_for(Signal s, const ControllerGains& g) {
  switch (s) {
    case Signal::PositionX:
    case Signal::PositionY:
    case Signal::RadialError: return g.proportional;
    case Signal::DerivativeX:
    case Signal::DerivativeY: return g.derivative;
  }
  return 1.0;
}

std::vector<Defuzzified> evaluate(const FuzzyControllerSpec& spec, const ControllerInputs& in,
                                  const ControllerGains& gains, bool mirrored) {
  std::vector<double> crisp;
  crisp.reserve(spec.inputs.size());
  const bool scaled = spec.kind == ControllerKind::FuzzyPD;
  for (const auto& v : spec.inputs) {
    double x = signal_value(v.signal, in, mirrored);
    if (scaled) x *= gain_for(v.signal, gains);
    crisp.push_back(x);
  }
  const InferenceResult r = infer(spec, crisp);
  std::vector<Defuzzified> out;
  for (std::size_t o = 0; o < spec.outputs.size(); ++o)
    out.push_back(defuzzify_centroid(r.aggregates[o], spec.outputs[o].lo, spec.outputs[o].hi));
  return out;
}

}  // namespace

TiltCommand controller_step(const FuzzyControllerSpec& spec, const ControllerInputs& in,
                            const ControllerGains& gains) {
  TiltCommand cmd;
  if (spec.single_axis()) {
    const Defuzzified x_axis = evaluate(spec, in, gains, false).front();
    const Defuzzified y_axis = evaluate(spec, in, gains, true).front();
    cmd.roll = x_axis.value;
    cmd.pitch = y_axis.value;
    cmd.degenerate = x_axis.degenerate || y_axis.degenerate;
    return cmd;
  }
  const auto out = evaluate(spec, in, gains, false);
  if (out.size() < 2) throw ContractViolation(spec.name + ": two-output spec expected");
  cmd.roll = out[0].value;
  cmd.pitch = out[1].value;
  cmd.degenerate = out[0].degenerate || out[1].degenerate;
  return cmd;
}

}  // namespace stewart
