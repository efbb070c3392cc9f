#include "stewart/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace stewart {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

// ---------------------------------------------------------------- IniFile

IniFile IniFile::parse(std::istream& in, const std::string& source) {
  IniFile ini;
  ini.source_ = source;
  std::string raw;
  int line_no = 0;
  Section* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view view(raw);
    const auto hash = view.find_first_of("#;");
    if (hash != std::string_view::npos) view = view.substr(0, hash);
    const std::string line = trim(view);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') ini.fail(line_no, "unterminated section header");
      const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (name.empty()) ini.fail(line_no, "empty section name");
      if (ini.find(name)) ini.fail(line_no, "duplicate section [" + name + "]");
      ini.sections_.push_back({name, line_no, {}});
      current = &ini.sections_.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) ini.fail(line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) ini.fail(line_no, "missing key before '='");
    if (!current) ini.fail(line_no, "key '" + key + "' appears before any [section]");
    for (const auto& e : current->entries)
      if (e.key == key)
        ini.fail(line_no, "duplicate key '" + key + "' (first at line " + std::to_string(e.line) + ")");
    current->entries.push_back({key, value, line_no, false});
  }
  return ini;
}

IniFile IniFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

IniFile::Section* IniFile::find(const std::string& name) {
  for (auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

const IniFile::Section* IniFile::find(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

bool IniFile::has_section(const std::string& name) const { return find(name) != nullptr; }

std::vector<std::string> IniFile::section_names() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) out.push_back(s.name);
  return out;
}

std::vector<std::string> IniFile::sections_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& s : sections_)
    if (s.name.rfind(prefix, 0) == 0) out.push_back(s.name);
  return out;
}

std::optional<std::string> IniFile::take(const std::string& section, const std::string& key) {
  Section* s = find(section);
  if (!s) return std::nullopt;
  for (auto& e : s->entries)
    if (e.key == key) {
      e.used = true;
      return e.value;
    }
  return std::nullopt;
}

std::string IniFile::require(const std::string& section, const std::string& key) {
  if (auto v = take(section, key)) return *v;
  const Section* s = find(section);
  if (!s) throw ConfigError(source_ + ": missing section [" + section + "] (needs key '" + key + "')");
  fail(s->line, "section [" + section + "] is missing required key '" + key + "'");
}

std::vector<IniFile::Entry> IniFile::take_all(const std::string& section) {
  Section* s = find(section);
  if (!s) return {};
  for (auto& e : s->entries) e.used = true;
  return s->entries;
}

int IniFile::line_of(const std::string& section, const std::string& key) const {
  const Section* s = find(section);
  if (!s) return 0;
  if (key.empty()) return s->line;
  for (const auto& e : s->entries)
    if (e.key == key) return e.line;
  return s->line;
}

void IniFile::reject_unused() const {
  std::string msg;
  for (const auto& s : sections_)
    for (const auto& e : s.entries)
      if (!e.used)
        msg += "\n  " + source_ + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
               "' in [" + s.name + "]";
  if (!msg.empty()) throw ConfigError("unknown configuration keys:" + msg);
}

void IniFile::fail(int line, const std::string& message) const {
  throw ConfigError(source_ + ":" + std::to_string(line) + ": " + message);
}

// ---------------------------------------------------------------- values

double parse_number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double v = 0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ConfigError(where + ": '" + text + "' is not a number");
  return v;
}

long parse_integer(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError(where + ": '" + text + "' is not an integer");
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  if (sep == ' ') {
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& where) {
  std::vector<double> out;
  for (const auto& part : split_list(text, ',')) out.push_back(parse_number(part, where));
  return out;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// Bound to one file so messages carry "file:line".
struct Reader {
  IniFile& ini;
  std::string section;

  std::string where(const std::string& key) const {
    return ini.source() + ":" + std::to_string(ini.line_of(section, key)) + ": [" + section + "] " + key;
  }
  double number(const std::string& key) { return parse_number(ini.require(section, key), where(key)); }
  double number_or(const std::string& key, double fallback) {
    const auto v = ini.take(section, key);
    return v ? parse_number(*v, where(key)) : fallback;
  }
  long integer_or(const std::string& key, long fallback) {
    const auto v = ini.take(section, key);
    return v ? parse_integer(*v, where(key)) : fallback;
  }
  std::vector<double> numbers(const std::string& key, std::size_t count) {
    const auto v = parse_number_list(ini.require(section, key), where(key));
    if (v.size() != count)
      throw ConfigError(where(key) + ": expected " + std::to_string(count) + " comma-separated numbers");
    return v;
  }
  std::optional<std::vector<double>> numbers_opt(const std::string& key, std::size_t count) {
    if (!ini.take(section, key)) return std::nullopt;
    return numbers(key, count);
  }
  Rgb color(const std::string& key, const Rgb& fallback) {
    const auto v = numbers_opt(key, 3);
    if (!v) return fallback;
    Rgb out{};
    for (int i = 0; i < 3; ++i) {
      if ((*v)[i] < 0 || (*v)[i] > 255 || (*v)[i] != std::floor((*v)[i]))
        throw ConfigError(where(key) + ": colour channels must be integers in [0, 255]");
      out[i] = static_cast<std::uint8_t>((*v)[i]);
    }
    return out;
  }
};

std::string signal_name(Signal s) {
  switch (s) {
    case Signal::PositionX: return "position_x";
    case Signal::PositionY: return "position_y";
    case Signal::RadialError: return "radial_error";
    case Signal::DerivativeX: return "derivative_x";
    case Signal::DerivativeY: return "derivative_y";
  }
  return "?";
}

std::optional<Signal> signal_from_name(const std::string& s) {
  for (Signal v : {Signal::PositionX, Signal::PositionY, Signal::RadialError, Signal::DerivativeX,
                   Signal::DerivativeY})
    if (signal_name(v) == s) return v;
  return std::nullopt;
}

void wrap_contract(const IniFile& ini, int line, const auto& fn) {
  try {
    fn();
  } catch (const ContractViolation& e) {
    ini.fail(line, e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- legs

void LegMasses::validate() const {
  if (!(horn > 0) || !(rod > 0)) throw ContractViolation("leg masses must be positive");
}

LegChain<double> leg_chain(const PlatformGeometryd& geom, const LegMasses& masses) {
  return {uniform_rod_link(geom.horn_length, masses.horn),
          uniform_rod_link(geom.rod_length, masses.rod)};
}

const char* to_string(SensorMode mode) { return mode == SensorMode::Direct ? "direct" : "vision"; }

std::optional<SensorMode> sensor_mode_from_string(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "direct") return SensorMode::Direct;
  if (t == "vision") return SensorMode::Vision;
  return std::nullopt;
}

// ---------------------------------------------------------------- defaults

PlatformGeometryd default_geometry() {
  PlatformGeometryd g;
  g.horn_length = 40.0;
  g.rod_length = 125.0;
  const double base_r = 130.0, plat_r = 100.0;
  for (int k = 0; k < 3; ++k)
    for (int s = 0; s < 2; ++s) {
      const int leg = 2 * k + s;
      const double sign = s == 0 ? -1.0 : 1.0;
      const double centre = 120.0 * k;
      const double ba = deg2rad(centre + sign * 15.0);
      const double pa = deg2rad(centre + sign * 45.0);
      g.base_anchors[leg] = Vec3d(base_r * std::cos(ba), base_r * std::sin(ba), 0);
      g.platform_joints[leg] = Vec3d(plat_r * std::cos(pa), plat_r * std::sin(pa), 0);
      const Vec3d d = g.platform_joints[leg] - g.base_anchors[leg];
      // Horn swings perpendicular to the leg's ground projection, alternating sides.
      g.horn_axis_heading[leg] = std::atan2(d.y(), d.x()) + (s == 0 ? kPi / 2 : -kPi / 2);
    }
  g.home_height = zero_argument_home_height(g);
  return g;
}

// ---------------------------------------------------------------- controllers

namespace {

using Table = std::vector<std::string>;  // one string of consequent digits per row

std::vector<Rule> table_rules(const Table& t, std::size_t n_inputs, std::size_t n_outputs,
                              int row_input, int col_input, int output) {
  std::vector<Rule> rules;
  for (std::size_t p = 0; p < t.size(); ++p)
    for (std::size_t d = 0; d < t[p].size(); ++d) {
      if (t[p][d] == '-') continue;
      Rule r;
      r.antecedent.assign(n_inputs, std::nullopt);
      r.consequent.assign(n_outputs, std::nullopt);
      r.antecedent[row_input] = static_cast<int>(p);
      r.antecedent[col_input] = static_cast<int>(d);
      r.consequent[output] = t[p][d] - '0';
      rules.push_back(std::move(r));
    }
  return rules;
}

}  // namespace

FuzzyControllerSpec shipped_controller(ControllerKind kind) {
  const std::vector<std::string> e5{"ENG", "ENP", "Z", "EPP", "EPG"};
  const std::vector<std::string> n5{"NG", "NP", "Z", "PP", "PG"};
  const std::vector<std::string> p7{"PNG", "PNM", "PNP", "PC", "PPP", "PPM", "PPG"};
  FuzzyControllerSpec s;
  s.kind = kind;
  s.name = to_string(kind);
  switch (kind) {
    case ControllerKind::Fuzzy1: {
      const std::vector<std::string> t{"ENG", "ENP", "EC", "EPP", "EPG"};
      s.inputs = {uniform_partition("X", -200, 200, t, "mm", Signal::PositionX),
                  uniform_partition("Y", -200, 200, t, "mm", Signal::PositionY),
                  uniform_partition("error", -300, 300, t, "mm", Signal::RadialError)};
      s.outputs = {uniform_partition("roll", -6, 6, n5, "deg"),
                   uniform_partition("pitch", -6, 6, n5, "deg")};
      // Position picks the direction, distance from centre the strength.
      const Table t1{"44344", "43234", "22222", "01210", "00100"};
      for (int axis = 0; axis < 2; ++axis) {
        auto rules = table_rules(t1, 3, 2, axis, 2, axis);
        s.rules.insert(s.rules.end(), rules.begin(), rules.end());
      }
      break;
    }
    case ControllerKind::Fuzzy2:
      s.inputs = {uniform_partition("X", -150, 150, e5, "mm", Signal::PositionX),
                  uniform_partition("error_rate", -600, 600, e5, "mm/s", Signal::DerivativeX)};
      s.outputs = {uniform_partition("roll", -6, 6, p7, "deg")};
      s.rules = table_rules({"66543", "66543", "33333", "32100", "32100"}, 2, 1, 0, 1, 0);
      break;
    case ControllerKind::Fuzzy3:
      s.inputs = {uniform_partition("X", -150, 150, n5, "mm", Signal::PositionX),
                  uniform_partition("error_rate", -150, 150, n5, "mm/s", Signal::DerivativeX)};
      s.outputs = {uniform_partition("roll", -4, 4, std::vector<std::string>{"NG", "NP", "PC", "PP", "PG"}, "deg")};
      s.rules = table_rules({"44432", "44321", "01234", "32100", "21000"}, 2, 1, 0, 1, 0);
      break;
    case ControllerKind::FuzzyPD:
      s.inputs = {uniform_partition("X", -150, 150, e5, "mm", Signal::PositionX),
                  uniform_partition("error_rate", -600, 600, e5, "mm/s", Signal::DerivativeX)};
      s.outputs = {uniform_partition("roll", -5, 5, p7, "deg")};
      s.rules = table_rules({"66543", "65432", "54321", "43210", "32100"}, 2, 1, 0, 1, 0);
      break;
  }
  s.validate();
  return s;
}

ControllerGains shipped_gains(ControllerKind kind) {
  if (kind == ControllerKind::FuzzyPD) return {1.0, 0.11};
  return {};
}

// ---------------------------------------------------------------- loaders

PlatformGeometryd load_geometry(IniFile& ini, const std::string& section) {
  if (!ini.has_section(section)) return default_geometry();
  Reader r{ini, section};
  PlatformGeometryd g = default_geometry();
  g.horn_length = r.number_or("horn_length", g.horn_length);
  g.rod_length = r.number_or("rod_length", g.rod_length);
  for (int i = 0; i < kLegCount; ++i) {
    const std::string n = std::to_string(i + 1);
    if (auto v = r.numbers_opt("base_anchor." + n, 3)) g.base_anchors[i] = Vec3d((*v)[0], (*v)[1], (*v)[2]);
    if (auto v = r.numbers_opt("platform_joint." + n, 3))
      g.platform_joints[i] = Vec3d((*v)[0], (*v)[1], (*v)[2]);
    if (auto v = ini.take(section, "horn_heading." + n))
      g.horn_axis_heading[i] = deg2rad(parse_number(*v, r.where("horn_heading." + n)));
  }
  wrap_contract(ini, ini.line_of(section, ""), [&] { g.validate(); });
  const auto home = ini.take(section, "home_height");
  if (!home || lower(trim(*home)) == "auto") {
    wrap_contract(ini, ini.line_of(section, "home_height"),
                  [&] { g.home_height = zero_argument_home_height(g); });
  } else {
    g.home_height = parse_number(*home, r.where("home_height"));
    if (!(g.home_height > 0)) ini.fail(ini.line_of(section, "home_height"), "home_height must be positive");
  }
  return g;
}

PlantParams load_plant(IniFile& ini, const std::string& section) {
  PlantParams p;
  if (!ini.has_section(section)) return p;
  Reader r{ini, section};
  p.plate_half_extent = r.number_or("plate_half_extent", p.plate_half_extent);
  p.gravity = r.number_or("gravity", p.gravity);
  p.rolling_factor = r.number_or("rolling_factor", p.rolling_factor);
  p.viscous_damping = r.number_or("viscous_damping", p.viscous_damping);
  p.actuator_rate_limit = r.number_or("actuator_rate_limit", p.actuator_rate_limit);
  p.sensor_period = r.number_or("sensor_period", p.sensor_period);
  p.integrator_dt = r.number_or("integrator_dt", p.integrator_dt);
  wrap_contract(ini, ini.line_of(section, ""), [&] { p.validate(); });
  return p;
}

LegMasses load_legs(IniFile& ini, const std::string& section) {
  LegMasses m;
  if (!ini.has_section(section)) return m;
  Reader r{ini, section};
  m.horn = r.number_or("horn_mass", m.horn);
  m.rod = r.number_or("rod_mass", m.rod);
  wrap_contract(ini, ini.line_of(section, ""), [&] { m.validate(); });
  return m;
}

SceneConfig load_scene(IniFile& ini, const std::string& section) {
  SceneConfig s;
  if (!ini.has_section(section)) return s;
  Reader r{ini, section};
  s.width = static_cast<int>(r.integer_or("width", s.width));
  s.height = static_cast<int>(r.integer_or("height", s.height));
  s.mm_per_pixel = r.number_or("mm_per_pixel", s.mm_per_pixel);
  s.ball_radius = r.number_or("ball_radius", s.ball_radius);
  s.background = r.color("background", s.background);
  s.platform = r.color("platform", s.platform);
  s.ball = r.color("ball", s.ball);
  s.supersample = static_cast<int>(r.integer_or("supersample", s.supersample));
  s.noise_sigma = r.number_or("noise_sigma", s.noise_sigma);
  wrap_contract(ini, ini.line_of(section, ""), [&] { s.validate(); });
  return s;
}

PipelineConfig load_pipeline(IniFile& ini, const std::string& section) {
  PipelineConfig p;
  if (!ini.has_section(section)) return p;
  Reader r{ini, section};
  p.blur_sigma = r.number_or("blur_sigma", p.blur_sigma);
  if (auto v = r.numbers_opt("ball_hue", 2)) std::tie(p.ball_range.hue_lo, p.ball_range.hue_hi) = std::pair((*v)[0], (*v)[1]);
  if (auto v = r.numbers_opt("ball_saturation", 2)) std::tie(p.ball_range.sat_lo, p.ball_range.sat_hi) = std::pair((*v)[0], (*v)[1]);
  if (auto v = r.numbers_opt("ball_value", 2)) std::tie(p.ball_range.val_lo, p.ball_range.val_hi) = std::pair((*v)[0], (*v)[1]);
  p.platform_max_value = r.number_or("platform_max_value", p.platform_max_value);
  p.min_ball_pixels = r.integer_or("min_ball_pixels", p.min_ball_pixels);
  p.max_ball_pixels = r.integer_or("max_ball_pixels", p.max_ball_pixels);
  wrap_contract(ini, ini.line_of(section, ""), [&] { p.validate(); });
  return p;
}

namespace {

Variable load_variable(IniFile& ini, const std::string& section, const std::string& name,
                       bool is_input) {
  Reader r{ini, section};
  const auto range = r.numbers("range", 2);
  Variable v;
  v.name = name;
  v.lo = range[0];
  v.hi = range[1];
  if (!(v.lo < v.hi)) ini.fail(ini.line_of(section, "range"), "range must satisfy lo < hi");
  v.units = ini.take(section, "units").value_or("");
  if (is_input) {
    const std::string sig = r.ini.require(section, "signal");
    const auto s = signal_from_name(lower(trim(sig)));
    if (!s)
      ini.fail(ini.line_of(section, "signal"),
               "unknown signal '" + sig +
                   "' (expected position_x, position_y, radial_error, derivative_x or derivative_y)");
    v.signal = *s;
  }
  if (auto labels = ini.take(section, "terms")) {
    v = uniform_partition(v.name, v.lo, v.hi, split_list(*labels, ','), v.units, v.signal);
  }
  // Explicit terms: term.LABEL = a, b, c, d. a < b == c < d is a triangle.
  for (const auto& e : ini.take_all(section)) {
    if (e.key.rfind("term.", 0) != 0) continue;
    const std::string label = e.key.substr(5);
    const auto pts = parse_number_list(e.value, r.where(e.key));
    if (pts.size() != 4) ini.fail(e.line, "term '" + label + "' needs four breakpoints a, b, c, d");
    if (v.term_index(label)) ini.fail(e.line, "term '" + label + "' defined twice");
    v.terms.push_back(pts[0] < pts[1] && pts[1] == pts[2] && pts[2] < pts[3]
                          ? MembershipFunction::triangle(label, pts[0], pts[1], pts[3])
                          : MembershipFunction::trapezoid(label, pts[0], pts[1], pts[2], pts[3]));
  }
  // take_all marked everything; re-flag keys that nothing above recognises.
  for (const auto& e : ini.take_all(section)) {
    static const char* known[] = {"range", "units", "signal", "terms"};
    const bool ok = std::find(std::begin(known), std::end(known), e.key) != std::end(known) ||
                    e.key.rfind("term.", 0) == 0;
    if (!ok || (!is_input && e.key == "signal"))
      ini.fail(e.line, "unknown key '" + e.key + "' in [" + section + "]");
  }
  if (v.terms.empty()) ini.fail(ini.line_of(section, ""), "variable '" + name + "' declares no terms");
  return v;
}

int index_of(const std::vector<Variable>& vars, const std::string& name) {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

// "X:ENP error:EPP -> roll:PP pitch:Z"
Rule parse_rule_line(const IniFile& ini, int line, const std::string& text,
                     const FuzzyControllerSpec& spec) {
  const auto arrow = text.find("->");
  if (arrow == std::string::npos) ini.fail(line, "rule needs 'antecedents -> consequents'");
  Rule rule;
  rule.antecedent.assign(spec.inputs.size(), std::nullopt);
  rule.consequent.assign(spec.outputs.size(), std::nullopt);
  auto fill = [&](const std::string& part, const std::vector<Variable>& vars,
                  std::vector<std::optional<int>>& slots) {
    for (const auto& tok : split_list(part, ' ')) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) ini.fail(line, "expected 'variable:term', got '" + tok + "'");
      const std::string var = tok.substr(0, colon), term = tok.substr(colon + 1);
      const int vi = index_of(vars, var);
      if (vi < 0) ini.fail(line, "rule names unknown variable '" + var + "'");
      const auto ti = vars[vi].term_index(term);
      if (!ti) ini.fail(line, "variable '" + var + "' has no term '" + term + "'");
      if (slots[vi]) ini.fail(line, "variable '" + var + "' appears twice in one rule");
      slots[vi] = *ti;
    }
  };
  fill(text.substr(0, arrow), spec.inputs, rule.antecedent);
  fill(text.substr(arrow + 2), spec.outputs, rule.consequent);
  return rule;
}

// [rules.OUTPUT] table: rows = VAR, cols = VAR, then ROWTERM = one consequent per column ('-' = none).
void load_rule_table(IniFile& ini, const std::string& section, FuzzyControllerSpec& spec) {
  const std::string out_name = section.substr(std::string("rules.").size());
  const int oi = index_of(spec.outputs, out_name);
  if (oi < 0) ini.fail(ini.line_of(section, ""), "rule table for unknown output '" + out_name + "'");
  const std::string rows_name = trim(ini.require(section, "rows"));
  const int ri = index_of(spec.inputs, rows_name);
  if (ri < 0) ini.fail(ini.line_of(section, "rows"), "unknown input '" + rows_name + "'");
  std::optional<int> ci;
  if (auto cols = ini.take(section, "cols")) {
    const int c = index_of(spec.inputs, trim(*cols));
    if (c < 0 || c == ri) ini.fail(ini.line_of(section, "cols"), "bad column input '" + *cols + "'");
    ci = c;
  }
  const Variable& rv = spec.inputs[ri];
  const Variable& ov = spec.outputs[oi];
  for (const auto& e : ini.take_all(section)) {
    if (e.key == "rows" || e.key == "cols") continue;
    const auto row = rv.term_index(e.key);
    if (!row) ini.fail(e.line, "input '" + rv.name + "' has no term '" + e.key + "'");
    const auto cells = split_list(e.value, ' ');
    const std::size_t width = ci ? spec.inputs[*ci].terms.size() : 1;
    if (cells.size() != width)
      ini.fail(e.line, "row '" + e.key + "' needs " + std::to_string(width) + " entries");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c] == "-") continue;
      const auto term = ov.term_index(cells[c]);
      if (!term) ini.fail(e.line, "output '" + ov.name + "' has no term '" + cells[c] + "'");
      Rule r;
      r.antecedent.assign(spec.inputs.size(), std::nullopt);
      r.consequent.assign(spec.outputs.size(), std::nullopt);
      r.antecedent[ri] = *row;
      if (ci) r.antecedent[*ci] = static_cast<int>(c);
      r.consequent[oi] = *term;
      spec.rules.push_back(std::move(r));
    }
  }
}

}  // namespace

LoadedController load_controller(IniFile& ini) {
  LoadedController out;
  FuzzyControllerSpec& spec = out.spec;
  const std::string kind_text = ini.require("controller", "kind");
  const auto kind = controller_kind_from_string(trim(kind_text));
  if (!kind)
    ini.fail(ini.line_of("controller", "kind"),
             "unknown controller kind '" + kind_text + "' (expected Fuzzy1, Fuzzy2, Fuzzy3 or FuzzyPD)");
  spec.kind = *kind;
  spec.name = ini.take("controller", "name").value_or(to_string(*kind));
  Reader r{ini, "controller"};
  out.gains.proportional = r.number_or("proportional_gain", 1.0);
  out.gains.derivative = r.number_or("derivative_gain", 1.0);

  for (const auto& sec : ini.sections_with_prefix("input."))
    spec.inputs.push_back(load_variable(ini, sec, sec.substr(6), true));
  for (const auto& sec : ini.sections_with_prefix("output."))
    spec.outputs.push_back(load_variable(ini, sec, sec.substr(7), false));
  if (spec.inputs.empty()) ini.fail(ini.line_of("controller", ""), "controller declares no [input.*] sections");
  if (spec.outputs.empty()) ini.fail(ini.line_of("controller", ""), "controller declares no [output.*] sections");

  for (const auto& sec : ini.sections_with_prefix("rules.")) load_rule_table(ini, sec, spec);
  if (ini.has_section("rules"))
    for (const auto& e : ini.take_all("rules")) {
      if (e.key.rfind("rule.", 0) != 0) ini.fail(e.line, "keys in [rules] must be rule.N");
      spec.rules.push_back(parse_rule_line(ini, e.line, e.value, spec));
    }
  wrap_contract(ini, ini.line_of("controller", ""), [&] { spec.validate(); });
  if (spec.rules.empty()) ini.fail(ini.line_of("controller", ""), "controller has no rules");
  return out;
}

LoadedController load_controller_file(const std::filesystem::path& path) {
  IniFile ini = IniFile::load(path);
  LoadedController c = load_controller(ini);
  ini.reject_unused();
  return c;
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("invalid experiment: " + msg);
  };
  check(duration > 0, "duration must be positive");
  check(initial_position.allFinite() && initial_velocity.allFinite(), "initial state must be finite");
  check(initial_position.cwiseAbs().maxCoeff() <= plant.plate_half_extent,
        "initial position lies outside the plate");
  check(band_window > 0, "band_window must be positive");
  check(stabilization_band > 0 && stabilization_hold > 0, "stabilization band and hold must be positive");
  try {
    controller.validate();
    plant.validate();
    geometry.validate();
    legs.validate();
    scene.validate();
    pipeline.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("invalid experiment: ") + e.what());
  }
}

namespace {

// Sections that may live either in the experiment file or in the referenced platform file.
void load_platform_sections(IniFile& ini, ExperimentConfig& cfg) {
  cfg.geometry = load_geometry(ini);
  cfg.plant = load_plant(ini);
  cfg.legs = load_legs(ini);
  cfg.scene = load_scene(ini);
  cfg.pipeline = load_pipeline(ini);
}

bool has_any_platform_section(const IniFile& ini) {
  for (const char* s : {"geometry", "plant", "legs", "scene", "pipeline"})
    if (ini.has_section(s)) return true;
  return false;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  IniFile ini = IniFile::load(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path rel(trim(p));
    return rel.is_absolute() ? rel : base / rel;
  };

  ExperimentConfig cfg;
  if (!ini.has_section("experiment"))
    throw ConfigError(path.string() +
                      ": missing section [experiment]; required keys: duration, initial_x, "
                      "initial_y, and either controller = <kind or file> or an inline [controller]");
  Reader r{ini, "experiment"};
  cfg.name = ini.take("experiment", "name").value_or(path.stem().string());
  cfg.duration = r.number("duration");
  cfg.initial_position = Vec2d(r.number("initial_x"), r.number("initial_y"));
  cfg.initial_velocity = Vec2d(r.number_or("initial_vx", 0), r.number_or("initial_vy", 0));
  if (auto s = ini.take("experiment", "sensor")) {
    const auto m = sensor_mode_from_string(*s);
    if (!m) ini.fail(ini.line_of("experiment", "sensor"), "sensor must be 'direct' or 'vision'");
    cfg.sensor = *m;
  }
  if (auto s = ini.take("experiment", "seed")) {
    const long v = parse_integer(*s, r.where("seed"));
    if (v < 0) ini.fail(ini.line_of("experiment", "seed"), "seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (auto s = ini.take("experiment", "out_dir")) cfg.out_dir = resolve(*s);
  cfg.band_window = r.number_or("band_window", cfg.band_window);
  cfg.stabilization_band = r.number_or("stabilization_band", cfg.stabilization_band);
  cfg.stabilization_hold = r.number_or("stabilization_hold", cfg.stabilization_hold);

  const auto controller_ref = ini.take("experiment", "controller");
  if (controller_ref && ini.has_section("controller"))
    ini.fail(ini.line_of("experiment", "controller"),
             "controller given both by reference and as an inline [controller] section");
  if (controller_ref) {
    if (const auto kind = controller_kind_from_string(trim(*controller_ref))) {
      cfg.controller = shipped_controller(*kind);
      cfg.gains = shipped_gains(*kind);
    } else {
      const auto loaded = load_controller_file(resolve(*controller_ref));
      cfg.controller = loaded.spec;
      cfg.gains = loaded.gains;
    }
  } else if (ini.has_section("controller")) {
    const auto loaded = load_controller(ini);
    cfg.controller = loaded.spec;
    cfg.gains = loaded.gains;
  } else {
    ini.fail(ini.line_of("experiment", ""),
             "no controller: set controller = <Fuzzy1|Fuzzy2|Fuzzy3|FuzzyPD|file> or add [controller]");
  }

  if (auto platform = ini.take("experiment", "platform")) {
    if (has_any_platform_section(ini))
      ini.fail(ini.line_of("experiment", "platform"),
               "platform file given but platform sections also appear inline");
    IniFile pini = IniFile::load(resolve(*platform));
    load_platform_sections(pini, cfg);
    pini.reject_unused();
  } else {
    load_platform_sections(ini, cfg);
  }
  cfg.scene.platform_half_extent = cfg.plant.plate_half_extent;
  cfg.scene.seed = cfg.seed;

  ini.reject_unused();
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------- writers

void write_geometry(std::ostream& out, const PlatformGeometryd& g) {
  out << "[geometry]\n";
  out << "horn_length = " << format_number(g.horn_length) << "\n";
  out << "rod_length = " << format_number(g.rod_length) << "\n";
  out << "home_height = " << format_number(g.home_height) << "\n";
  auto vec = [](const Vec3d& v) {
    return format_number(v.x()) + ", " + format_number(v.y()) + ", " + format_number(v.z());
  };
  for (int i = 0; i < kLegCount; ++i) {
    const std::string n = std::to_string(i + 1);
    out << "base_anchor." << n << " = " << vec(g.base_anchors[i]) << "\n";
    out << "platform_joint." << n << " = " << vec(g.platform_joints[i]) << "\n";
    out << "horn_heading." << n << " = " << format_number(rad2deg(g.horn_axis_heading[i])) << "\n";
  }
  out << "\n";
}

void write_plant(std::ostream& out, const PlantParams& p) {
  out << "[plant]\n"
      << "plate_half_extent = " << format_number(p.plate_half_extent) << "\n"
      << "gravity = " << format_number(p.gravity) << "\n"
      << "rolling_factor = " << format_number(p.rolling_factor) << "\n"
      << "viscous_damping = " << format_number(p.viscous_damping) << "\n"
      << "actuator_rate_limit = " << format_number(p.actuator_rate_limit) << "\n"
      << "sensor_period = " << format_number(p.sensor_period) << "\n"
      << "integrator_dt = " << format_number(p.integrator_dt) << "\n\n";
}

void write_legs(std::ostream& out, const LegMasses& m) {
  out << "[legs]\nhorn_mass = " << format_number(m.horn) << "\nrod_mass = " << format_number(m.rod)
      << "\n\n";
}

void write_scene(std::ostream& out, const SceneConfig& s) {
  auto col = [](const Rgb& c) {
    return std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " + std::to_string(c[2]);
  };
  out << "[scene]\n"
      << "width = " << s.width << "\n"
      << "height = " << s.height << "\n"
      << "mm_per_pixel = " << format_number(s.mm_per_pixel) << "\n"
      << "ball_radius = " << format_number(s.ball_radius) << "\n"
      << "background = " << col(s.background) << "\n"
      << "platform = " << col(s.platform) << "\n"
      << "ball = " << col(s.ball) << "\n"
      << "supersample = " << s.supersample << "\n"
      << "noise_sigma = " << format_number(s.noise_sigma) << "\n\n";
}

void write_pipeline(std::ostream& out, const PipelineConfig& p) {
  auto pair = [](double a, double b) { return format_number(a) + ", " + format_number(b); };
  out << "[pipeline]\n"
      << "blur_sigma = " << format_number(p.blur_sigma) << "\n"
      << "ball_hue = " << pair(p.ball_range.hue_lo, p.ball_range.hue_hi) << "\n"
      << "ball_saturation = " << pair(p.ball_range.sat_lo, p.ball_range.sat_hi) << "\n"
      << "ball_value = " << pair(p.ball_range.val_lo, p.ball_range.val_hi) << "\n"
      << "platform_max_value = " << format_number(p.platform_max_value) << "\n"
      << "min_ball_pixels = " << p.min_ball_pixels << "\n"
      << "max_ball_pixels = " << p.max_ball_pixels << "\n\n";
}

void write_controller(std::ostream& out, const FuzzyControllerSpec& spec,
                      const ControllerGains& gains) {
  out << "[controller]\n"
      << "name = " << spec.name << "\n"
      << "kind = " << to_string(spec.kind) << "\n"
      << "proportional_gain = " << format_number(gains.proportional) << "\n"
      << "derivative_gain = " << format_number(gains.derivative) << "\n\n";
  auto var = [&](const char* prefix, const Variable& v, bool input) {
    out << "[" << prefix << v.name << "]\n";
    out << "range = " << format_number(v.lo) << ", " << format_number(v.hi) << "\n";
    if (!v.units.empty()) out << "units = " << v.units << "\n";
    if (input) out << "signal = " << signal_name(v.signal) << "\n";
    for (const auto& t : v.terms)
      out << "term." << t.label << " = " << format_number(t.points[0]) << ", "
          << format_number(t.points[1]) << ", " << format_number(t.points[2]) << ", "
          << format_number(t.points[3]) << "\n";
    out << "\n";
  };
  for (const auto& v : spec.inputs) var("input.", v, true);
  for (const auto& v : spec.outputs) var("output.", v, false);
  out << "[rules]\n";
  for (std::size_t r = 0; r < spec.rules.size(); ++r) {
    const Rule& rule = spec.rules[r];
    out << "rule." << (r + 1) << " =";
    for (std::size_t i = 0; i < rule.antecedent.size(); ++i)
      if (rule.antecedent[i])
        out << " " << spec.inputs[i].name << ":" << spec.inputs[i].terms[*rule.antecedent[i]].label;
    out << " ->";
    for (std::size_t i = 0; i < rule.consequent.size(); ++i)
      if (rule.consequent[i])
        out << " " << spec.outputs[i].name << ":" << spec.outputs[i].terms[*rule.consequent[i]].label;
    out << "\n";
  }
  out << "\n";
}

void write_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "[experiment]\n"
      << "name = " << cfg.name << "\n"
      << "duration = " << format_number(cfg.duration) << "\n"
      << "initial_x = " << format_number(cfg.initial_position.x()) << "\n"
      << "initial_y = " << format_number(cfg.initial_position.y()) << "\n"
      << "initial_vx = " << format_number(cfg.initial_velocity.x()) << "\n"
      << "initial_vy = " << format_number(cfg.initial_velocity.y()) << "\n"
      << "sensor = " << to_string(cfg.sensor) << "\n"
      << "seed = " << cfg.seed << "\n"
      << "out_dir = " << std::filesystem::absolute(cfg.out_dir).string() << "\n"
      << "band_window = " << format_number(cfg.band_window) << "\n"
      << "stabilization_band = " << format_number(cfg.stabilization_band) << "\n"
      << "stabilization_hold = " << format_number(cfg.stabilization_hold) << "\n\n";
  write_controller(out, cfg.controller, cfg.gains);
  write_geometry(out, cfg.geometry);
  write_plant(out, cfg.plant);
  write_legs(out, cfg.legs);
  write_scene(out, cfg.scene);
  write_pipeline(out, cfg.pipeline);
  if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace stewart
