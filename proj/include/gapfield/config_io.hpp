#pragma once

// Plain-text run configuration: [scene], [mesh], [sweep] and [verify] sections of key = value
// lines. '#' starts a comment. Numbers are written with 17 significant digits so that
// write -> parse reproduces every field exactly.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gapfield/sweeps.hpp"

namespace gapfield {

struct RunConfig {
  Scene scene;
  MeshControls mesh;
  bool has_sweep = false;       ///< a [sweep] section was present
  bool sweep_configured = false;///< ... and it named at least the varied parameter
  SweepSpec sweep;              ///< scene and mesh mirror the fields above
  LemmaOptions verify;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.scene == b.scene && a.mesh == b.mesh && a.has_sweep == b.has_sweep &&
           a.sweep_configured == b.sweep_configured && a.sweep == b.sweep &&
           a.verify.eps_grid == b.verify.eps_grid && a.verify.spread_limit == b.verify.spread_limit &&
           a.verify.sign_tolerance == b.verify.sign_tolerance &&
           a.verify.residual_tolerance == b.verify.residual_tolerance &&
           a.verify.health_tolerance == b.verify.health_tolerance && a.verify.nestings == b.verify.nestings &&
           a.verify.seed == b.verify.seed && a.verify.workers == b.verify.workers;
  }
};

namespace detail {

struct Token {
  std::string text;
  int column = 1;
};

inline std::vector<Token> tokens_of(const std::string& s, int first_column) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back({s.substr(i, j - i), first_column + static_cast<int>(i)});
    i = j;
  }
  return out;
}

[[noreturn]] inline void parse_fail(int line, int column, const std::string& what) {
  fail(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

inline double number_of(const Token& t, int line) {
  char* end = nullptr;
  double v = std::strtod(t.text.c_str(), &end);
  if (t.text.empty() || *end != '\0' || !std::isfinite(v)) parse_fail(line, t.column, "'" + t.text + "' is not a finite number");
  return v;
}

inline long long integer_of(const Token& t, int line) {
  char* end = nullptr;
  long long v = std::strtoll(t.text.c_str(), &end, 10);
  if (t.text.empty() || *end != '\0') parse_fail(line, t.column, "'" + t.text + "' is not an integer");
  return v;
}

inline std::vector<double> numbers_of(const std::vector<Token>& ts, std::size_t from, std::size_t to, int line) {
  std::vector<double> v;
  for (std::size_t i = from; i < to; ++i) v.push_back(number_of(ts[i], line));
  return v;
}

// disk cx cy r | ellipse sx sy | fourier cx cy / x_cos / x_sin / y_cos / y_sin
inline Shape shape_of(const std::vector<Token>& ts, int line, int column) {
  if (ts.empty()) parse_fail(line, column, "missing shape");
  const std::string& kind = ts[0].text;
  if (kind == "disk") {
    if (ts.size() != 4) parse_fail(line, ts[0].column, "disk needs cx cy r");
    return Disk{{number_of(ts[1], line), number_of(ts[2], line)}, number_of(ts[3], line)};
  }
  if (kind == "ellipse") {
    if (ts.size() != 3) parse_fail(line, ts[0].column, "ellipse needs semi_x semi_y");
    double a = number_of(ts[1], line), b = number_of(ts[2], line);
    if (!(a > 0.0 && b > 0.0)) parse_fail(line, ts[1].column, "ellipse semi-axes must be positive");
    return make_ellipse({0.0, 0.0}, a, b);
  }
  if (kind == "fourier") {
    std::vector<std::size_t> bars;
    for (std::size_t i = 1; i < ts.size(); ++i)
      if (ts[i].text == "/") bars.push_back(i);
    if (bars.size() != 4 || bars[0] != 3) parse_fail(line, ts[0].column, "fourier needs cx cy / x_cos / x_sin / y_cos / y_sin");
    FourierCurve c;
    c.center = {number_of(ts[1], line), number_of(ts[2], line)};
    c.x_cos = numbers_of(ts, bars[0] + 1, bars[1], line);
    c.x_sin = numbers_of(ts, bars[1] + 1, bars[2], line);
    c.y_cos = numbers_of(ts, bars[2] + 1, bars[3], line);
    c.y_sin = numbers_of(ts, bars[3] + 1, ts.size(), line);
    std::size_t n = c.x_cos.size();
    if (n == 0 || c.x_sin.size() != n || c.y_cos.size() != n || c.y_sin.size() != n)
      parse_fail(line, ts[0].column, "fourier coefficient lists must be non-empty and of equal length");
    try {
      return validated_curve(c);
    } catch (const Error& e) {
      parse_fail(line, ts[0].column, e.what());
    }
  }
  parse_fail(line, ts[0].column, "unknown shape kind '" + kind + "'");
}

inline std::string shape_text(const Shape& s) {
  std::ostringstream os;
  if (const auto* d = std::get_if<Disk>(&s)) {
    os << "disk " << format_number(d->center.x) << ' ' << format_number(d->center.y) << ' ' << format_number(d->radius);
  } else if (const auto* c = std::get_if<FourierCurve>(&s)) {
    os << "fourier " << format_number(c->center.x) << ' ' << format_number(c->center.y);
    for (const auto* list : {&c->x_cos, &c->x_sin, &c->y_cos, &c->y_sin}) {
      os << " /";
      for (double v : *list) os << ' ' << format_number(v);
    }
  } else {
    fail(ErrorKind::InvalidUsage, "parallel curves have no text form");
  }
  return os.str();
}

// background = a0 a1 ... with each coefficient "re" or "re:im"; H = Re sum a_k z^k
inline HarmonicBackground background_of(const std::vector<Token>& ts, int line, int column) {
  if (ts.empty()) parse_fail(line, column, "background needs at least one coefficient");
  HarmonicBackground h;
  for (const auto& t : ts) {
    auto colon = t.text.find(':');
    if (colon == std::string::npos) {
      h.coeffs.emplace_back(number_of(t, line), 0.0);
    } else {
      Token re{t.text.substr(0, colon), t.column}, im{t.text.substr(colon + 1), t.column + static_cast<int>(colon) + 1};
      h.coeffs.emplace_back(number_of(re, line), number_of(im, line));
    }
  }
  return h;
}

inline std::string background_text(const HarmonicBackground& h) {
  std::ostringstream os;
  for (std::size_t k = 0; k < h.coeffs.size(); ++k)
    os << (k ? " " : "") << format_number(h.coeffs[k].real()) << ':' << format_number(h.coeffs[k].imag());
  return os.str();
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
  using detail::parse_fail;
  RunConfig rc;
  std::string section;
  std::set<std::string> seen, sections;
  std::string raw;
  int line = 0;
  std::size_t sweep_keys = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string text = raw.substr(0, raw.find('#'));
    if (!text.empty() && text.back() == '\r') text.pop_back();
    auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (text[first] == '[') {
      auto close = text.find(']', first);
      if (close == std::string::npos) parse_fail(line, static_cast<int>(first) + 1, "unterminated section header");
      if (text.find_first_not_of(" \t", close + 1) != std::string::npos)
        parse_fail(line, static_cast<int>(close) + 2, "text after section header");
      section = text.substr(first + 1, close - first - 1);
      if (section != "scene" && section != "mesh" && section != "sweep" && section != "verify")
        parse_fail(line, static_cast<int>(first) + 2, "unknown section [" + section + "]");
      if (!sections.insert(section).second) parse_fail(line, static_cast<int>(first) + 1, "duplicate section [" + section + "]");
      if (section == "sweep") rc.has_sweep = true;
      continue;
    }
    auto eq = text.find('=');
    if (eq == std::string::npos) parse_fail(line, static_cast<int>(first) + 1, "expected key = value");
    std::string key = text.substr(first, eq - first);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    int key_col = static_cast<int>(first) + 1;
    if (key.empty()) parse_fail(line, key_col, "empty key");
    if (section.empty()) parse_fail(line, key_col, "key outside of any section");
    if (!seen.insert(section + "." + key).second) parse_fail(line, key_col, "duplicate key '" + key + "'");
    int value_col = static_cast<int>(eq) + 2;
    auto ts = detail::tokens_of(text.substr(eq + 1), value_col);
    auto one = [&]() -> const detail::Token& {
      if (ts.size() != 1) parse_fail(line, ts.empty() ? value_col : ts[1].column, "expected exactly one value");
      return ts[0];
    };
    auto num = [&] { return detail::number_of(one(), line); };
    auto integer = [&] { return detail::integer_of(one(), line); };
    auto nonneg = [&] {
      long long v = integer();
      if (v < 0) parse_fail(line, ts[0].column, "value must be non-negative");
      return v;
    };

    if (section == "scene") {
      if (key == "family") {
        try {
          rc.scene.family = parse_family(one().text);
        } catch (const Error&) {
          parse_fail(line, ts[0].column, "unknown family '" + ts[0].text + "'");
        }
      } else if (key == "left" || key == "center" || key == "right") {
        Shape s = detail::shape_of(ts, line, value_col);
        (key == "left" ? rc.scene.shapes.left : key == "center" ? rc.scene.shapes.center : rc.scene.shapes.right) = s;
      } else if (key == "overlap") {
        rc.scene.shapes.overlap = num();
      } else if (key == "background") {
        rc.scene.background = detail::background_of(ts, line, value_col);
      } else if (key == "r1" || key == "r2" || key == "r3" || key == "a" || key == "eps" || key == "eps1" ||
                 key == "eps2") {
        rc.scene.params[key] = num();
      } else {
        parse_fail(line, key_col, "unknown scene key '" + key + "'");
      }
    } else if (section == "mesh") {
      if (key == "base_panels") rc.mesh.base_panels = static_cast<int>(nonneg());
      else if (key == "gap_factor") rc.mesh.gap_factor = num();
      else if (key == "corner_levels") rc.mesh.corner_levels = static_cast<int>(nonneg());
      else if (key == "corner_floor") rc.mesh.corner_floor = num();
      else if (key == "proximity") rc.mesh.proximity = num();
      else if (key == "max_nodes") rc.mesh.max_nodes = static_cast<std::size_t>(nonneg());
      else if (key == "min_panel_length") rc.mesh.min_panel_length = num();
      else if (key == "near_factor") rc.mesh.near_factor = num();
      else if (key == "condition_limit") rc.mesh.condition_limit = num();
      else if (key == "threads") rc.mesh.threads = static_cast<unsigned>(nonneg());
      else parse_fail(line, key_col, "unknown mesh key '" + key + "'");
    } else if (section == "sweep") {
      ++sweep_keys;
      if (key == "vary") {
        rc.sweep.vary = one().text;
        rc.sweep_configured = true;
      } else if (key == "min") rc.sweep.min = num();
      else if (key == "max") rc.sweep.max = num();
      else if (key == "points") rc.sweep.points = static_cast<int>(integer());
      else if (key.rfind("tie.", 0) == 0 && key.size() > 4) rc.sweep.ties[key.substr(4)] = num();
      else if (key == "quantities") {
        rc.sweep.quantities.clear();
        for (const auto& t : ts) rc.sweep.quantities.push_back(t.text);
      } else if (key == "seed") rc.sweep.seed = static_cast<std::uint64_t>(nonneg());
      else if (key == "workers") rc.sweep.workers = static_cast<unsigned>(nonneg());
      else if (key == "spread_limit") rc.sweep.spread_limit = num();
      else parse_fail(line, key_col, "unknown sweep key '" + key + "'");
    } else {
      if (key == "eps_grid") {
        if (ts.empty()) parse_fail(line, value_col, "eps_grid needs at least one value");
        rc.verify.eps_grid = detail::numbers_of(ts, 0, ts.size(), line);
      } else if (key == "spread_limit") rc.verify.spread_limit = num();
      else if (key == "sign_tolerance") rc.verify.sign_tolerance = num();
      else if (key == "residual_tolerance") rc.verify.residual_tolerance = num();
      else if (key == "health_tolerance") rc.verify.health_tolerance = num();
      else if (key == "nestings") rc.verify.nestings = static_cast<int>(nonneg());
      else if (key == "seed") rc.verify.seed = static_cast<std::uint64_t>(nonneg());
      else if (key == "workers") rc.verify.workers = static_cast<unsigned>(nonneg());
      else parse_fail(line, key_col, "unknown verify key '" + key + "'");
    }
  }
  if (!sections.count("scene")) parse_fail(line + 1, 1, "missing [scene] section");
  if (rc.has_sweep && sweep_keys > 0 && !rc.sweep_configured)
    parse_fail(line + 1, 1, "[sweep] section lacks 'vary'");
  rc.sweep.scene = rc.scene;
  rc.sweep.mesh = rc.mesh;
  return rc;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidUsage, "cannot open config file '" + path + "'");
  return parse_config(in);
}

inline void write_config(std::ostream& os, const RunConfig& rc) {
  const Scene& s = rc.scene;
  os << "[scene]\n";
  os << "family = " << to_string(s.family) << '\n';
  for (const auto& [k, v] : s.params) os << k << " = " << format_number(v) << '\n';
  os << "left = " << detail::shape_text(s.shapes.left) << '\n';
  os << "center = " << detail::shape_text(s.shapes.center) << '\n';
  os << "right = " << detail::shape_text(s.shapes.right) << '\n';
  os << "overlap = " << format_number(s.shapes.overlap) << '\n';
  os << "background = " << detail::background_text(s.background) << '\n';

  const MeshControls& m = rc.mesh;
  os << "\n[mesh]\n";
  os << "base_panels = " << m.base_panels << '\n';
  os << "gap_factor = " << format_number(m.gap_factor) << '\n';
  os << "corner_levels = " << m.corner_levels << '\n';
  os << "corner_floor = " << format_number(m.corner_floor) << '\n';
  os << "proximity = " << format_number(m.proximity) << '\n';
  os << "max_nodes = " << m.max_nodes << '\n';
  os << "min_panel_length = " << format_number(m.min_panel_length) << '\n';
  os << "near_factor = " << format_number(m.near_factor) << '\n';
  os << "condition_limit = " << format_number(m.condition_limit) << '\n';
  os << "threads = " << m.threads << '\n';

  if (rc.has_sweep) {
    const SweepSpec& w = rc.sweep;
    os << "\n[sweep]\n";
    if (rc.sweep_configured) {
      os << "vary = " << w.vary << '\n';
      os << "min = " << format_number(w.min) << '\n';
      os << "max = " << format_number(w.max) << '\n';
      os << "points = " << w.points << '\n';
      for (const auto& [k, v] : w.ties) os << "tie." << k << " = " << format_number(v) << '\n';
      if (!w.quantities.empty()) {
        os << "quantities =";
        for (const auto& q : w.quantities) os << ' ' << q;
        os << '\n';
      }
      os << "seed = " << w.seed << '\n';
      os << "workers = " << w.workers << '\n';
      os << "spread_limit = " << format_number(w.spread_limit) << '\n';
    }
  }

  const LemmaOptions& v = rc.verify;
  os << "\n[verify]\n";
  os << "eps_grid =";
  for (double e : v.eps_grid) os << ' ' << format_number(e);
  os << '\n';
  os << "spread_limit = " << format_number(v.spread_limit) << '\n';
  os << "sign_tolerance = " << format_number(v.sign_tolerance) << '\n';
  os << "residual_tolerance = " << format_number(v.residual_tolerance) << '\n';
  os << "health_tolerance = " << format_number(v.health_tolerance) << '\n';
  os << "nestings = " << v.nestings << '\n';
  os << "seed = " << v.seed << '\n';
  os << "workers = " << v.workers << '\n';
}

inline std::string config_text(const RunConfig& rc) {
  std::ostringstream os;
  write_config(os, rc);
  return os.str();
}

}  // namespace gapfield
