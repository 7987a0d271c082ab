#pragma once

// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment. Unknown keys are rejected.
//
//   domain_origin   = [0, 0]
//   domain_width    = 1
//   domain_height   = 1
//   epsilon         = 1/4                 (or epsilon_list = [1/4, 1/8])
//   cell_resolution = 8
//   polyline        = [0.25, 0.5, 0.75, 0.5]     repeatable, x y pairs
//   cell_polyline   = 3: [0.3, 0.3, 0.7, 0.7]    repeatable, per-cell override
//   lambda = 1   mu = 1   griffith = 0.001
//   bc_matrix       = [0, 0, 0, 0.1]      row-major 2x2
//   bc_offset       = [0, 0]
//   l               = 0.25                (or l_list = [0.1, 0.25, 0.5])
//   backend         = discrete | phasefield
//   solver_tolerance, solver_max_iterations, rho
//   policy          = all | tip-neighborhood(r)
//   candidate_cap, greedy_threshold, greedy_evaluation = local | exact, local_radius
//   at_eta = auto | <length>, at_k_eta, at_tolerance, at_max_sweeps
//   seed, output_dir, workers, record_wall_time = true | false

#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"
#include "material.hpp"
#include "minimize.hpp"
#include "solve.hpp"

namespace msfrac {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& reason)
      : std::runtime_error(key.empty() ? reason : "config key '" + key + "': " + reason), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Domain domain;
  std::vector<double> epsilons{0.25};
  int cell_resolution = 8;
  PreCrackPattern pattern{{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}}};
  std::map<std::size_t, PreCrackPattern> overrides;
  Material material{1.0, 1.0, 0.001};
  BoundaryCondition bc{(Mat2() << 0.0, 0.0, 0.0, 0.1).finished(), Vec2::Zero()};
  std::vector<double> ls{0.25};
  std::string backend = "discrete";
  SolverOptions solver;
  CandidatePolicy policy{CandidatePolicy::Kind::TipNeighborhood, 1};
  std::size_t candidate_cap = 12;
  double greedy_threshold = 1e-10;
  GreedyOptions::Mode greedy_evaluation = GreedyOptions::Mode::Local;
  int local_radius = 2;
  std::optional<double> at_eta;  // unset: 2h
  double at_k_eta = 1e-6;
  double at_tolerance = 1e-8;
  std::size_t at_max_sweeps = 200;
  long seed = 0;
  std::string output_dir = "out";
  std::size_t workers = 1;
  bool record_wall_time = false;

  GreedyOptions greedy_options() const {
    GreedyOptions g;
    g.threshold = greedy_threshold;
    g.mode = greedy_evaluation;
    g.local_radius = local_radius;
    return g;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// A finite decimal number or a fraction a/b.
inline double parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  const auto as_double = [&](const std::string& t) {
    if (t.empty()) throw ConfigError(key, "expected a number, got '" + raw + "'");
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(t.c_str(), &end);
    if (errno != 0 || end != t.c_str() + t.size() || !std::isfinite(x))
      throw ConfigError(key, "expected a number, got '" + raw + "'");
    return x;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return as_double(text);
  const double den = as_double(trim(text.substr(slash + 1)));
  if (den == 0.0) throw ConfigError(key, "zero denominator in '" + raw + "'");
  return as_double(trim(text.substr(0, slash))) / den;
}

inline long parse_integer(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  char* end = nullptr;
  errno = 0;
  const long x = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || errno != 0 || end != text.c_str() + text.size())
    throw ConfigError(key, "expected an integer, got '" + raw + "'");
  return x;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']')
    throw ConfigError(key, "expected a bracketed list, got '" + raw + "'");
  const std::string body = trim(text.substr(1, text.size() - 2));
  std::vector<double> out;
  if (body.empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  return out;
}

inline std::vector<Vec2> parse_polyline(const std::string& key, const std::string& raw) {
  const auto xs = parse_list(key, raw);
  if (xs.size() % 2 != 0) throw ConfigError(key, "polyline needs an even number of coordinates");
  std::vector<Vec2> line;
  for (std::size_t i = 0; i < xs.size(); i += 2) line.emplace_back(xs[i], xs[i + 1]);
  return line;
}

inline bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(key, "expected true or false, got '" + raw + "'");
}

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_number(xs[i]);
  return s + "]";
}

inline std::string format_polyline(const std::vector<Vec2>& line) {
  std::vector<double> xs;
  for (const Vec2& p : line) {
    xs.push_back(p.x());
    xs.push_back(p.y());
  }
  return format_list(xs);
}

}  // namespace detail

/// Checks every numeric key against its module precondition.
inline void validate_config(const RunConfig& c) {
  const auto require = [](bool ok, const char* key, const char* reason) {
    if (!ok) throw ConfigError(key, reason);
  };
  require(c.domain.width > 0.0, "domain_width", "must be positive");
  require(c.domain.height > 0.0, "domain_height", "must be positive");
  require(!c.epsilons.empty(), "epsilon_list", "must not be empty");
  for (double e : c.epsilons) require(e > 0.0, "epsilon_list", "every epsilon must be positive");
  require(c.cell_resolution >= 2, "cell_resolution", "must be at least 2");
  if (auto why = validate_pattern(c.pattern)) throw ConfigError("polyline", *why);
  for (const auto& [cell, p] : c.overrides)
    if (auto why = validate_pattern(p)) throw ConfigError("cell_polyline", "cell " + std::to_string(cell) + ": " + *why);
  require(c.material.mu > 0.0, "mu", "must be positive");
  require(c.material.lambda + c.material.mu > 0.0, "lambda", "lambda + mu must be positive");
  require(c.material.griffith >= 0.0, "griffith", "must be non-negative");
  require(c.bc.matrix.allFinite(), "bc_matrix", "must be finite");
  require(c.bc.offset.allFinite(), "bc_offset", "must be finite");
  require(!c.ls.empty(), "l_list", "must not be empty");
  for (double l : c.ls) require(l > 0.0, "l_list", "every l must be positive");
  require(c.backend == "discrete" || c.backend == "phasefield", "backend", "must be discrete or phasefield");
  require(c.solver.tolerance > 0.0, "solver_tolerance", "must be positive");
  require(c.solver.rho >= 0.0, "rho", "must be non-negative");
  require(c.candidate_cap <= oracle_candidate_limit, "candidate_cap", "must not exceed 16");
  require(c.greedy_threshold >= 0.0, "greedy_threshold", "must be non-negative");
  require(c.local_radius >= 0, "local_radius", "must be non-negative");
  require(!c.at_eta || *c.at_eta > 0.0, "at_eta", "must be positive");
  require(c.at_k_eta > 0.0 && c.at_k_eta <= 1e-6, "at_k_eta", "must lie in (0, 1e-6]");
  require(c.at_tolerance > 0.0, "at_tolerance", "must be positive");
  require(c.at_max_sweeps >= 1, "at_max_sweeps", "must be at least 1");
  require(c.workers >= 1, "workers", "must be at least 1");
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::set<std::string> seen;
  bool default_pattern = true;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const bool repeatable = key == "polyline" || key == "cell_polyline";
    if (!repeatable && !seen.insert(key).second) throw ConfigError(key, "given more than once");

    using namespace detail;
    if (key == "domain_origin") {
      const auto xs = parse_list(key, value);
      if (xs.size() != 2) throw ConfigError(key, "expected 2 numbers");
      c.domain.origin = Vec2(xs[0], xs[1]);
    } else if (key == "domain_width") {
      c.domain.width = parse_number(key, value);
    } else if (key == "domain_height") {
      c.domain.height = parse_number(key, value);
    } else if (key == "epsilon" || key == "epsilon_list") {
      if (seen.count("epsilon") && seen.count("epsilon_list"))
        throw ConfigError(key, "epsilon and epsilon_list are mutually exclusive");
      c.epsilons = key == "epsilon" ? std::vector<double>{parse_number(key, value)} : parse_list(key, value);
      if (c.epsilons.empty()) throw ConfigError(key, "must not be empty");
    } else if (key == "cell_resolution") {
      c.cell_resolution = static_cast<int>(parse_integer(key, value));
    } else if (key == "polyline") {
      if (default_pattern) c.pattern.polylines.clear();
      default_pattern = false;
      c.pattern.polylines.push_back(parse_polyline(key, value));
    } else if (key == "cell_polyline") {
      const auto colon = value.find(':');
      if (colon == std::string::npos) throw ConfigError(key, "expected '<cell index>: [x, y, ...]'");
      const long cell = parse_integer(key, value.substr(0, colon));
      if (cell < 0) throw ConfigError(key, "cell index must be non-negative");
      c.overrides[static_cast<std::size_t>(cell)].polylines.push_back(parse_polyline(key, value.substr(colon + 1)));
    } else if (key == "lambda") {
      c.material.lambda = parse_number(key, value);
    } else if (key == "mu") {
      c.material.mu = parse_number(key, value);
    } else if (key == "griffith") {
      c.material.griffith = parse_number(key, value);
    } else if (key == "bc_matrix") {
      const auto xs = parse_list(key, value);
      if (xs.size() != 4) throw ConfigError(key, "expected 4 numbers (row-major)");
      c.bc.matrix << xs[0], xs[1], xs[2], xs[3];
    } else if (key == "bc_offset") {
      const auto xs = parse_list(key, value);
      if (xs.size() != 2) throw ConfigError(key, "expected 2 numbers");
      c.bc.offset = Vec2(xs[0], xs[1]);
    } else if (key == "l" || key == "l_list") {
      if (seen.count("l") && seen.count("l_list")) throw ConfigError(key, "l and l_list are mutually exclusive");
      c.ls = key == "l" ? std::vector<double>{parse_number(key, value)} : parse_list(key, value);
      if (c.ls.empty()) throw ConfigError(key, "must not be empty");
    } else if (key == "backend") {
      c.backend = value;
    } else if (key == "solver_tolerance") {
      c.solver.tolerance = parse_number(key, value);
    } else if (key == "solver_max_iterations") {
      const long n = parse_integer(key, value);
      if (n < 0) throw ConfigError(key, "must be non-negative");
      c.solver.max_iterations = static_cast<std::size_t>(n);
    } else if (key == "rho") {
      c.solver.rho = parse_number(key, value);
    } else if (key == "policy") {
      try {
        c.policy = CandidatePolicy::parse(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "candidate_cap") {
      const long n = parse_integer(key, value);
      if (n < 0) throw ConfigError(key, "must be non-negative");
      c.candidate_cap = static_cast<std::size_t>(n);
    } else if (key == "greedy_threshold") {
      c.greedy_threshold = parse_number(key, value);
    } else if (key == "greedy_evaluation") {
      if (value == "local")
        c.greedy_evaluation = GreedyOptions::Mode::Local;
      else if (value == "exact")
        c.greedy_evaluation = GreedyOptions::Mode::Exact;
      else
        throw ConfigError(key, "must be local or exact");
    } else if (key == "local_radius") {
      c.local_radius = static_cast<int>(parse_integer(key, value));
    } else if (key == "at_eta") {
      c.at_eta = value == "auto" ? std::nullopt : std::optional<double>(parse_number(key, value));
    } else if (key == "at_k_eta") {
      c.at_k_eta = parse_number(key, value);
    } else if (key == "at_tolerance") {
      c.at_tolerance = parse_number(key, value);
    } else if (key == "at_max_sweeps") {
      const long n = parse_integer(key, value);
      if (n < 1) throw ConfigError(key, "must be at least 1");
      c.at_max_sweeps = static_cast<std::size_t>(n);
    } else if (key == "seed") {
      c.seed = parse_integer(key, value);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else if (key == "workers") {
      const long n = parse_integer(key, value);
      if (n < 1) throw ConfigError(key, "must be at least 1");
      c.workers = static_cast<std::size_t>(n);
    } else if (key == "record_wall_time") {
      c.record_wall_time = parse_bool(key, value);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  validate_config(c);
  return c;
}

/// Canonical text form; parse_config(to_text(c)) reproduces c exactly.
inline std::string to_text(const RunConfig& c) {
  using detail::format_list;
  using detail::format_number;
  std::ostringstream os;
  os << "domain_origin = " << format_list({c.domain.origin.x(), c.domain.origin.y()}) << "\n"
     << "domain_width = " << format_number(c.domain.width) << "\n"
     << "domain_height = " << format_number(c.domain.height) << "\n"
     << "epsilon_list = " << format_list(c.epsilons) << "\n"
     << "cell_resolution = " << c.cell_resolution << "\n";
  for (const auto& line : c.pattern.polylines) os << "polyline = " << detail::format_polyline(line) << "\n";
  for (const auto& [cell, p] : c.overrides)
    for (const auto& line : p.polylines) os << "cell_polyline = " << cell << ": " << detail::format_polyline(line) << "\n";
  os << "lambda = " << format_number(c.material.lambda) << "\n"
     << "mu = " << format_number(c.material.mu) << "\n"
     << "griffith = " << format_number(c.material.griffith) << "\n"
     << "bc_matrix = " << format_list({c.bc.matrix(0, 0), c.bc.matrix(0, 1), c.bc.matrix(1, 0), c.bc.matrix(1, 1)}) << "\n"
     << "bc_offset = " << format_list({c.bc.offset.x(), c.bc.offset.y()}) << "\n"
     << "l_list = " << format_list(c.ls) << "\n"
     << "backend = " << c.backend << "\n"
     << "solver_tolerance = " << format_number(c.solver.tolerance) << "\n"
     << "solver_max_iterations = " << c.solver.max_iterations << "\n"
     << "rho = " << format_number(c.solver.rho) << "\n"
     << "policy = " << c.policy.str() << "\n"
     << "candidate_cap = " << c.candidate_cap << "\n"
     << "greedy_threshold = " << format_number(c.greedy_threshold) << "\n"
     << "greedy_evaluation = " << (c.greedy_evaluation == GreedyOptions::Mode::Exact ? "exact" : "local") << "\n"
     << "local_radius = " << c.local_radius << "\n"
     << "at_eta = " << (c.at_eta ? format_number(*c.at_eta) : std::string("auto")) << "\n"
     << "at_k_eta = " << format_number(c.at_k_eta) << "\n"
     << "at_tolerance = " << format_number(c.at_tolerance) << "\n"
     << "at_max_sweeps = " << c.at_max_sweeps << "\n"
     << "seed = " << c.seed << "\n"
     << "output_dir = " << c.output_dir << "\n"
     << "workers = " << c.workers << "\n"
     << "record_wall_time = " << (c.record_wall_time ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace msfrac
