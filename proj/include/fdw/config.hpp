#ifndef FDW_CONFIG_HPP
#define FDW_CONFIG_HPP

/// \file config.hpp
/// \brief Run configuration: an INI-style file with [problem] and [task]
/// sections. Every key is known in advance; anything else is rejected with
/// its line number.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdw/expr.hpp"
#include "fdw/forward.hpp"

namespace fdw {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct ProblemConfig {
  double alpha = 1.5;
  double x_left = 0.0;
  double x_right = 1.0;
  int n_interior = 63;
  double T = 1.0;
  int n_steps = 256;
  Expr a{"1"};
  Expr B{"0"};
  Expr c{"0"};
  double a0 = 1.0;
  Expr u0{"0"};
  Expr u1{"0"};
  Expr f{"0"};
  Expr g{"1"};
  std::optional<double> g0;
  std::optional<Expr> g_prime;
  std::vector<Side> gamma{Side::right};
  int n_modes = 0;

  SpatialMesh mesh() const { return {x_left, x_right, n_interior}; }
  TimeGrid grid() const { return {T, n_steps}; }
  Coefficients coefficients() const {
    Coefficients k;
    k.a = [e = a](double x) { return e(x); };
    k.B = [e = B](double x) { return e(x); };
    k.c = [e = c](double x) { return e(x); };
    k.a0 = a0;
    return k;
  }
  bool has_source() const { return !f.is_zero(); }
  bool has_initial_data() const { return !u0.is_zero() || !u1.is_zero(); }
};

struct TaskConfig {
  std::uint64_t seed = 42;
  // invert
  std::string data;
  std::string lambda = "discrepancy";  ///< a number, "discrepancy" or "lcurve"
  std::string method = "normal";
  std::string map_mode = "dense";
  int max_iters = 200;
  double cg_tol = 1e-10;
  double noise = 0.0;
  double noise_level = 0.0;  ///< known relative noise in the data file, for the discrepancy principle
  double lambda_min = 1e-12;
  double lambda_max = 1.0;
  int per_decade = 4;
  double tau = 1.1;
  std::optional<Expr> truth;
  // adjoint
  Side probe_side = Side::right;
  int probe_k = 1;
  std::string probe_file;
  int dictionary = 4;
  // ucp
  std::vector<double> laplace_s{2.0, 3.0, 5.0, 8.0, 10.0};
  double T_long = 20.0;
  int ucp_steps = 2000;
  int parabolic_refine = 4;
  double ucp_tolerance = 2e-2;
  // forward
  bool picard = false;
  int picard_iters = 60;
  double picard_tol = 1e-10;
  // verify
  std::string suite = "all";
};

struct RunConfig {
  ProblemConfig problem;
  TaskConfig task;
  std::string source_path;
  /// Resolved key/value pairs per section, as read or defaulted.
  std::map<std::string, std::map<std::string, std::string>> echo;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  Reader(const std::string& section, const std::string& key, const std::string& value, int line)
      : section_(section), key_(key), value_(value), line_(line) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("line " + std::to_string(line_) + ": [" + section_ + "] " + key_ + ": " + why);
  }
  double number() const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(value_, &pos);
      if (pos != value_.size() || !std::isfinite(v)) fail("expected a finite number, got '" + value_ + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("expected a number, got '" + value_ + "'");
    }
  }
  int integer() const {
    try {
      std::size_t pos = 0;
      const long v = std::stol(value_, &pos);
      if (pos != value_.size()) fail("expected an integer, got '" + value_ + "'");
      return static_cast<int>(v);
    } catch (const std::logic_error&) {
      fail("expected an integer, got '" + value_ + "'");
    }
  }
  std::uint64_t unsigned_integer() const {
    if (value_.empty() || value_.find_first_not_of("0123456789") != std::string::npos)
      fail("expected a non-negative integer, got '" + value_ + "'");
    try {
      return std::stoull(value_);
    } catch (const std::logic_error&) {
      fail("integer out of range");
    }
  }
  bool boolean() const {
    if (value_ == "true" || value_ == "yes" || value_ == "1") return true;
    if (value_ == "false" || value_ == "no" || value_ == "0") return false;
    fail("expected true or false, got '" + value_ + "'");
  }
  Expr expr(bool allow_t) const {
    try {
      Expr e(value_);
      if (!allow_t && e.uses_t()) fail("expression may not depend on t");
      if (allow_t && e.uses_x()) fail("expression may not depend on x");
      return e;
    } catch (const ExprError& err) {
      fail(err.what());
    }
  }
  Side side() const {
    if (value_ == "left") return Side::left;
    if (value_ == "right") return Side::right;
    fail("expected left or right, got '" + value_ + "'");
  }
  std::vector<Side> sides() const {
    if (value_ == "both") return {Side::left, Side::right};
    std::vector<Side> out;
    for (const auto& s : split_list(value_)) {
      if (s == "left") out.push_back(Side::left);
      else if (s == "right") out.push_back(Side::right);
      else fail("unknown side '" + s + "'");
    }
    if (out.empty()) fail("at least one side is required");
    if (out.size() == 2 && out[0] == out[1]) fail("duplicate side");
    if (out.size() == 2 && out[0] == Side::right) std::swap(out[0], out[1]);
    if (out.size() > 2) fail("at most two sides");
    return out;
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& s : split_list(value_)) out.push_back(Reader(section_, key_, s, line_).number());
    if (out.empty()) fail("expected a comma-separated list of numbers");
    return out;
  }
  std::string choice(std::initializer_list<const char*> allowed) const {
    for (const char* a : allowed)
      if (value_ == a) return value_;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    fail("expected one of {" + list + "}, got '" + value_ + "'");
  }
  const std::string& text() const { return value_; }
  int line() const { return line_; }

 private:
  std::string section_, key_, value_;
  int line_;
};

inline std::string side_list(const std::vector<Side>& s) {
  std::string out;
  for (Side x : s) out += std::string(out.empty() ? "" : ",") + to_string(x);
  return out;
}

inline std::string num(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace detail

inline void apply_problem_key(ProblemConfig& p, const std::string& key, const detail::Reader& r) {
  if (key == "alpha") p.alpha = r.number();
  else if (key == "x_left") p.x_left = r.number();
  else if (key == "x_right") p.x_right = r.number();
  else if (key == "n_interior") p.n_interior = r.integer();
  else if (key == "T") p.T = r.number();
  else if (key == "n_steps") p.n_steps = r.integer();
  else if (key == "a") p.a = r.expr(false);
  else if (key == "B") p.B = r.expr(false);
  else if (key == "c") p.c = r.expr(false);
  else if (key == "a0") p.a0 = r.number();
  else if (key == "u0") p.u0 = r.expr(false);
  else if (key == "u1") p.u1 = r.expr(false);
  else if (key == "f") p.f = r.expr(false);
  else if (key == "g") p.g = r.expr(true);
  else if (key == "g0") p.g0 = r.number();
  else if (key == "g_prime") p.g_prime = r.expr(true);
  else if (key == "gamma") p.gamma = r.sides();
  else if (key == "n_modes") p.n_modes = r.integer();
  else r.fail("unknown key");
}

inline void apply_task_key(TaskConfig& t, const std::string& key, const detail::Reader& r) {
  if (key == "seed") t.seed = r.unsigned_integer();
  else if (key == "data") t.data = r.text();
  else if (key == "lambda") {
    if (r.text() != "discrepancy" && r.text() != "lcurve" && !(r.number() >= 0.0))
      r.fail("lambda must be nonnegative, 'discrepancy' or 'lcurve'");
    t.lambda = r.text();
  } else if (key == "method") t.method = r.choice({"normal", "cgls"});
  else if (key == "map_mode") t.map_mode = r.choice({"dense", "matrix_free"});
  else if (key == "max_iters") t.max_iters = r.integer();
  else if (key == "cg_tol") t.cg_tol = r.number();
  else if (key == "noise") t.noise = r.number();
  else if (key == "noise_level") t.noise_level = r.number();
  else if (key == "lambda_min") t.lambda_min = r.number();
  else if (key == "lambda_max") t.lambda_max = r.number();
  else if (key == "per_decade") t.per_decade = r.integer();
  else if (key == "tau") t.tau = r.number();
  else if (key == "truth") t.truth = r.expr(false);
  else if (key == "probe_side") t.probe_side = r.side();
  else if (key == "probe_k") t.probe_k = r.integer();
  else if (key == "probe_file") t.probe_file = r.text();
  else if (key == "dictionary") t.dictionary = r.integer();
  else if (key == "laplace_s") t.laplace_s = r.numbers();
  else if (key == "T_long") t.T_long = r.number();
  else if (key == "ucp_steps") t.ucp_steps = r.integer();
  else if (key == "parabolic_refine") t.parabolic_refine = r.integer();
  else if (key == "ucp_tolerance") t.ucp_tolerance = r.number();
  else if (key == "picard") t.picard = r.boolean();
  else if (key == "picard_iters") t.picard_iters = r.integer();
  else if (key == "picard_tol") t.picard_tol = r.number();
  else if (key == "suite") t.suite = r.text();
  else r.fail("unknown key");
}

/// Checks cross-key constraints that need no solve.
inline void validate(const RunConfig& c) {
  const auto& p = c.problem;
  const auto& t = c.task;
  auto bad = [](const std::string& why) { throw ConfigError(why); };
  if (!(p.alpha > 1.0 && p.alpha < 2.0)) bad("[problem] alpha must lie in (1, 2)");
  if (!(p.x_right > p.x_left)) bad("[problem] x_right must exceed x_left");
  if (p.n_interior < 2) bad("[problem] n_interior must be at least 2");
  if (!(p.T > 0.0)) bad("[problem] T must be positive");
  if (p.n_steps < 1) bad("[problem] n_steps must be at least 1");
  if (!(p.a0 > 0.0)) bad("[problem] a0 must be positive");
  if (p.n_modes < 0 || p.n_modes > p.n_interior) bad("[problem] n_modes must lie in [0, n_interior]");
  try {
    Discretization(p.mesh(), p.coefficients());
  } catch (const InvalidArgument& e) {
    bad(std::string("[problem] ") + e.what());
  }
  if (p.g0) {
    const double g0 = p.g(0.0, 0.0);
    if (std::abs(g0 - *p.g0) > 1e-12 * std::max(1.0, std::abs(g0)))
      bad("[problem] g0 = " + detail::num(*p.g0) + " disagrees with g(0) = " + detail::num(g0));
  }
  if (t.max_iters < 1) bad("[task] max_iters must be positive");
  if (!(t.noise >= 0.0) || !(t.noise_level >= 0.0)) bad("[task] noise levels must be nonnegative");
  if (!(t.lambda_min > 0.0) || !(t.lambda_max > t.lambda_min)) bad("[task] need 0 < lambda_min < lambda_max");
  if (t.per_decade < 1) bad("[task] per_decade must be positive");
  if (!(t.tau >= 1.0)) bad("[task] tau must be at least 1");
  if (t.probe_k < 1) bad("[task] probe_k must be positive");
  if (t.dictionary < 1) bad("[task] dictionary must be positive");
  if (t.ucp_steps < 10) bad("[task] ucp_steps must be at least 10");
  if (t.parabolic_refine < 1) bad("[task] parabolic_refine must be positive");
  if (t.picard_iters < 1) bad("[task] picard_iters must be positive");
}

inline RunConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  RunConfig cfg;
  cfg.source_path = name;
  std::string line;
  std::string section;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "task")
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!seen.insert(section + "." + key).second)
      throw ConfigError("line " + std::to_string(lineno) + ": [" + section + "] " + key + ": duplicate key");
    const detail::Reader r(section, key, value, lineno);
    if (section == "problem") apply_problem_key(cfg.problem, key, r);
    else apply_task_key(cfg.task, key, r);
    cfg.echo[section][key] = value;
  }
  validate(cfg);
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

inline SourceSpec source_spec(const ProblemConfig& c, const ProblemSpec& p) {
  if (!c.g0) throw ConfigError("[problem] g0 must be given explicitly when a source is used");
  SourceSpec s;
  s.f = MeshField::sample(p.mesh(), [e = c.f](double x) { return e(x); });
  s.g = TimeSeries::sample(p.grid, [e = c.g](double t) { return e(0.0, t); });
  s.g0 = *c.g0;
  if (c.g_prime) s.g_prime = [e = *c.g_prime](double t) { return e(0.0, t); };
  return s;
}

/// Problem with initial data and, when f is nonzero, the separable source.
/// A source requires an explicit g0.
inline ProblemSpec build_problem(const ProblemConfig& c, bool with_source = true) {
  ProblemSpec p = make_problem(c.alpha, c.mesh(), c.coefficients(), c.grid());
  p.a = MeshField::sample(p.mesh(), [e = c.u0](double x) { return e(x); });
  p.b = MeshField::sample(p.mesh(), [e = c.u1](double x) { return e(x); });
  p.gamma_obs = c.gamma;
  p.n_modes = c.n_modes;
  if (with_source && c.has_source()) p.source = source_spec(c, p);
  return p;
}

/// Resolved configuration with defaults filled in, for manifests.
inline std::map<std::string, std::map<std::string, std::string>> resolved(const RunConfig& c) {
  using detail::num;
  const auto& p = c.problem;
  const auto& t = c.task;
  std::map<std::string, std::map<std::string, std::string>> r;
  auto& P = r["problem"];
  P["alpha"] = num(p.alpha);
  P["x_left"] = num(p.x_left);
  P["x_right"] = num(p.x_right);
  P["n_interior"] = std::to_string(p.n_interior);
  P["T"] = num(p.T);
  P["n_steps"] = std::to_string(p.n_steps);
  P["a"] = p.a.text();
  P["B"] = p.B.text();
  P["c"] = p.c.text();
  P["a0"] = num(p.a0);
  P["u0"] = p.u0.text();
  P["u1"] = p.u1.text();
  P["f"] = p.f.text();
  P["g"] = p.g.text();
  if (p.g0) P["g0"] = num(*p.g0);
  if (p.g_prime) P["g_prime"] = p.g_prime->text();
  P["gamma"] = detail::side_list(p.gamma);
  P["n_modes"] = std::to_string(p.n_modes);
  auto& T = r["task"];
  T["seed"] = std::to_string(t.seed);
  for (const auto& [k, v] : c.echo.count("task") ? c.echo.at("task") : std::map<std::string, std::string>{})
    if (k != "seed") T[k] = v;
  return r;
}

}  // namespace fdw

#endif  // FDW_CONFIG_HPP
