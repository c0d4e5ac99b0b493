#ifndef FDW_VERIFY_HPP
#define FDW_VERIFY_HPP

/// \file verify.hpp
/// \brief Self-contained invariant suites with measured and tolerated values.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fdw/inverse.hpp"
#include "fdw/mlf.hpp"
#include "fdw/ucp.hpp"

namespace fdw {

struct CheckRow {
  std::string suite;
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> s{"mlf", "fracops", "duhamel", "identity", "stability", "ucp"};
  return s;
}

namespace detail {

inline CheckRow below(const std::string& suite, const std::string& name, double measured, double tol) {
  return {suite, name, measured, tol, std::isfinite(measured) && measured <= tol};
}

inline double sup_diff(const TimeSeries& a, const TimeSeries& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::vector<CheckRow> suite_mlf() {
  std::vector<CheckRow> out;
  const double pi = std::numbers::pi;
  out.push_back(below("mlf", "E_{1,1}(-1) = exp(-1)", std::abs(mlf_eval({1.0, 1.0}, -1.0) - std::exp(-1.0)), 1e-14));
  out.push_back(below("mlf", "E_{2,1}(-pi^2) = -1", std::abs(mlf_eval({2.0, 1.0}, -pi * pi) + 1.0), 1e-13));
  out.push_back(below("mlf", "E_{2,2}(-4) = sin(2)/2", std::abs(mlf_eval({2.0, 2.0}, -4.0) - std::sin(2.0) / 2.0), 1e-13));
  double worst = 0.0;
  for (double a : {1.1, 1.5, 1.9})
    for (double b : {1.0, 2.0, a})
      for (double z : {-0.01, -0.7, -3.0, -12.0, -40.0, -300.0, -5e3, -1e5}) {
        const double lhs = mlf_eval({a, b}, z);
        const double zt = z * mlf_eval({a, b + a}, z);
        const double scale = std::max(std::abs(lhs), 1e-3 * (std::abs(zt) + std::abs(rgamma(b))));
        worst = std::max(worst, std::abs(lhs - zt - rgamma(b)) / scale);
      }
  out.push_back(below("mlf", "recurrence E_{a,b} = z E_{a,a+b} + 1/Gamma(b)", worst, 1e-10));
  double dworst = 0.0;
  const double h = 5e-4;
  for (double a : {1.1, 1.5, 1.9}) {
    const RelaxationKernels k(a);
    for (double t = 0.1; t <= 5.0; t += 0.1) {
      const double d1 = (k.triple(1.0, t + h).e2t - k.triple(1.0, t - h).e2t) / (2 * h);
      const double d2 = (k.triple(1.0, t + h).e1 - k.triple(1.0, t - h).e1) / (2 * h);
      dworst = std::max({dworst, std::abs(d1 - k.triple(1.0, t).e1), std::abs(d2 + k.triple(1.0, t).kern)});
    }
  }
  out.push_back(below("mlf", "derivative identities (central difference, h=5e-4)", dworst, 50 * h * h));
  return out;
}

inline std::vector<CheckRow> suite_fracops() {
  std::vector<CheckRow> out;
  const TimeGrid g(1.0, 512);
  const double tol = 10 * g.dt() * g.dt();
  const auto f = TimeSeries::sample(g, [](double t) { return std::cos(2 * t) + t * t; });
  double semi = 0.0;
  for (auto [a, b] : {std::pair{0.3, 0.7}, {0.5, 0.5}, {0.9, 0.6}})
    semi = std::max(semi, sup_diff(rl_integral_split(a, rl_integral_split(b, f)).sampled(), rl_integral(a + b, f)));
  out.push_back(below("fracops", "semigroup J^a J^b = J^(a+b)", semi, tol));
  const auto e = TimeSeries::sample(g, [](double t) { return std::exp(t); });
  const auto c = TimeSeries::sample(g, [](double t) { return std::cos(3 * t) + 0.5; });
  const auto w = g.trapezoid_weights();
  double dual = 0.0;
  for (double gamma : {1.1, 1.5, 1.9}) {
    const auto je = rl_integral(gamma, e);
    const auto jc = rl_integral_backward(gamma, c);
    double lhs = 0.0, rhs = 0.0;
    for (int m = 0; m < g.size(); ++m) {
      lhs += w[m] * je[m] * c[m];
      rhs += w[m] * e[m] * jc[m];
    }
    dual = std::max(dual, std::abs(lhs - rhs));
  }
  out.push_back(below("fracops", "duality <J f, h> = <f, J_T h>", dual, tol));
  const auto a = TimeSeries::sample(g, [](double t) { return std::exp(-t); });
  const auto b = TimeSeries::sample(g, [](double t) { return 1 + std::sin(2 * t); });
  double conv = 0.0;
  for (double gamma : {1.1, 1.5, 1.9})
    conv = std::max(conv, sup_diff(rl_integral(gamma, convolve(a, b)), convolve(a, rl_integral(gamma, b))));
  out.push_back(below("fracops", "convolution interchange J(a*b) = a*J b", conv, tol));
  return out;
}

inline ProblemSpec desk_problem(double alpha, int n, int nt, double B, double c) {
  return make_problem(alpha, SpatialMesh(0.0, 1.0, n), Coefficients::constant(1.0, B, c), TimeGrid(1.0, nt));
}

inline std::vector<CheckRow> suite_duhamel() {
  std::vector<CheckRow> out;
  struct Profile {
    const char* name;
    std::function<double(double)> g, gp;
  };
  const std::vector<Profile> profiles{{"g=1", [](double) { return 1.0; }, [](double) { return 0.0; }},
                                      {"g=1+t", [](double t) { return 1 + t; }, [](double) { return 1.0; }},
                                      {"g=2+sin t", [](double t) { return 2 + std::sin(t); },
                                       [](double t) { return std::cos(t); }}};
  for (auto [B, c] : {std::pair{0.0, 0.0}, {0.3, 0.1}}) {
    auto p = desk_problem(1.5, 31, 256, B, c);
    const ForwardSolver solver(p);
    for (const auto& pr : profiles) {
      p.source = SourceSpec{MeshField::sample(p.mesh(), [](double x) { return std::sin(std::numbers::pi * x) + x * (1 - x); }),
                            TimeSeries::sample(p.grid, pr.g), pr.g(0.0), pr.gp};
      const auto ud = duhamel_solve(p, &solver);
      const auto ug = solver.solve(p.a.values, p.b.values, p.source_samples());
      SpaceTimeField diff(p.mesh(), p.grid);
      diff.values = ud.values - ug.values;
      const double r = spacetime_norm(diff) / spacetime_norm(ug);
      out.push_back(below("duhamel", std::string(pr.name) + (B == 0.0 ? " symmetric" : " B=0.3 c=0.1"), r, 1e-3));
    }
  }
  return out;
}

inline std::vector<CheckRow> suite_identity() {
  std::vector<CheckRow> out;
  for (auto [B, c, n, tol] : {std::tuple{0.0, 0.0, 127, 1e-3}, {0.3, 0.1, 63, 5e-3}}) {
    const auto p = desk_problem(1.5, n, 128, B, c);
    const AdjointSystem sys(p);
    const auto g = TimeSeries::sample(p.grid, [](double t) { return 1 + t; });
    const MeshField f = MeshField::sample(p.mesh(), [](double x) { return std::sin(std::numbers::pi * x); });
    double worst = 0.0;
    for (Side s : {Side::left, Side::right})
      for (int k = 1; k <= 2; ++k) worst = std::max(worst, sys.integral_identity(f, g, bump_probe(p.grid, s, k)).rel_residual);
    out.push_back(below("identity", std::string(B == 0.0 ? "symmetric" : "nonsymmetric") + " n=" + std::to_string(n), worst, tol));
  }
  return out;
}

inline std::vector<CheckRow> suite_stability(std::uint64_t seed) {
  std::vector<CheckRow> out;
  const auto p = desk_problem(1.5, 255, 128, 0.3, 0.1);
  const AdjointSystem sys(p);
  const auto g = TimeSeries::sample(p.grid, [](double t) { return 1 + t; });
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto random_f = [&] {
    MeshField f(p.mesh());
    for (int k = 1; k <= 5; ++k) {
      const double c = nd(rng) / k;
      for (int i = 0; i < p.mesh().n(); ++i) f.values[i] += c * std::sin(k * std::numbers::pi * p.mesh().x(i));
    }
    return f;
  };
  std::vector<std::pair<MeshField, MeshField>> pairs;
  for (int k = 0; k < 20; ++k) pairs.emplace_back(random_f(), random_f());
  double worst = 0.0;
  for (const auto& r : stability_experiment(sys, pairs, g, {Side::right})) worst = std::max(worst, std::abs(r.ratio - 1.0));
  out.push_back(below("stability", "|B-norm / data-norm - 1| over 20 pairs, n=255", worst, 5e-3));
  return out;
}

inline std::vector<CheckRow> suite_ucp() {
  std::vector<CheckRow> out;
  auto p = make_problem(1.5, SpatialMesh(0.0, 1.0, 31), Coefficients::constant(1.0, 0.3, 0.1), TimeGrid(20.0, 2000));
  p.b = MeshField::sample(p.mesh(), [](double x) {
    return std::sin(std::numbers::pi * x) - 0.3 * std::sin(2 * std::numbers::pi * x);
  });
  p.gamma_obs = {Side::left, Side::right};
  const auto rep = ucp_correspondence_report(p, LaplaceGrid{});
  double frac = 0.0, par = 0.0;
  for (const auto& r : rep.rows) {
    const bool parabolic = r.route_a.find("parabolic") != std::string::npos;
    (parabolic ? par : frac) = std::max(parabolic ? par : frac, r.net());
  }
  out.push_back(below("ucp", "fractional transform vs resolvent (net)", frac, 2e-2));
  out.push_back(below("ucp", "parabolic companion vs scaled transform (net)", par, 2e-2));
  return out;
}

}  // namespace detail

/// Runs one suite by name, or every suite for "all".
inline std::vector<CheckRow> run_verify(const std::string& suite, std::uint64_t seed = 42) {
  if (suite == "all") {
    std::vector<CheckRow> out;
    for (const auto& s : verify_suites()) {
      auto r = run_verify(s, seed);
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }
  if (suite == "mlf") return detail::suite_mlf();
  if (suite == "fracops") return detail::suite_fracops();
  if (suite == "duhamel") return detail::suite_duhamel();
  if (suite == "identity") return detail::suite_identity();
  if (suite == "stability") return detail::suite_stability(seed);
  if (suite == "ucp") return detail::suite_ucp();
  std::string list;
  for (const auto& s : verify_suites()) list += s + ", ";
  throw InvalidArgument("unknown suite '" + suite + "'; valid suites: " + list + "all");
}

}  // namespace fdw

#endif  // FDW_VERIFY_HPP
