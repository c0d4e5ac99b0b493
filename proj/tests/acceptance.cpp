// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: fdw_acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdw/inverse.hpp"
#include "fdw/mlf.hpp"
#include "fdw/ucp.hpp"
#include "fdw/verify.hpp"

using namespace fdw;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double rel_l2(const SpaceTimeField& u, const SpaceTimeField& ref) {
  SpaceTimeField d = u;
  d.values -= ref.values;
  return spacetime_norm(d) / spacetime_norm(ref);
}

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

ProblemSpec unit_problem(double alpha, int n, int nt, const Coefficients& k) {
  return make_problem(alpha, SpatialMesh(0.0, 1.0, n), k, TimeGrid(1.0, nt));
}

Coefficients variable_coeffs(bool first_order) {
  Coefficients k;
  k.a = [](double x) { return 1.0 + 0.5 * x; };
  k.B = first_order ? std::function<double(double)>([](double x) { return 0.3 + 0.1 * x; })
                    : std::function<double(double)>([](double) { return 0.0; });
  k.c = [first_order](double) { return first_order ? 0.2 : 0.0; };
  k.a0 = 1.0;
  return k;
}

MeshField sines(const SpatialMesh& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MeshField f(mesh);
  for (int k = 1; k <= 5; ++k) {
    const double c = nd(rng) / k;
    for (int i = 0; i < mesh.n(); ++i) f.values[i] += c * std::sin(k * kPi * mesh.x(i));
  }
  return f;
}

Outcome from_rows(const std::vector<CheckRow>& rows) {
  Outcome o{true, ""};
  for (const auto& r : rows) {
    o.pass = o.pass && r.pass;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += r.name + " " + sci(r.measured) + "/" + sci(r.tolerance);
  }
  return o;
}

Outcome c1_mlf() {
  std::ifstream in(std::string(FDW_TEST_DATA_DIR) + "/mlf_oracle.csv");
  std::string line;
  std::getline(in, line);
  double worst = 0.0;
  int count = 0;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b, z, v;
    ls >> a >> b >> z >> v;
    worst = std::max(worst, std::abs(mlf_eval({a, b}, z) - v) / std::max(std::abs(v), 1e-300));
    ++count;
  }
  return {count >= 200 && worst <= 1e-10,
          std::to_string(count) + " oracle points, max relative error " + sci(worst) + " (tol 1e-10)"};
}

Outcome c3_closed_forms() {
  double worst = 0.0;
  for (double alpha : {1.1, 1.5, 1.9}) {
    const auto base = unit_problem(alpha, 63, 256, Coefficients::constant(1.0, 0.0, 0.0));
    const double l1 = base.basis.lambdas[0];
    auto mode_field = [&](const std::function<double(double)>& amp) {
      SpaceTimeField f(base.mesh(), base.grid);
      for (int m = 0; m < base.grid.size(); ++m) f.set_interior(m, amp(base.grid.t(m)) * base.basis.phis.col(0));
      return f;
    };
    const MittagLeffler e1(alpha, 1.0), e2(alpha, 2.0);
    auto p = base;
    p.a = p.basis.mode(0);
    worst = std::max(worst, rel_l2(solve_symmetric(p), mode_field([&](double t) { return e1(-l1 * std::pow(t, alpha)); })));
    p = base;
    p.b = p.basis.mode(0);
    worst = std::max(worst, rel_l2(solve_symmetric(p), mode_field([&](double t) { return t * e2(-l1 * std::pow(t, alpha)); })));
    p = base;
    p.source = SourceSpec{p.basis.mode(0), TimeSeries::sample(p.grid, [](double) { return 1.0; }), 1.0, {}};
    worst = std::max(worst, rel_l2(solve_symmetric(p),
                                   mode_field([&](double t) { return (1.0 - e1(-l1 * std::pow(t, alpha))) / l1; })));
  }
  return {worst <= 1e-4, "3 cases x alpha {1.1,1.5,1.9}, max relative L2 error " + sci(worst) + " (tol 1e-4)"};
}

double manufactured_error(int n, int nt) {
  const double alpha = 1.5;
  ProblemSpec p = unit_problem(alpha, n, nt, variable_coeffs(true));
  const Vector X = p.mesh().sample([](double x) { return std::sin(kPi * x); });
  const Vector AX = assemble_a0(p.disc).apply(X) + assemble_first_order(p.disc).apply(X);
  Matrix F(n, p.grid.size());
  for (int m = 0; m < p.grid.size(); ++m) {
    const double t = p.grid.t(m);
    F.col(m) = 2.0 * std::pow(t, 2.0 - alpha) / std::tgamma(3.0 - alpha) * X + t * t * AX;
  }
  p.F_samples = F;
  SpaceTimeField ref(p.mesh(), p.grid);
  for (int m = 0; m < p.grid.size(); ++m) ref.set_interior(m, p.grid.t(m) * p.grid.t(m) * X);
  return rel_l2(solve_general(p), ref);
}

Outcome c4_manufactured() {
  const double e1 = manufactured_error(15, 32), e2 = manufactured_error(31, 64), e3 = manufactured_error(63, 128);
  const double r1 = e1 / e2, r2 = e2 / e3;
  return {r1 >= 1.7 && r2 >= 1.7, "errors " + sci(e1) + ", " + sci(e2) + ", " + sci(e3) + "; factors " + sci(r1) +
                                      ", " + sci(r2) + " (need >= 1.7)"};
}

Outcome c5_picard() {
  auto p = unit_problem(1.5, 31, 128, Coefficients::constant(1.0, 0.5, 0.0));
  p.a = MeshField::sample(p.mesh(), [](double x) { return std::sin(kPi * x); });
  p.source = SourceSpec{MeshField::sample(p.mesh(), [](double x) { return x; }),
                        TimeSeries::sample(p.grid, [](double t) { return 1.0 + t; }), 1.0, {}};
  const auto rep = picard_iterate(p, 200, 1e-10);
  const double agree = (rep.field.values - solve_general(p).values).cwiseAbs().maxCoeff();
  const auto& d = rep.deltas;
  int violations = 0, checked = 0;
  std::string first;
  for (std::size_t k = 3; k + 1 < d.size(); ++k) {
    const double prev = d[k - 1] / d[k - 2], cur = d[k] / d[k - 1];
    ++checked;
    if (!(cur < prev)) {
      if (violations++ == 0) first = " (first at iteration " + std::to_string(k + 1) + ": " + sci(cur) + " >= " + sci(prev) + ")";
    }
  }
  return {rep.converged && agree <= 1e-8 && violations == 0,
          "sup difference " + sci(agree) + " (tol 1e-8), " + std::to_string(rep.iterations) + " iterations, " +
              std::to_string(violations) + "/" + std::to_string(checked) + " ratio increases" + first};
}

Outcome c7_identity() {
  struct Case {
    const char* name;
    Coefficients k;
    double tol;
  };
  const std::vector<Case> cases{{"constant symmetric", Coefficients::constant(1.0, 0.0, 0.0), 1e-3},
                                {"variable symmetric", variable_coeffs(false), 1e-3},
                                {"nonsymmetric", variable_coeffs(true), 5e-3}};
  double worst_sym = 0.0, worst_non = 0.0;
  int count = 0;
  for (double alpha : {1.1, 1.5, 1.9})
    for (const auto& c : cases) {
      const auto p = unit_problem(alpha, 127, 128, c.k);
      const AdjointSystem sys(p);
      const auto g = TimeSeries::sample(p.grid, [](double t) { return 1.0 + t; });
      const auto f = MeshField::sample(p.mesh(), [](double x) { return std::sin(kPi * x) + x * (1.0 - x); });
      for (Side s : {Side::left, Side::right})
        for (int k = 1; k <= 4; ++k) {
          const double r = sys.integral_identity(f, g, bump_probe(p.grid, s, k)).rel_residual;
          (c.tol < 2e-3 ? worst_sym : worst_non) = std::max(c.tol < 2e-3 ? worst_sym : worst_non, r);
          ++count;
        }
    }
  return {worst_sym < 1e-3 && worst_non < 5e-3, std::to_string(count) + " identities at n=127, symmetric " +
                                                    sci(worst_sym) + " (tol 1e-3), nonsymmetric " + sci(worst_non) +
                                                    " (tol 5e-3)"};
}

Outcome c8_norm_axioms() {
  const auto p = unit_problem(1.5, 31, 128, Coefficients::constant(1.0, 0.3, 0.1));
  const AdjointSystem sys(p);
  const auto g = TimeSeries::sample(p.grid, [](double t) { return 1.0 + t; });
  const std::vector<Side> sides{Side::right};
  const auto dict = bump_dictionary(p.grid, sides, 6);
  const auto fields = sys.adjoint_fields(dict);
  std::mt19937_64 rng(42);
  double homog = 0.0, tri = 0.0, min_ratio = INFINITY;
  for (int trial = 0; trial < 20; ++trial) {
    const MeshField f = sines(p.mesh(), rng);
    const MeshField h = sines(p.mesh(), rng);
    const double nf = sys.b_norm_direct(f, g, sides);
    const double nd = sys.b_norm_dictionary(f, g, dict, fields);
    min_ratio = std::min(min_ratio, nf / f.values.norm());
    for (double c : {-2.5, 0.3, 7.0}) {
      MeshField cf = f;
      cf.values *= c;
      homog = std::max(homog, std::abs(sys.b_norm_direct(cf, g, sides) - std::abs(c) * nf) / (std::abs(c) * nf));
      homog = std::max(homog, std::abs(sys.b_norm_dictionary(cf, g, dict, fields) - std::abs(c) * nd) / (std::abs(c) * nd));
    }
    MeshField s = f;
    s.values += h.values;
    tri = std::max(tri, (sys.b_norm_direct(s, g, sides) - nf - sys.b_norm_direct(h, g, sides)) / nf);
    tri = std::max(tri, (sys.b_norm_dictionary(s, g, dict, fields) - nd - sys.b_norm_dictionary(h, g, dict, fields)) / nd);
  }
  return {homog <= 1e-10 && tri <= 1e-10 && min_ratio > 0.0,
          "homogeneity " + sci(homog) + ", triangle excess " + sci(std::max(tri, 0.0)) + " (tol 1e-10), min norm ratio " +
              sci(min_ratio) + " over 20 nonzero f"};
}

ProblemSpec inverse_template(int n, int nt, std::vector<Side> sides, const std::function<double(double)>& g) {
  auto p = unit_problem(1.5, n, nt, Coefficients::constant(1.0, 0.3, 0.1));
  p.source = SourceSpec{MeshField(p.mesh()), TimeSeries::sample(p.grid, g), g(0.0), {}};
  p.gamma_obs = std::move(sides);
  return p;
}

Outcome c10_uniqueness() {
  double worst = 0.0;
  const std::vector<std::pair<std::function<double(double)>, std::function<double(double)>>> profiles{
      {[](double) { return 1.0; }, [](double) { return 0.0; }},
      {[](double t) { return 1.0 + t; }, [](double) { return 1.0; }},
      {[](double t) { return 2.0 + std::sin(t); }, [](double t) { return std::cos(t); }}};
  for (const auto& [g, gp] : profiles) {
    auto p = unit_problem(1.5, 31, 256, Coefficients::constant(1.0, 0.0, 0.0));
    p.gamma_obs = {Side::left, Side::right};
    const TimeSeries gs = TimeSeries::sample(p.grid, g);
    const MeshField f = MeshField::sample(p.mesh(), [](double x) { return std::sin(kPi * x) + 0.5 * std::sin(2 * kPi * x); });
    p.source = SourceSpec{f, gs, g(0.0), gp};
    const auto flux_u = measure_flux(duhamel_solve(p), p.disc, p.gamma_obs);
    auto q = make_problem(1.5, p.mesh(), Coefficients::constant(1.0, 0.0, 0.0), p.grid);
    q.b = f;
    const auto w = measure_flux(solve_general(q), q.disc, p.gamma_obs);
    worst = std::max(worst, rel(deconvolve_flux(flux_u, gs, g(0.0), 1.5, gp).weighted_vector(), w.weighted_vector()));
  }
  const auto t = inverse_template(63, 256, {Side::right}, [](double t) { return 1.0 + t; });
  const ForwardMap K(t);
  const auto rep = reconstruct(K, FluxTrace(t.grid, t.gamma_obs), 1e-12);
  const double fnorm = std::sqrt(t.mesh().h()) * rep.f_hat.values.norm();
  return {worst <= 5e-3 && fnorm < 1e-8,
          "deconvolution round trip " + sci(worst) + " (tol 5e-3), zero-data ||f_hat|| " + sci(fnorm) + " (tol 1e-8)"};
}

Outcome c11_reconstruction() {
  auto truth_fn = [](double x) { return std::sqrt(2.0) * std::sin(kPi * x); };
  auto g = [](double t) { return 1.0 + t; };
  const auto p = inverse_template(63, 256, {Side::right}, g);
  const ForwardMap K(p);
  const MeshField truth = MeshField::sample(p.mesh(), truth_fn);
  const auto clean = fine_grid_data(p, Coefficients::constant(1.0, 0.3, 0.1), truth_fn, g);
  const auto noiseless = reconstruct(K, clean, 1e-10, SolveMethod::normal_equations, 200, 1e-10, &truth);
  const auto noisy = add_noise(clean, 0.01, 42);
  const double noise = (noisy.weighted_vector() - clean.weighted_vector()).norm();
  const auto sw = lambda_sweep(K, noisy, log_lambda_grid(1e-10, 1e0, 4), noise, 1.1, &truth);
  const double e_noisy = sw.discrepancy_index >= 0 ? *sw.rows[sw.discrepancy_index].rel_error : INFINITY;
  const double lam = sw.discrepancy_index >= 0 ? sw.rows[sw.discrepancy_index].lambda_reg : NAN;
  return {*noiseless.rel_error < 1e-2 && e_noisy < 0.15,
          "noiseless (lambda 1e-10) " + sci(*noiseless.rel_error) + " (tol 1e-2), 1% noise (discrepancy lambda " +
              sci(lam) + ") " + sci(e_noisy) + " (tol 0.15)"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<Criterion> criteria{
      {1, "Mittag-Leffler oracle", 5, c1_mlf},
      {2, "fractional calculus identities", 10, [] { return from_rows(run_verify("fracops")); }},
      {3, "forward closed forms", 30, c3_closed_forms},
      {4, "manufactured solution refinement", 120, c4_manufactured},
      {5, "Picard vs time marching", 60, c5_picard},
      {6, "Duhamel equivalence", 60, [] { return from_rows(run_verify("duhamel")); }},
      {7, "integral identity", 180, c7_identity},
      {8, "norm axioms", 120, c8_norm_axioms},
      {9, "stability identity", 120, [] { return from_rows(run_verify("stability")); }},
      {10, "uniqueness mechanism", 60, c10_uniqueness},
      {11, "reconstruction quality", 180, c11_reconstruction},
      {12, "UCP correspondence", 180, [] { return from_rows(run_verify("ucp")); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.limit_seconds;
    failed += !pass;
    std::printf("C%-2d %s  %s: %s [%.1f s, limit %.0f s]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.limit_seconds);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
