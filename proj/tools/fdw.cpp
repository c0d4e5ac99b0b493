// fdw: forward, adjoint, inversion, verification and Laplace-correspondence
// runs driven by an INI configuration file.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "fdw/config.hpp"
#include "fdw/io.hpp"
#include "fdw/verify.hpp"

namespace {

using namespace fdw;

constexpr const char* kVersion = "0.1.0";

enum Exit { ok = 0, config_error = 2, numerical_failure = 3, verification_failure = 4 };

struct Options {
  std::string config;
  std::string out = "out";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  bool plot = false;
  std::string suite;
};

RunConfig load(const Options& o, bool required = true) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  else if (required) throw ConfigError("--config is required for this command");
  if (o.seed) cfg.task.seed = *o.seed;
  return cfg;
}

std::string plot_script(const std::string& file, const std::string& using_cols, const std::string& title) {
  return "set datafile separator ','\nset key autotitle columnhead\nset title '" + title + "'\nplot '" + file +
         "' using " + using_cols + " with lines\npause -1\n";
}

std::string report_text(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

int cmd_forward(const Options& o) {
  const RunConfig cfg = load(o);
  OutputSet out(o.out);
  SpaceTimeField u;
  ProblemSpec p;
  {
    PhaseTimer t(out, "setup");
    p = build_problem(cfg.problem);
  }
  {
    PhaseTimer t(out, "solve");
    u = p.disc.symmetric_only() ? solve_symmetric(p) : solve_general(p);
  }
  out.add("field.csv", field_csv(u));
  out.add("flux.csv", flux_csv(measure_flux(u, p.disc, p.gamma_obs)));
  if (cfg.task.picard) {
    PhaseTimer t(out, "picard");
    const auto rep = picard_iterate(p, cfg.task.picard_iters, cfg.task.picard_tol);
    std::string csv = "iteration,delta\n";
    for (std::size_t k = 0; k < rep.deltas.size(); ++k) csv += std::to_string(k + 1) + "," + fmt(rep.deltas[k]) + "\n";
    out.add("picard.csv", csv);
    SpaceTimeField d(p.mesh(), p.grid);
    d.values = rep.field.values - u.values;
    out.add("picard_report.txt", report_text({{"iterations", std::to_string(rep.iterations)},
                                              {"converged", rep.converged ? "true" : "false"},
                                              {"sup_difference_to_marching", fmt(sup_norm(d))}}));
  }
  if (o.plot) out.add("plot.gp", plot_script("flux.csv", "1:3", "boundary flux"));
  out.commit(resolved(cfg), "forward", kVersion);
  std::printf("forward: %d x %d field written to %s\n", p.mesh().n() + 2, p.grid.size(), out.dir().c_str());
  return ok;
}

int cmd_adjoint(const Options& o) {
  const RunConfig cfg = load(o);
  OutputSet out(o.out);
  const ProblemSpec p = build_problem(cfg.problem);
  Probe probe;
  if (!cfg.task.probe_file.empty()) {
    probe = probe_from_samples(load_flux_csv(cfg.task.probe_file, p.grid, p.gamma_obs));
  } else {
    probe = bump_probe(p.grid, cfg.task.probe_side, cfg.task.probe_k);
  }
  validate_probe(probe);
  const AdjointSystem sys(p);
  SpaceTimeField v;
  {
    PhaseTimer t(out, "adjoint");
    v = sys.solve_adjoint(probe);
  }
  out.add("adjoint_field.csv", field_csv(v));
  if (p.source) {
    PhaseTimer t(out, "identity");
    std::string csv = "side,k,bilinear,flux_side,rel_residual\n";
    for (const auto& pr : bump_dictionary(p.grid, p.gamma_obs, cfg.task.dictionary)) {
      const auto r = sys.integral_identity(p.source->f, p.source->g, pr);
      csv += std::string(to_string(pr.sides()[0])) + "," + pr.smoothness + "," + fmt(r.bilinear) + "," +
             fmt(r.flux_side) + "," + fmt(r.rel_residual) + "\n";
    }
    out.add("identity.csv", csv);
  }
  if (o.plot) out.add("plot.gp", plot_script("adjoint_field.csv", "1:3", "adjoint field"));
  out.commit(resolved(cfg), "adjoint", kVersion);
  std::printf("adjoint: field written to %s\n", out.dir().c_str());
  return ok;
}

int cmd_invert(const Options& o) {
  const RunConfig cfg = load(o);
  const auto& tc = cfg.task;
  if (cfg.problem.has_initial_data()) throw ConfigError("[problem] invert requires u0 = 0 and u1 = 0");
  if (tc.data.empty()) throw ConfigError("[task] data is required for invert");
  OutputSet out(o.out);
  ProblemSpec p = build_problem(cfg.problem, false);
  p.source = source_spec(cfg.problem, p);
  const FluxTrace file_data = load_flux_csv(tc.data, p.grid, p.gamma_obs);
  FluxTrace data = tc.noise > 0.0 ? add_noise(file_data, tc.noise, tc.seed) : file_data;
  const double noise_norm = (data.weighted_vector() - file_data.weighted_vector()).norm() + tc.noise_level * file_data.norm();

  const auto mode = tc.map_mode == "dense" ? ForwardMap::Mode::dense : ForwardMap::Mode::matrix_free;
  const bool numeric = tc.lambda != "discrepancy" && tc.lambda != "lcurve";
  if (!numeric && mode != ForwardMap::Mode::dense)
    throw ConfigError("[task] lambda selection by sweep needs map_mode = dense");
  if (tc.lambda == "discrepancy" && !(noise_norm > 0.0))
    throw ConfigError("[task] the discrepancy principle needs noise > 0 or noise_level > 0");

  std::optional<ForwardMap> map;
  {
    PhaseTimer t(out, "assemble");
    map.emplace(p, mode);
  }
  std::optional<MeshField> truth;
  if (tc.truth) truth = MeshField::sample(p.mesh(), [e = *tc.truth](double x) { return e(x); });

  double lambda = numeric ? std::stod(tc.lambda) : 0.0;
  std::vector<std::pair<std::string, std::string>> kv;
  std::string rule = numeric ? "fixed" : tc.lambda;
  bool satisfied = true;
  if (mode == ForwardMap::Mode::dense) {
    PhaseTimer t(out, "sweep");
    const auto sw = lambda_sweep(*map, data, log_lambda_grid(tc.lambda_min, tc.lambda_max, tc.per_decade), noise_norm,
                                 tc.tau, truth ? &*truth : nullptr);
    std::string csv = std::string("lambda,residual,solution_norm") + (truth ? ",rel_error" : "") + "\n";
    for (const auto& r : sw.rows)
      csv += fmt(r.lambda_reg) + "," + fmt(r.residual) + "," + fmt(r.solution_norm) +
             (r.rel_error ? "," + fmt(*r.rel_error) : std::string()) + "\n";
    out.add("sweep.csv", csv);
    if (tc.lambda == "discrepancy") {
      satisfied = sw.discrepancy_index >= 0;
      lambda = sw.rows[satisfied ? sw.discrepancy_index : 0].lambda_reg;
    } else if (tc.lambda == "lcurve") {
      if (sw.corner_index < 0) throw NumericalError("L-curve corner not found; widen the lambda range");
      lambda = sw.rows[sw.corner_index].lambda_reg;
    }
  }
  ReconstructionReport rep;
  {
    PhaseTimer t(out, "reconstruct");
    rep = reconstruct(*map, data, lambda, tc.method == "cgls" ? SolveMethod::cgls : SolveMethod::normal_equations,
                      tc.max_iters, tc.cg_tol, truth ? &*truth : nullptr);
  }
  out.add("f_hat.csv", mesh_field_csv(rep.f_hat));
  kv = {{"lambda", fmt(lambda)},
        {"lambda_rule", rule},
        {"method", to_string(rep.method)},
        {"map_mode", tc.map_mode},
        {"iterations", std::to_string(rep.iterations)},
        {"residual", fmt(rep.residual)},
        {"solution_norm", fmt(rep.solution_norm)},
        {"noise_norm", fmt(noise_norm)},
        {"data_norm", fmt(data.norm())},
        {"rank_deficient", rep.rank_deficient ? "true" : "false"}};
  if (tc.lambda == "discrepancy") kv.emplace_back("discrepancy_satisfied", satisfied ? "true" : "false");
  if (rep.rel_error) kv.emplace_back("rel_error", fmt(*rep.rel_error));
  out.add("report.txt", report_text(kv));
  if (o.plot) out.add("plot.gp", plot_script("f_hat.csv", "1:2", "reconstructed f"));
  out.commit(resolved(cfg), "invert", kVersion);
  std::printf("invert: lambda=%s residual=%s%s\n", fmt(lambda).c_str(), fmt(rep.residual).c_str(),
              rep.rel_error ? (" rel_error=" + fmt(*rep.rel_error)).c_str() : "");
  return ok;
}

int cmd_verify(const Options& o) {
  const RunConfig cfg = load(o, false);
  const std::string suite = o.suite.empty() ? cfg.task.suite : o.suite;
  OutputSet out(o.out);
  std::vector<CheckRow> rows;
  {
    PhaseTimer t(out, "verify");
    rows = run_verify(suite, cfg.task.seed);
  }
  bool all = true;
  std::string csv = "suite,check,measured,tolerance,pass\n";
  std::printf("%-10s %-52s %-12s %-12s %s\n", "suite", "check", "measured", "tolerance", "result");
  for (const auto& r : rows) {
    all = all && r.pass;
    std::printf("%-10s %-52s %-12.3e %-12.3e %s\n", r.suite.c_str(), r.name.c_str(), r.measured, r.tolerance,
                r.pass ? "PASS" : "FAIL");
    csv += r.suite + ",\"" + r.name + "\"," + fmt(r.measured) + "," + fmt(r.tolerance) + "," + (r.pass ? "1" : "0") + "\n";
  }
  if (!all) return verification_failure;
  out.add("verify.csv", csv);
  auto echo = resolved(cfg);
  echo["task"]["suite"] = suite;
  out.commit(echo, "verify", kVersion);
  return ok;
}

int cmd_ucp(const Options& o) {
  const RunConfig cfg = load(o);
  const auto& tc = cfg.task;
  if (!cfg.problem.u0.is_zero() || cfg.problem.has_source())
    throw ConfigError("[problem] ucp requires u0 = 0 and f = 0");
  OutputSet out(o.out);
  ProblemConfig pc = cfg.problem;
  pc.T = tc.T_long;
  pc.n_steps = tc.ucp_steps;
  const ProblemSpec p = build_problem(pc, false);
  const LaplaceGrid lg{tc.laplace_s, tc.T_long};
  lg.validate();
  UcpReport rep;
  {
    PhaseTimer t(out, "ucp");
    rep = ucp_correspondence_report(p, lg, tc.parabolic_refine);
  }
  std::string csv = "s,route_a,route_b,mismatch,truncation_budget\n";
  bool all = true;
  for (const auto& r : rep.rows) {
    csv += fmt(r.s) + "," + r.route_a + "," + r.route_b + "," + fmt(r.mismatch) + "," + fmt(r.truncation_budget) + "\n";
    all = all && r.net() < tc.ucp_tolerance;
  }
  std::printf("ucp: worst net mismatch %.3e (tolerance %.1e)\n", rep.worst_net(), tc.ucp_tolerance);
  if (!all) {
    std::fputs(csv.c_str(), stdout);
    return verification_failure;
  }
  out.add("ucp.csv", csv);
  out.commit(resolved(cfg), "ucp", kVersion);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-fractional diffusion-wave solver, adjoint and source reconstruction"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker thread cap (0 = hardware)");
    sub->add_option("--seed", o.seed, "random seed, overrides the config");
    sub->add_flag("--plot", o.plot, "also write a gnuplot script");
  };
  auto* fwd = app.add_subcommand("forward", "solve the forward problem");
  auto* adj = app.add_subcommand("adjoint", "solve the adjoint problem for a probe");
  auto* inv = app.add_subcommand("invert", "reconstruct f from boundary flux data");
  auto* ver = app.add_subcommand("verify", "run invariant suites");
  auto* ucp = app.add_subcommand("ucp", "Laplace-domain correspondence report");
  for (auto* s : {fwd, adj, inv, ver, ucp}) common(s);
  ver->add_option("suite", o.suite, "mlf | fracops | duhamel | identity | stability | ucp | all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }
  set_max_threads(o.threads);
  try {
    if (*fwd) return cmd_forward(o);
    if (*adj) return cmd_adjoint(o);
    if (*inv) return cmd_invert(o);
    if (*ver) return cmd_verify(o);
    if (*ucp) return cmd_ucp(o);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return numerical_failure;
  }
  return config_error;
}
