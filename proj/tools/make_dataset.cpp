// Writes the packaged inversion dataset: flux data for f(x) = sqrt(2) sin(pi x)
// computed on a grid refined twice in space and time, restricted to the
// template grid of data/invert.ini.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "fdw/config.hpp"
#include "fdw/inverse.hpp"
#include "fdw/io.hpp"

int main(int argc, char** argv) {
  using namespace fdw;
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s CONFIG OUT_CSV\n", argv[0]);
    return 2;
  }
  try {
    const RunConfig cfg = load_config(argv[1]);
    if (!cfg.task.truth) throw ConfigError("[task] truth is required to generate data");
    ProblemSpec p = build_problem(cfg.problem, false);
    p.source = source_spec(cfg.problem, p);
    const auto truth = *cfg.task.truth;
    const auto g = cfg.problem.g;
    const FluxTrace d = fine_grid_data(p, cfg.problem.coefficients(), [&](double x) { return truth(x); },
                                       [&](double t) { return g(0.0, t); });
    OutputSet::write_atomic(argv[2], flux_csv(d));
    std::printf("wrote %d samples per side to %s\n", d.grid.size(), argv[2]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
