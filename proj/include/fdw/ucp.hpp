#ifndef FDW_UCP_HPP
#define FDW_UCP_HPP

/// \file ucp.hpp
/// \brief Laplace-domain correspondence between the fractional velocity
/// problem, the shifted elliptic resolvent and the parabolic companion.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fdw/forward.hpp"

namespace fdw {

struct LaplaceGrid {
  std::vector<double> s{2.0, 3.0, 5.0, 8.0, 10.0};
  double T_long = 20.0;

  void validate() const {
    if (s.empty()) throw InvalidArgument("Laplace grid is empty");
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (!(s[k] > 0.0) || !std::isfinite(s[k])) throw InvalidArgument("Laplace parameters must be positive");
      if (k > 0 && !(s[k] > s[k - 1])) throw InvalidArgument("Laplace parameters must be ascending");
    }
    if (!(s.front() * T_long >= 10.0)) throw InvalidArgument("need s_min * T_long >= 10");
  }
};

struct LaplaceValue {
  double value = 0.0;
  double truncation = 0.0;  ///< bound on the neglected tail over (T, inf)
};

/// Trapezoid transform over the whole grid. The tail bound assumes the data
/// stays below max|data| beyond T.
inline LaplaceValue laplace_transform(const TimeSeries& data, double s) {
  if (!(s > 0.0)) throw InvalidArgument("Laplace parameter must be positive");
  const auto w = data.grid.trapezoid_weights();
  LaplaceValue r;
  double mx = 0.0;
  for (int m = 0; m < data.grid.size(); ++m) {
    r.value += w[m] * std::exp(-s * data.grid.t(m)) * data[m];
    mx = std::max(mx, std::abs(data[m]));
  }
  r.truncation = mx * std::exp(-s * data.grid.T()) / s;
  return r;
}

struct FieldTransform {
  MeshField value;
  double truncation = 0.0;  ///< sup over x of the tail bound
};

inline FieldTransform laplace_transform(const SpaceTimeField& u, double s) {
  if (!(s > 0.0)) throw InvalidArgument("Laplace parameter must be positive");
  const auto w = u.grid.trapezoid_weights();
  FieldTransform r{MeshField(u.mesh), 0.0};
  for (int m = 0; m < u.grid.size(); ++m) r.value.values += w[m] * std::exp(-s * u.grid.t(m)) * u.interior(m);
  double mx = 0.0;
  for (int m = 0; m < u.grid.size(); ++m) mx = std::max(mx, u.interior(m).cwiseAbs().maxCoeff());
  r.truncation = mx * std::exp(-s * u.grid.T()) / s;
  return r;
}

/// Solves (A + s^alpha) w = s^(alpha - 2) b with A = A0 + B d/dx + c.
inline MeshField resolvent_solve(const Discretization& disc, double alpha, double s, const MeshField& b) {
  if (!(s > 0.0)) throw InvalidArgument("Laplace parameter must be positive");
  require_same_mesh(disc.mesh, b.mesh);
  const Tridiagonal A = assemble_a0(disc) + assemble_first_order(disc);
  return {disc.mesh, A.solve(std::pow(s, alpha - 2.0) * b.values, std::pow(s, alpha))};
}

inline MeshField resolvent_solve(const SpatialMesh& mesh, const Coefficients& coeff, double alpha, double s,
                                 const MeshField& b) {
  return resolvent_solve(Discretization(mesh, coeff), alpha, s, b);
}

/// Implicit Euler for p' + A p = 0, p(0) = b.
inline SpaceTimeField parabolic_companion(const Discretization& disc, const MeshField& b, const TimeGrid& grid) {
  require_same_mesh(disc.mesh, b.mesh);
  const Tridiagonal A = assemble_a0(disc) + assemble_first_order(disc);
  const double dt = grid.dt();
  Tridiagonal S{dt * A.lower, dt * A.diag, dt * A.upper};
  SpaceTimeField p(disc.mesh, grid);
  Vector cur = b.values;
  p.set_interior(0, cur);
  for (int m = 1; m < grid.size(); ++m) {
    cur = S.solve(cur, 1.0);
    p.set_interior(m, cur);
  }
  return p;
}

struct UcpRow {
  double s = 0.0;
  std::string route_a;
  std::string route_b;
  double mismatch = 0.0;           ///< max |a - b| / max |b|
  double truncation_budget = 0.0;  ///< relative to max |b|
  double net() const { return std::max(0.0, mismatch - truncation_budget); }
};

struct UcpReport {
  std::vector<UcpRow> rows;
  double T_long = 0.0;
  double dt = 0.0;
  double dt_parabolic = 0.0;
  double worst_net() const {
    double w = 0.0;
    for (const auto& r : rows) w = std::max(w, r.net());
    return w;
  }
};

namespace detail {

inline double rel_max(const Vector& a, const Vector& b) {
  const double ref = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / std::max(ref, 1e-300);
}

inline double rel_scalar(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace detail

/// Compares, for each s, the transform of the fractional velocity solution
/// with the resolvent solve, and s^(2 - alpha) times it with the parabolic
/// transform at eta = s^alpha. Flux rows use the observed sides.
inline UcpReport ucp_correspondence_report(const ProblemSpec& spec, const LaplaceGrid& lg, int parabolic_refine = 4) {
  lg.validate();
  if (std::abs(spec.grid.T() - lg.T_long) > 1e-12 * lg.T_long)
    throw InvalidArgument("time grid must span [0, T_long]");
  if (spec.a.values.cwiseAbs().maxCoeff() != 0.0) throw InvalidArgument("correspondence needs zero initial position");
  if (spec.source || spec.F_samples) throw InvalidArgument("correspondence needs a zero source");
  if (parabolic_refine < 1) throw InvalidArgument("parabolic refinement must be at least 1");

  const auto u = solve_general(spec);
  const TimeGrid pg(lg.T_long, parabolic_refine * spec.grid.n_steps());
  const auto p = parabolic_companion(spec.disc, spec.b, pg);

  UcpReport rep;
  rep.T_long = lg.T_long;
  rep.dt = spec.grid.dt();
  rep.dt_parabolic = pg.dt();
  std::vector<std::vector<UcpRow>> per_s(lg.s.size());
  std::vector<Vector> fluxes;
  for (Side side : spec.gamma_obs) fluxes.push_back(flux_functional(spec.disc, side));

  parallel_for(lg.s.size(), [&](std::size_t k) {
    const double s = lg.s[k];
    const double eta = std::pow(s, spec.alpha);
    const double scale = std::pow(s, 2.0 - spec.alpha);
    const auto uh = laplace_transform(u, s);
    const auto ph = laplace_transform(p, eta);
    const MeshField w = resolvent_solve(spec.disc, spec.alpha, s, spec.b);
    const Vector scaled = scale * uh.value.values;
    auto& rows = per_s[k];

    const double wref = std::max(w.values.cwiseAbs().maxCoeff(), 1e-300);
    rows.push_back({s, "fractional", "resolvent", detail::rel_max(uh.value.values, w.values), uh.truncation / wref});
    const double sref = std::max(scaled.cwiseAbs().maxCoeff(), 1e-300);
    rows.push_back({s, "parabolic", "scaled_fractional", detail::rel_max(ph.value.values, scaled),
                    (ph.truncation + scale * uh.truncation) / sref});

    for (std::size_t j = 0; j < fluxes.size(); ++j) {
      const std::string tag = std::string("flux_") + to_string(spec.gamma_obs[j]) + ":";
      const double fu = fluxes[j].dot(uh.value.values);
      const double fw = fluxes[j].dot(w.values);
      const double fp = fluxes[j].dot(ph.value.values);
      const double fl = fluxes[j].cwiseAbs().sum();
      rows.push_back({s, tag + "fractional", tag + "resolvent", detail::rel_scalar(fu, fw),
                      fl * uh.truncation / std::max(std::abs(fw), 1e-300)});
      rows.push_back({s, tag + "parabolic", tag + "scaled_fractional", detail::rel_scalar(fp, scale * fu),
                      fl * (ph.truncation + scale * uh.truncation) / std::max(std::abs(scale * fu), 1e-300)});
    }
  });
  for (auto& r : per_s) rep.rows.insert(rep.rows.end(), r.begin(), r.end());
  return rep;
}

}  // namespace fdw

#endif  // FDW_UCP_HPP
