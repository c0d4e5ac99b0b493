#ifndef FDW_INVERSE_HPP
#define FDW_INVERSE_HPP

/// \file inverse.hpp
/// \brief Recovery of the spatial source factor f from boundary flux data.
///
/// Unknowns and data are carried in weighted coordinates: f~ = sqrt(h) f and
/// d~_m = sqrt(w_m) d_m with trapezoid weights w_m, so Euclidean products
/// equal the h-weighted and trapezoid-in-time inner products.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdw/adjoint.hpp"

namespace fdw {

/// The linear map f -> flux of u[f] on Gamma for a fixed template.
class ForwardMap {
 public:
  enum class Mode { dense, matrix_free };

  ForwardMap(const ProblemSpec& tmpl, Mode mode = Mode::dense) : mode_(mode) {
    if (!tmpl.source) throw InvalidArgument("forward map template needs a time profile g");
    if (tmpl.a.values.cwiseAbs().maxCoeff() != 0.0 || tmpl.b.values.cwiseAbs().maxCoeff() != 0.0)
      throw InvalidArgument("forward map template must have zero initial data");
    if (tmpl.gamma_obs.empty()) throw InvalidArgument("forward map needs at least one observed side");
    sys_ = std::make_shared<const AdjointSystem>(tmpl);
    g_ = tmpl.source->g;
    sides_ = tmpl.gamma_obs;
    if (mode == Mode::dense) assemble();
  }

  Mode mode() const { return mode_; }
  const AdjointSystem& system() const { return *sys_; }
  const SpatialMesh& mesh() const { return sys_->mesh(); }
  const TimeGrid& grid() const { return sys_->grid(); }
  const TimeSeries& g() const { return g_; }
  const std::vector<Side>& sides() const { return sides_; }
  int n_unknowns() const { return mesh().n(); }
  int n_data() const { return static_cast<int>(sides_.size()) * grid().size(); }
  /// Weighted dense matrix K~ (n_data x n_unknowns); dense mode only.
  const Matrix& matrix() const {
    if (mode_ != Mode::dense) throw InvalidArgument("forward map was built matrix-free");
    return K_;
  }

  FluxTrace apply(const MeshField& f) const {
    if (mode_ == Mode::dense) {
      require_same_mesh(f.mesh, mesh());
      return FluxTrace::from_weighted_vector(grid(), sides_, K_ * (std::sqrt(mesh().h()) * f.values));
    }
    return sys_->forward_flux(f, g_, sides_);
  }

  /// K* psi = int_0^T g(t) v[psi](t) dt through one adjoint solve.
  MeshField apply_adjoint(const FluxTrace& psi) const {
    check_data(psi);
    const SpaceTimeField v = reversed(sys_->solve_reversed(psi));
    const auto w = grid().trapezoid_weights();
    MeshField out(mesh());
    for (int m = 0; m < grid().size(); ++m) out.values += w[m] * g_[m] * v.interior(m);
    return out;
  }

  /// Weighted coordinates.
  Vector apply_weighted(const Vector& ft) const {
    if (mode_ == Mode::dense) return K_ * ft;
    return apply(MeshField(mesh(), ft / std::sqrt(mesh().h()))).weighted_vector();
  }
  Vector apply_adjoint_weighted(const Vector& dt) const {
    if (mode_ == Mode::dense) return K_.transpose() * dt;
    return std::sqrt(mesh().h()) * apply_adjoint(FluxTrace::from_weighted_vector(grid(), sides_, dt)).values;
  }

  void check_data(const FluxTrace& d) const {
    require_same_grid(d.grid, grid());
    if (d.sides != sides_) throw GridMismatch("data sides differ from the template's observed sides");
  }

 private:
  void assemble() {
    const int n = mesh().n();
    K_.resize(n_data(), n);
    const double s = 1.0 / std::sqrt(mesh().h());
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
      MeshField e(mesh());
      e.values[static_cast<int>(j)] = 1.0;
      K_.col(static_cast<int>(j)) = s * sys_->forward_flux(e, g_, sides_).weighted_vector();
    });
  }

  Mode mode_;
  std::shared_ptr<const AdjointSystem> sys_;
  TimeSeries g_;
  std::vector<Side> sides_;
  Matrix K_;
};

inline ForwardMap assemble_forward_map(const ProblemSpec& tmpl) { return ForwardMap(tmpl, ForwardMap::Mode::dense); }

inline MeshField apply_adjoint_map(const ForwardMap& map, const FluxTrace& data) { return map.apply_adjoint(data); }

enum class SolveMethod { normal_equations, cgls };

inline const char* to_string(SolveMethod m) { return m == SolveMethod::cgls ? "cgls" : "normal-equations"; }

struct ReconstructionReport {
  MeshField f_hat;
  double lambda_reg = 0.0;
  SolveMethod method = SolveMethod::normal_equations;
  int iterations = 0;
  double residual = 0.0;       ///< ||K f_hat - data||_data
  double solution_norm = 0.0;  ///< ||f_hat||_h
  std::optional<double> rel_error;
  bool rank_deficient = false;
  std::vector<double> residual_history;  ///< cgls only
};

/// Minimizes ||K f - d||^2_data + lambda ||f||^2_h.
inline ReconstructionReport reconstruct(const ForwardMap& map, const FluxTrace& data, double lambda_reg,
                                        SolveMethod method = SolveMethod::normal_equations, int max_iters = 200,
                                        double tol = 1e-10, const MeshField* truth = nullptr) {
  if (!(lambda_reg >= 0.0) || !std::isfinite(lambda_reg)) throw InvalidArgument("lambda_reg must be nonnegative");
  map.check_data(data);
  const Vector d = data.weighted_vector();
  const int n = map.n_unknowns();
  ReconstructionReport rep;
  rep.lambda_reg = lambda_reg;
  rep.method = method;
  Vector ft = Vector::Zero(n);
  if (method == SolveMethod::normal_equations) {
    const Matrix& K = map.matrix();
    Matrix N = K.transpose() * K;
    const Vector rhs = K.transpose() * d;
    Eigen::SelfAdjointEigenSolver<Matrix> es(N);
    const Vector ev = es.eigenvalues();
    const double cut = 1e-13 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    rep.rank_deficient = lambda_reg == 0.0 && ev.minCoeff() <= cut;
    if (rep.rank_deficient) {
      // smallest-norm solution through the spectral cutoff
      const Vector c = es.eigenvectors().transpose() * rhs;
      Vector y = Vector::Zero(n);
      for (int k = 0; k < n; ++k)
        if (ev[k] > cut) y[k] = c[k] / ev[k];
      ft = es.eigenvectors() * y;
    } else {
      N.diagonal().array() += lambda_reg;
      ft = N.ldlt().solve(rhs);
    }
    rep.iterations = 1;
  } else {
    // CGLS on [K; sqrt(lambda) I] f = [d; 0]
    Vector r = d;
    Vector s = map.apply_adjoint_weighted(r);
    Vector p = s;
    double gamma = s.squaredNorm();
    const double gamma0 = gamma;
    rep.residual_history.push_back(r.norm());
    int it = 0;
    while (it < max_iters && gamma > tol * tol * gamma0 && gamma > 0.0) {
      const Vector q = map.apply_weighted(p);
      const double denom = q.squaredNorm() + lambda_reg * p.squaredNorm();
      if (!(denom > 0.0)) break;
      const double a = gamma / denom;
      ft += a * p;
      r -= a * q;
      s = map.apply_adjoint_weighted(r) - lambda_reg * ft;
      const double gnew = s.squaredNorm();
      p = s + (gnew / gamma) * p;
      gamma = gnew;
      ++it;
      rep.residual_history.push_back(r.norm());
    }
    rep.iterations = it;
  }
  rep.f_hat = MeshField(map.mesh(), ft / std::sqrt(map.mesh().h()));
  rep.residual = (map.apply_weighted(ft) - d).norm();
  rep.solution_norm = ft.norm();
  if (truth) {
    require_same_mesh(truth->mesh, map.mesh());
    rep.rel_error = map.mesh().norm(rep.f_hat.values - truth->values) / map.mesh().norm(truth->values);
  }
  return rep;
}

/// Adds Gaussian noise with ||e||_data = level * ||d||_data.
inline FluxTrace add_noise(const FluxTrace& d, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw InvalidArgument("noise level must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  FluxTrace e(d.grid, d.sides);
  for (auto& s : e.series)
    for (double& v : s.values) v = nd(rng);
  const double en = e.norm();
  const double scale = en > 0.0 ? level * d.norm() / en : 0.0;
  FluxTrace out = d;
  for (std::size_t k = 0; k < out.series.size(); ++k)
    for (int m = 0; m < out.grid.size(); ++m) out.series[k][m] += scale * e.series[k][m];
  return out;
}

struct SweepRow {
  double lambda_reg;
  double residual;
  double solution_norm;
  std::optional<double> rel_error;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  int discrepancy_index = -1;  ///< largest lambda with residual <= tau * noise norm
  int corner_index = -1;       ///< maximum curvature of the log-log L-curve
};

inline std::vector<double> log_lambda_grid(double lo, double hi, int per_decade) {
  std::vector<double> out;
  const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
  for (int k = 0; k <= n; ++k) out.push_back(lo * std::pow(10.0, static_cast<double>(k) / per_decade));
  return out;
}

inline SweepReport lambda_sweep(const ForwardMap& map, const FluxTrace& data, const std::vector<double>& lambdas,
                                double noise_norm, double tau = 1.1, const MeshField* truth = nullptr) {
  SweepReport rep;
  for (double l : lambdas) {
    const auto r = reconstruct(map, data, l, SolveMethod::normal_equations, 0, 0.0, truth);
    rep.rows.push_back({l, r.residual, r.solution_norm, r.rel_error});
  }
  for (int k = 0; k < static_cast<int>(rep.rows.size()); ++k)
    if (rep.rows[k].residual <= tau * noise_norm) rep.discrepancy_index = k;
  // curvature of (log residual, log norm) against log lambda
  const int n = static_cast<int>(rep.rows.size());
  double best = -1e300;
  for (int k = 1; k + 1 < n; ++k) {
    auto pt = [&](int i) {
      return std::pair{std::log(rep.rows[i].residual), std::log(std::max(rep.rows[i].solution_norm, 1e-300))};
    };
    const auto [x0, y0] = pt(k - 1);
    const auto [x1, y1] = pt(k);
    const auto [x2, y2] = pt(k + 1);
    const double dx1 = x1 - x0, dy1 = y1 - y0, dx2 = x2 - x1, dy2 = y2 - y1;
    const double cross = dx1 * dy2 - dy1 * dx2;
    const double len = std::sqrt((dx1 * dx1 + dy1 * dy1) * (dx2 * dx2 + dy2 * dy2) *
                                 ((x2 - x0) * (x2 - x0) + (y2 - y0) * (y2 - y0)));
    const double kappa = len > 0.0 ? 2.0 * cross / len : 0.0;
    if (kappa > best) {
      best = kappa;
      rep.corner_index = k;
    }
  }
  return rep;
}

/// Flux data for f generated on a grid refined twice in space and time, then
/// restricted to the template nodes. f is given as a function of x.
inline FluxTrace fine_grid_data(const ProblemSpec& tmpl, const Coefficients& coeff,
                                const std::function<double(double)>& f,
                                const std::function<double(double)>& g) {
  const SpatialMesh& cm = tmpl.mesh();
  const SpatialMesh fm(cm.x_left(), cm.x_right(), 2 * cm.n() + 1);
  const TimeGrid fg(tmpl.grid.T(), 2 * tmpl.grid.n_steps());
  ProblemSpec p = make_problem(tmpl.alpha, fm, coeff, fg);
  p.gamma_obs = tmpl.gamma_obs;
  const MeshField ff = MeshField::sample(fm, f);
  const FluxTrace fine = AdjointSystem(p).forward_flux(ff, TimeSeries::sample(fg, g), p.gamma_obs);
  FluxTrace out(tmpl.grid, tmpl.gamma_obs);
  for (std::size_t k = 0; k < out.sides.size(); ++k)
    for (int m = 0; m < tmpl.grid.size(); ++m) out.series[k][m] = fine.series[k][2 * m];
  return out;
}

/// Solves g(0) w(t) + int_0^t g'(t - s) w(s) ds = d/dt J^{2-alpha}[flux_u](t)
/// by trapezoid time marching.
inline FluxTrace deconvolve_flux(const FluxTrace& flux_u, const TimeSeries& g, double g0, double alpha,
                                 const std::function<double(double)>& g_prime = {}) {
  if (std::abs(g0) < 1e-12) throw InvalidArgument("deconvolve_flux requires |g(0)| >= 1e-12");
  if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidArgument("alpha must lie in (1, 2)");
  require_same_grid(flux_u.grid, g.grid);
  const TimeGrid& grid = g.grid;
  const TimeSeries dg = g_prime ? TimeSeries::sample(grid, g_prime) : differentiate(g);
  const double dt = grid.dt();
  const int N = grid.n_steps();
  FluxTrace out(grid, flux_u.sides);
  for (std::size_t k = 0; k < flux_u.sides.size(); ++k) {
    const TimeSeries psi = differentiate(rl_integral(2.0 - alpha, flux_u.series[k]));
    TimeSeries& w = out.series[k];
    w[0] = psi[0] / g0;
    for (int m = 1; m <= N; ++m) {
      double acc = 0.5 * dg[m] * w[0];
      for (int j = 1; j < m; ++j) acc += dg[m - j] * w[j];
      w[m] = (psi[m] - dt * acc) / (g0 + 0.5 * dt * dg[0]);
    }
  }
  return out;
}

struct StabilityRow {
  double b_norm = 0.0;     ///< ||f1 - f2||_B through the adjoint route
  double data_norm = 0.0;  ///< ||K f1 - K f2||_data
  double ratio = 0.0;
};

inline std::vector<StabilityRow> stability_experiment(const AdjointSystem& sys,
                                                      const std::vector<std::pair<MeshField, MeshField>>& pairs,
                                                      const TimeSeries& g, const std::vector<Side>& sides) {
  std::vector<StabilityRow> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    MeshField d = pairs[i].first;
    d.values -= pairs[i].second.values;
    StabilityRow r;
    r.data_norm = (sys.forward_flux(pairs[i].first, g, sides).weighted_vector() -
                   sys.forward_flux(pairs[i].second, g, sides).weighted_vector())
                      .norm();
    r.b_norm = sys.b_norm_dual(d, g, sides);
    r.ratio = r.data_norm > 0.0 ? r.b_norm / r.data_norm : (r.b_norm == 0.0 ? 1.0 : INFINITY);
    out[i] = r;
  });
  return out;
}

}  // namespace fdw

#endif  // FDW_INVERSE_HPP
