#ifndef FDW_FORWARD_HPP
#define FDW_FORWARD_HPP

/// \file forward.hpp
/// \brief Forward solver for  d_t^alpha u + A0 u + M u = F  with u(0) = a,
/// u_t(0) = b and homogeneous Dirichlet data, alpha in (1, 2).
///
/// The solution is written in the eigenbasis of A0 as the Volterra equation
///   u_n(t) = E_{a,1}(-l_n t^a) a_n + t E_{a,2}(-l_n t^a) b_n
///            + int_0^t k_n(t - s) (F - M u)_n(s) ds,   k_n(s) = s^{a-1} E_{a,a}(-l_n s^a),
/// where M is the central-difference first-order part. The integrand is taken
/// piecewise linear in time and integrated against k_n exactly through
///   G_n(s) = s^{a+1} E_{a,a+2}(-l_n s^a)   (second antiderivative of k_n),
///   K_n(s) = s^a E_{a,a+1}(-l_n s^a)         (first antiderivative).
/// The weight of the current node, G_n(dt)/dt, is nonzero, so each step of the
/// causal sweep solves one small linear system whose LU factors are computed
/// once.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdw/core.hpp"
#include "fdw/fracops.hpp"
#include "fdw/mlf.hpp"
#include "fdw/spatial.hpp"

namespace fdw {

/// Values on the tensor grid, boundary rows included: row 0 is x_L, row n+1
/// is x_R, column m is t_m.
struct SpaceTimeField {
  SpatialMesh mesh;
  TimeGrid grid;
  Matrix values;

  SpaceTimeField() = default;
  SpaceTimeField(const SpatialMesh& m, const TimeGrid& g) : mesh(m), grid(g), values(Matrix::Zero(m.n() + 2, g.size())) {}

  Vector interior(int m) const { return values.col(m).segment(1, mesh.n()); }
  void set_interior(int m, const Vector& v) { values.col(m).segment(1, mesh.n()) = v; }
  /// Interior block, n x (n_steps + 1).
  Matrix interior_block() const { return values.middleRows(1, mesh.n()); }
};

/// h- and trapezoid-weighted space-time L2 norm of the interior values.
inline double spacetime_norm(const SpaceTimeField& u) {
  const auto w = u.grid.trapezoid_weights();
  double s = 0.0;
  for (int m = 0; m < u.grid.size(); ++m) s += w[m] * u.mesh.h() * u.interior(m).squaredNorm();
  return std::sqrt(s);
}

inline double sup_norm(const SpaceTimeField& u) { return u.values.cwiseAbs().maxCoeff(); }

/// Flux time series per observed side.
struct FluxTrace {
  TimeGrid grid;
  std::vector<Side> sides;
  std::vector<TimeSeries> series;

  FluxTrace() = default;
  FluxTrace(const TimeGrid& g, std::vector<Side> s) : grid(g), sides(std::move(s)) {
    for (std::size_t i = 0; i < sides.size(); ++i) series.emplace_back(g);
  }

  /// Trapezoid-in-time inner product summed over sides.
  double dot(const FluxTrace& o) const {
    if (!(grid == o.grid) || sides != o.sides) throw GridMismatch("flux traces live on different grids or sides");
    const auto w = grid.trapezoid_weights();
    double s = 0.0;
    for (std::size_t k = 0; k < sides.size(); ++k)
      for (int m = 0; m < grid.size(); ++m) s += w[m] * series[k][m] * o.series[k][m];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  /// Stacked values scaled by sqrt of the trapezoid weights, so the Euclidean
  /// inner product of two such vectors equals dot().
  Vector weighted_vector() const {
    const auto w = grid.trapezoid_weights();
    Vector v(static_cast<Eigen::Index>(sides.size()) * grid.size());
    for (std::size_t k = 0; k < sides.size(); ++k)
      for (int m = 0; m < grid.size(); ++m) v[k * grid.size() + m] = std::sqrt(w[m]) * series[k][m];
    return v;
  }
  static FluxTrace from_weighted_vector(const TimeGrid& g, const std::vector<Side>& sides, const Vector& v) {
    FluxTrace t(g, sides);
    const auto w = g.trapezoid_weights();
    for (std::size_t k = 0; k < sides.size(); ++k)
      for (int m = 0; m < g.size(); ++m) t.series[k][m] = v[k * g.size() + m] / std::sqrt(w[m]);
    return t;
  }
};

/// Separable source f(x) g(t), with the exact g(0) and optionally g'.
struct SourceSpec {
  MeshField f;
  TimeSeries g;
  double g0 = 0.0;
  std::function<double(double)> g_prime;
};

struct ProblemSpec {
  double alpha = 1.5;
  Discretization disc;
  EigenBasis basis;
  TimeGrid grid;
  MeshField a;
  MeshField b;
  std::optional<SourceSpec> source;
  std::optional<Matrix> F_samples;  ///< general source, n x (n_steps + 1)
  std::vector<Side> gamma_obs{Side::right};
  int n_modes = 0;                  ///< 0 = full spectrum

  const SpatialMesh& mesh() const { return disc.mesh; }

  /// Source samples on the interior grid, n x (n_steps + 1).
  Matrix source_samples() const {
    const int n = mesh().n();
    Matrix F = Matrix::Zero(n, grid.size());
    if (source) {
      require_same_grid(source->g.grid, grid);
      require_same_mesh(source->f.mesh, mesh());
      for (int m = 0; m < grid.size(); ++m) F.col(m) = source->g[m] * source->f.values;
    }
    if (F_samples) {
      if (F_samples->rows() != n || F_samples->cols() != grid.size())
        throw GridMismatch("source samples do not match the space-time grid");
      F += *F_samples;
    }
    return F;
  }
};

/// Builds a problem with zero data on the given mesh, coefficients and grid.
inline ProblemSpec make_problem(double alpha, const SpatialMesh& mesh, const Coefficients& k, const TimeGrid& grid) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidArgument("alpha must lie in (1, 2)");
  ProblemSpec p;
  p.alpha = alpha;
  p.disc = Discretization(mesh, k);
  p.basis = eigendecompose(p.disc);
  p.grid = grid;
  p.a = MeshField(mesh);
  p.b = MeshField(mesh);
  return p;
}

/// Per-mode kernel tables on a uniform grid.
class ModalKernels {
 public:
  ModalKernels(double alpha, const Vector& lambdas, const TimeGrid& grid) : alpha_(alpha), grid_(grid) {
    const int nm = static_cast<int>(lambdas.size());
    const int nt = grid.n_steps();
    const double dt = grid.dt();
    e1_ = Matrix::Zero(nm, nt + 1);
    e2t_ = Matrix::Zero(nm, nt + 1);
    lag_ = Matrix::Zero(nm, nt + 1);
    first_ = Matrix::Zero(nm, nt + 1);
    const RelaxationKernels rk(alpha);
    parallel_for(static_cast<std::size_t>(nm), [&](std::size_t kk) {
      const int k = static_cast<int>(kk);
      const double l = lambdas[k];
      std::vector<double> G(nt + 1), K1(nt + 1);
      for (int p = 0; p <= nt; ++p) {
        const double s = grid.t(p);
        const auto tr = rk.triple(l, s);
        e1_(k, p) = tr.e1;
        e2t_(k, p) = tr.e2t;
        G[p] = rk.kernel_double_integral(l, s);
        K1[p] = rk.kernel_integral(l, s);
      }
      lag_(k, 0) = G[1] / dt;
      for (int p = 1; p < nt; ++p) lag_(k, p) = (G[p + 1] - 2.0 * G[p] + G[p - 1]) / dt;
      for (int m = 1; m <= nt; ++m) first_(k, m) = K1[m] - (G[m] - G[m - 1]) / dt;
    });
  }

  double alpha() const { return alpha_; }
  const TimeGrid& grid() const { return grid_; }
  int n_modes() const { return static_cast<int>(e1_.rows()); }
  const Matrix& e1() const { return e1_; }
  const Matrix& e2t() const { return e2t_; }
  /// Weight of the source value at lag p = m - j >= 0 (j >= 1).
  const Matrix& lag() const { return lag_; }
  /// Weight of the source value at t_0 in the value at t_m.
  const Matrix& first() const { return first_; }

  /// Product-integrated convolution of g (modes x times) at node m.
  Vector convolve_at(const Matrix& g, int m) const {
    Vector r = Vector::Zero(n_modes());
    if (m == 0) return r;
    r = first_.col(m).cwiseProduct(g.col(0));
    for (int j = 1; j <= m; ++j) r += lag_.col(m - j).cwiseProduct(g.col(j));
    return r;
  }

 private:
  double alpha_;
  TimeGrid grid_;
  Matrix e1_, e2t_, lag_, first_;
};

struct PicardReport {
  SpaceTimeField field;
  std::vector<double> deltas;        ///< deltas[k-1] = sup |u_{k+1} - u_k|, k >= 1
  std::vector<double> graph_deltas;  ///< max_t ||A0 (u_{k+1} - u_k)(t)||_h, same indexing
  int iterations = 0;
  bool converged = false;
};

/// Reusable solver for fixed order, coefficients, basis and time grid.
class ForwardSolver {
 public:
  static constexpr double kInstabilityLimit = 1e12;

  ForwardSolver(double alpha, const Discretization& disc, const EigenBasis& basis, const TimeGrid& grid,
                int n_modes = 0, std::optional<Tridiagonal> first_order = std::nullopt,
                std::shared_ptr<const ModalKernels> kernels = nullptr)
      : alpha_(alpha), disc_(disc), grid_(grid) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidArgument("alpha must lie in (1, 2)");
    require_same_mesh(disc.mesh, basis.mesh);
    const int nfull = basis.size();
    if (n_modes < 0 || n_modes > nfull) throw InvalidArgument("mode count exceeds the spectrum");
    nm_ = n_modes == 0 ? nfull : n_modes;
    phi_ = basis.phis.leftCols(nm_);
    lambdas_ = basis.lambdas.head(nm_);
    h_ = basis.h();
    M_ = first_order ? *first_order : assemble_first_order(disc);
    if (M_.n() != disc.mesh.n()) throw GridMismatch("first-order operator does not match the mesh");
    has_M_ = !M_.is_zero();
    if (kernels) {
      if (kernels->alpha() != alpha || !(kernels->grid() == grid) || kernels->n_modes() != nm_)
        throw GridMismatch("shared kernel table does not match the solver");
      kernels_ = std::move(kernels);
    } else {
      kernels_ = std::make_shared<const ModalKernels>(alpha, lambdas_, grid);
    }
    if (has_M_) {
      Matrix MPhi(disc.mesh.n(), nm_);
      for (int k = 0; k < nm_; ++k) MPhi.col(k) = M_.apply(phi_.col(k));
      PMPhi_ = h_ * phi_.transpose() * MPhi;
      Matrix Q = Matrix::Identity(nm_, nm_);
      Q += kernels_->lag().col(0).asDiagonal() * PMPhi_;
      lu_ = Q.partialPivLu();
    }
  }

  explicit ForwardSolver(const ProblemSpec& p)
      : ForwardSolver(p.alpha, p.disc, p.basis, p.grid, p.n_modes) {}

  double alpha() const { return alpha_; }
  const Discretization& disc() const { return disc_; }
  const TimeGrid& grid() const { return grid_; }
  const SpatialMesh& mesh() const { return disc_.mesh; }
  int n_modes() const { return nm_; }
  bool has_first_order() const { return has_M_; }
  const Tridiagonal& first_order() const { return M_; }
  const ModalKernels& kernels() const { return *kernels_; }
  std::shared_ptr<const ModalKernels> shared_kernels() const { return kernels_; }
  const Matrix& phis() const { return phi_; }
  const Vector& lambdas() const { return lambdas_; }

  Vector project(const Vector& u) const { return h_ * (phi_.transpose() * u); }

  /// Homogeneous part E_{a,1} a_n + t E_{a,2} b_n at node m, modal.
  Vector initial_part(const Vector& a_hat, const Vector& b_hat, int m) const {
    return kernels_->e1().col(m).cwiseProduct(a_hat) + kernels_->e2t().col(m).cwiseProduct(b_hat);
  }

  /// Causal sweep of the discrete Volterra equation. F is n x (n_steps + 1).
  SpaceTimeField solve(const Vector& a, const Vector& b, const Matrix& F) const {
    check_data(a, b, F);
    const int nt = grid_.n_steps();
    const Matrix Fhat = h_ * (phi_.transpose() * F);
    const Vector ah = project(a), bh = project(b);
    Matrix uhat(nm_, nt + 1), ghat(nm_, nt + 1);
    uhat.col(0) = ah;
    ghat.col(0) = Fhat.col(0);
    if (has_M_) ghat.col(0) -= PMPhi_ * ah;
    const Vector& d0 = kernels_->lag().col(0);
    for (int m = 1; m <= nt; ++m) {
      Vector rhs = initial_part(ah, bh, m) + kernels_->first().col(m).cwiseProduct(ghat.col(0));
      for (int j = 1; j < m; ++j) rhs += kernels_->lag().col(m - j).cwiseProduct(ghat.col(j));
      rhs += d0.cwiseProduct(Fhat.col(m));
      uhat.col(m) = has_M_ ? Vector(lu_.solve(rhs)) : rhs;
      if (!uhat.col(m).allFinite() || uhat.col(m).cwiseAbs().maxCoeff() > kInstabilityLimit)
        throw NumericalError("forward solve unstable: modal amplitude exceeds 1e12 at t = " +
                             std::to_string(grid_.t(m)));
      ghat.col(m) = Fhat.col(m);
      if (has_M_) ghat.col(m) -= PMPhi_ * uhat.col(m);
    }
    return synthesize(uhat, a);
  }

  /// Picard iteration u_{k+1} = Psi + N u_k from u_0 = 0 over the whole grid.
  PicardReport picard(const Vector& a, const Vector& b, const Matrix& F, int max_iters, double tol) const {
    check_data(a, b, F);
    const int nt = grid_.n_steps();
    const Matrix Fhat = h_ * (phi_.transpose() * F);
    const Vector ah = project(a), bh = project(b);
    Matrix psi(nm_, nt + 1);
    for (int m = 0; m <= nt; ++m) psi.col(m) = initial_part(ah, bh, m);
    psi.col(0) = ah;
    Matrix u = Matrix::Zero(nm_, nt + 1);
    PicardReport rep;
    for (int it = 0; it < max_iters; ++it) {
      Matrix g = Fhat;
      if (has_M_) g -= PMPhi_ * u;
      Matrix next(nm_, nt + 1);
      for (int m = 0; m <= nt; ++m) next.col(m) = psi.col(m) + kernels_->convolve_at(g, m);
      const Matrix diff = next - u;
      const double delta = (phi_ * diff).cwiseAbs().maxCoeff();
      const double graph = (lambdas_.asDiagonal() * diff).colwise().norm().maxCoeff();
      u = std::move(next);
      if (it == 0) continue;  // first step measures u_1 - 0
      rep.deltas.push_back(delta);
      rep.graph_deltas.push_back(graph);
      rep.iterations = it;
      if (delta < tol) {
        rep.converged = true;
        break;
      }
    }
    rep.field = synthesize(u, a);
    return rep;
  }

  /// Flux row vectors for each side.
  FluxTrace measure(const SpaceTimeField& u, const std::vector<Side>& sides) const;

 private:
  void check_data(const Vector& a, const Vector& b, const Matrix& F) const {
    const int n = disc_.mesh.n();
    if (a.size() != n || b.size() != n) throw GridMismatch("initial data do not match the mesh");
    if (F.rows() != n || F.cols() != grid_.size()) throw GridMismatch("source samples do not match the grid");
  }

  SpaceTimeField synthesize(const Matrix& uhat, const Vector& a) const {
    SpaceTimeField out(disc_.mesh, grid_);
    out.values.middleRows(1, disc_.mesh.n()) = phi_ * uhat;
    // with the full spectrum phi * project(a) = a to round-off; keep a exact
    if (nm_ == disc_.mesh.n()) out.set_interior(0, a);
    return out;
  }

  double alpha_;
  Discretization disc_;
  TimeGrid grid_;
  int nm_ = 0;
  Matrix phi_;
  Vector lambdas_;
  double h_ = 0.0;
  Tridiagonal M_;
  bool has_M_ = false;
  Matrix PMPhi_;
  Eigen::PartialPivLU<Matrix> lu_;
  std::shared_ptr<const ModalKernels> kernels_;
};

/// Conormal flux per time node and side.
inline FluxTrace measure_flux(const SpaceTimeField& u, const Discretization& disc, const std::vector<Side>& sides) {
  require_same_mesh(u.mesh, disc.mesh);
  FluxTrace tr(u.grid, sides);
  for (std::size_t k = 0; k < sides.size(); ++k) {
    const Vector r = flux_functional(disc, sides[k]);
    for (int m = 0; m < u.grid.size(); ++m) tr.series[k][m] = r.dot(u.interior(m));
  }
  return tr;
}

inline FluxTrace ForwardSolver::measure(const SpaceTimeField& u, const std::vector<Side>& sides) const {
  return measure_flux(u, disc_, sides);
}

/// Spectral solution for B = c = 0.
inline SpaceTimeField solve_symmetric(const ProblemSpec& p) {
  if (!p.disc.symmetric_only()) throw InvalidArgument("solve_symmetric requires B = 0 and c = 0");
  return ForwardSolver(p).solve(p.a.values, p.b.values, p.source_samples());
}

inline SpaceTimeField solve_general(const ProblemSpec& p) {
  return ForwardSolver(p).solve(p.a.values, p.b.values, p.source_samples());
}

inline PicardReport picard_iterate(const ProblemSpec& p, int max_iters, double tol) {
  return ForwardSolver(p).picard(p.a.values, p.b.values, p.source_samples(), max_iters, tol);
}

/// Source-driven solution by the Duhamel route: solve the velocity problem
/// (a = 0, b = f, F = 0), build rho with J^{2-a} rho = g and convolve in time
/// at every node.
inline SpaceTimeField duhamel_solve(const ProblemSpec& p, const ForwardSolver* solver = nullptr) {
  if (!p.source) throw InvalidArgument("duhamel_solve needs a separable source");
  if (p.a.values.cwiseAbs().maxCoeff() != 0.0 || p.b.values.cwiseAbs().maxCoeff() != 0.0)
    throw InvalidArgument("duhamel_solve requires zero initial data");
  std::optional<ForwardSolver> own;
  if (!solver) solver = &own.emplace(p);
  const int n = p.mesh().n();
  const SpaceTimeField v = solver->solve(Vector::Zero(n), p.source->f.values, Matrix::Zero(n, p.grid.size()));
  const DuhamelKernel rho = duhamel_kernel(p.alpha, p.source->g, p.source->g0, p.source->g_prime);
  SpaceTimeField u(p.mesh(), p.grid);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const int i = static_cast<int>(ii) + 1;
    TimeSeries vi(p.grid);
    for (int m = 0; m < p.grid.size(); ++m) vi[m] = v.values(i, m);
    const TimeSeries ui = convolve_singular(rho, vi);
    for (int m = 0; m < p.grid.size(); ++m) u.values(i, m) = ui[m];
  });
  return u;
}

struct GrowthReport {
  double C = 0.0;
  double kappa = 0.0;
  double worst_ratio = 0.0;  ///< max over the check window of ||A0 u|| / (C e^{kappa t})
  bool passed = false;
  TimeSeries norms;          ///< ||A0 u(t)||_h
};

/// Fits ||A0 u(t)||_h <= C e^{kappa t} on [0, T_long/4] and checks it on the
/// rest of [0, T_long]. Requires F = 0.
inline GrowthReport growth_sanity(const ProblemSpec& p, double T_long, int n_steps) {
  if (p.source || p.F_samples) throw InvalidArgument("growth_sanity requires F = 0");
  ProblemSpec q = p;
  q.grid = TimeGrid(T_long, n_steps);
  const SpaceTimeField u = solve_general(q);
  const SymTridiagonal A = assemble_a0(q.disc);
  GrowthReport rep;
  rep.norms = TimeSeries(q.grid);
  for (int m = 0; m < q.grid.size(); ++m) rep.norms[m] = q.mesh().norm(A.apply(u.interior(m)));
  const int fit_end = q.grid.n_steps() / 4;
  // growth rate: slope of the log running maximum over the second half of the fit window
  std::vector<double> runmax(fit_end + 1);
  double rm = 0.0;
  for (int m = 0; m <= fit_end; ++m) runmax[m] = rm = std::max(rm, rep.norms[m]);
  const int m0 = fit_end / 2;
  double slope = 0.0;
  if (fit_end > m0 && runmax[m0] > 0.0)
    slope = (std::log(runmax[fit_end]) - std::log(runmax[m0])) / (q.grid.t(fit_end) - q.grid.t(m0));
  rep.kappa = 1.05 * std::max(0.0, slope);
  for (int m = 0; m <= fit_end; ++m) rep.C = std::max(rep.C, rep.norms[m] * std::exp(-rep.kappa * q.grid.t(m)));
  rep.C *= 1.5;
  for (int m = 0; m < q.grid.size(); ++m) {
    const double bound = rep.C * std::exp(rep.kappa * q.grid.t(m));
    rep.worst_ratio = std::max(rep.worst_ratio, bound > 0 ? rep.norms[m] / bound : 0.0);
  }
  rep.passed = rep.worst_ratio <= 1.0;
  return rep;
}

}  // namespace fdw

#endif  // FDW_FORWARD_HPP
