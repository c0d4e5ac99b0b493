#ifndef FDW_ADJOINT_HPP
#define FDW_ADJOINT_HPP

/// \file adjoint.hpp
/// \brief Backward adjoint problem, the bilinear form B_g and the B-norm.
///
/// The adjoint field v is computed through w(s) = v(T - s), which solves
///   d_s^alpha w + A0 w - (B w)' + c w = 0,  w(0) = w_s(0) = 0,
/// with Dirichlet data -psi(T - s) on the observed sides and 0 elsewhere. With
/// that sign the identity reads
///   int_0^T <f g(t), v(t)> dt = int_0^T sum_Gamma (a du/dnu) psi dt.
///
/// Boundary data are lifted by l(x, s) = chi(x) w_Gamma(s) with chi linear.
/// Writing the Volterra form of w0 = w - l mode by mode and using
/// k_n * d^alpha l = l - lambda_n k_n * l (initial-shift terms cancel), the
/// lifting collapses onto the boundary columns of the stencil: the interior of
/// w solves the forward problem with the transposed first-order part and the
/// source -w_Gamma(s) q, q being the stencil weights of the boundary node.
/// solve_adjoint_lifted keeps the literal lifting with a discrete Caputo
/// derivative of l as a cross-check.

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdw/forward.hpp"

namespace fdw {

/// Data-space element: per-side time profiles on the template grid.
struct Probe {
  FluxTrace data;
  std::string smoothness = "sampled";
  /// exact psi(T) and psi'(T) per side when known analytically
  std::vector<std::pair<double, double>> terminal;

  const TimeGrid& grid() const { return data.grid; }
  const std::vector<Side>& sides() const { return data.sides; }
};

/// Checks psi(T) = psi'(T) = 0, exactly when terminal values are known and on
/// the samples otherwise.
inline void validate_probe(const Probe& p) {
  const int N = p.grid().n_steps();
  for (std::size_t k = 0; k < p.sides().size(); ++k) {
    const auto& s = p.data.series[k];
    double scale = 0.0;
    for (double v : s.values) {
      if (!std::isfinite(v)) throw InvalidArgument("probe has non-finite samples");
      scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) continue;
    if (!p.terminal.empty()) {
      const auto [v, dv] = p.terminal.at(k);
      if (std::abs(v) > 1e-12 * scale || std::abs(dv) * p.grid().T() > 1e-10 * scale)
        throw InvalidArgument("probe must satisfy psi(T) = psi'(T) = 0");
      continue;
    }
    if (std::abs(s[N]) > 1e-10 * scale) throw InvalidArgument("probe must vanish at t = T");
    if (N >= 2) {
      // one-sided slope at T against the largest slope in the series
      double max_slope = 0.0;
      for (int m = 0; m < N; ++m) max_slope = std::max(max_slope, std::abs(s[m + 1] - s[m]));
      const double end_slope = std::abs(3.0 * s[N] - 4.0 * s[N - 1] + s[N - 2]) / 2.0;
      if (end_slope > 0.05 * max_slope) throw InvalidArgument("probe must satisfy psi'(T) = 0");
    }
  }
}

/// psi(t) = sin^2(k pi t / T) on one side, normalized in L2(Gamma x (0, T)).
inline Probe bump_probe(const TimeGrid& grid, Side side, int k) {
  if (k < 1) throw InvalidArgument("bump index must be positive");
  Probe p;
  p.data = FluxTrace(grid, {side});
  const double T = grid.T();
  for (int m = 0; m < grid.size(); ++m) {
    const double s = std::sin(k * std::numbers::pi * grid.t(m) / T);
    p.data.series[0][m] = s * s;
  }
  const double nrm = p.data.norm();
  for (double& v : p.data.series[0].values) v /= nrm;
  p.smoothness = "sin2-bump";
  p.terminal = {{0.0, 0.0}};
  return p;
}

inline std::vector<Probe> bump_dictionary(const TimeGrid& grid, const std::vector<Side>& sides, int K) {
  if (K < 1) throw InvalidArgument("dictionary must contain at least one probe");
  std::vector<Probe> d;
  for (Side s : sides)
    for (int k = 1; k <= K; ++k) d.push_back(bump_probe(grid, s, k));
  return d;
}

inline Probe probe_from_samples(const FluxTrace& data) {
  Probe p;
  p.data = data;
  return p;
}

inline SpaceTimeField reversed(const SpaceTimeField& u) {
  SpaceTimeField r = u;
  r.values = u.values.rowwise().reverse();
  return r;
}

struct BilinearReport {
  double bilinear = 0.0;  ///< B_g(f, psi) through the adjoint field
  double flux_side = 0.0; ///< int int_Gamma (du/dnu) psi through the forward field
  double abs_residual = 0.0;
  double rel_residual = 0.0;
};

/// Stencil weights of the boundary node in the interior rows of A0 - (B .)' + c.
inline Vector boundary_column(const Discretization& d, Side side) {
  const int n = d.mesh.n();
  const double h = d.mesh.h();
  Vector q = Vector::Zero(n);
  if (side == Side::right)
    q[n - 1] = -d.a_half[n] / (h * h) - d.B[n + 1] / (2.0 * h);
  else
    q[0] = -d.a_half[0] / (h * h) + d.B[0] / (2.0 * h);
  return q;
}

/// Primal and adjoint solvers on one template (fixed alpha, coefficients,
/// grids), sharing the kernel table.
class AdjointSystem {
 public:
  explicit AdjointSystem(const ProblemSpec& p)
      : spec_(p),
        forward_(std::make_shared<const ForwardSolver>(p)),
        adjoint_(std::make_shared<const ForwardSolver>(p.alpha, p.disc, p.basis, p.grid, p.n_modes,
                                                       assemble_first_order(p.disc).transpose(),
                                                       forward_->shared_kernels())) {}

  const ProblemSpec& spec() const { return spec_; }
  const ForwardSolver& forward() const { return *forward_; }
  const ForwardSolver& adjoint() const { return *adjoint_; }
  const TimeGrid& grid() const { return spec_.grid; }
  const SpatialMesh& mesh() const { return spec_.mesh(); }

  /// Reversed field w for arbitrary data (no terminal check).
  SpaceTimeField solve_reversed(const FluxTrace& psi) const {
    require_same_grid(psi.grid, grid());
    const int n = mesh().n();
    const int N = grid().n_steps();
    Matrix F = Matrix::Zero(n, grid().size());
    std::vector<std::pair<int, std::vector<double>>> rows;
    for (std::size_t k = 0; k < psi.sides.size(); ++k) {
      std::vector<double> wb(grid().size());
      for (int m = 0; m <= N; ++m) wb[m] = -psi.series[k][N - m];
      const Vector q = boundary_column(spec_.disc, psi.sides[k]);
      for (int m = 0; m <= N; ++m) F.col(m) -= wb[m] * q;
      rows.emplace_back(psi.sides[k] == Side::right ? n + 1 : 0, std::move(wb));
    }
    SpaceTimeField w = adjoint_->solve(Vector::Zero(n), Vector::Zero(n), F);
    for (const auto& [row, wb] : rows)
      for (int m = 0; m <= N; ++m) w.values(row, m) += wb[m];
    return w;
  }

  SpaceTimeField solve_adjoint(const Probe& probe) const {
    validate_probe(probe);
    return reversed(solve_reversed(probe.data));
  }

  /// Same problem through the literal lifting w = w0 + chi w_Gamma with the
  /// Caputo derivative of the lifting taken numerically.
  SpaceTimeField solve_adjoint_lifted(const Probe& probe) const {
    validate_probe(probe);
    const auto& psi = probe.data;
    require_same_grid(psi.grid, grid());
    const int n = mesh().n();
    const int N = grid().n_steps();
    const Tridiagonal Mt = assemble_first_order(spec_.disc).transpose();
    const SymTridiagonal A0 = assemble_a0(spec_.disc);
    Matrix F = Matrix::Zero(n, grid().size());
    std::vector<std::pair<int, TimeSeries>> rows;
    std::vector<std::pair<Vector, TimeSeries>> lifts;
    for (std::size_t k = 0; k < psi.sides.size(); ++k) {
      const Side side = psi.sides[k];
      TimeSeries wb(grid());
      for (int m = 0; m <= N; ++m) wb[m] = -psi.series[k][N - m];
      Vector chi(n);
      for (int i = 0; i < n; ++i) {
        const double xi = (mesh().x(i) - mesh().x_left()) / (mesh().x_right() - mesh().x_left());
        chi[i] = side == Side::right ? xi : 1.0 - xi;
      }
      // full stencil of the lifting: interior part plus the boundary node with value 1
      const Vector Achi = A0.apply(chi) + Mt.apply(chi) + boundary_column(spec_.disc, side);
      const TimeSeries dwb = caputo_shifted(spec_.alpha, wb, 0.0, 0.0);
      for (int m = 0; m <= N; ++m) F.col(m) -= dwb[m] * chi + wb[m] * Achi;
      rows.emplace_back(side == Side::right ? n + 1 : 0, wb);
      lifts.emplace_back(chi, wb);
    }
    SpaceTimeField w = adjoint_->solve(Vector::Zero(n), Vector::Zero(n), F);
    for (const auto& [chi, wb] : lifts)
      for (int m = 0; m <= N; ++m) w.values.col(m).segment(1, n) += wb[m] * chi;
    for (const auto& [row, wb] : rows)
      for (int m = 0; m <= N; ++m) w.values(row, m) += wb[m];
    return reversed(w);
  }

  /// int_0^T g(t) <f, v(t)>_h dt by the trapezoid rule.
  double bilinear_form(const MeshField& f, const TimeSeries& g, const SpaceTimeField& v) const {
    require_same_mesh(f.mesh, mesh());
    require_same_grid(g.grid, grid());
    require_same_grid(v.grid, grid());
    const auto w = grid().trapezoid_weights();
    double s = 0.0;
    for (int m = 0; m < grid().size(); ++m) s += w[m] * g[m] * mesh().dot(f.values, v.interior(m));
    return s;
  }

  double bilinear_form(const MeshField& f, const TimeSeries& g, const Probe& probe) const {
    return bilinear_form(f, g, solve_adjoint(probe));
  }

  /// K f: flux on the given sides of the solution with a = b = 0, F = f g.
  FluxTrace forward_flux(const MeshField& f, const TimeSeries& g, const std::vector<Side>& sides) const {
    require_same_mesh(f.mesh, mesh());
    require_same_grid(g.grid, grid());
    const int n = mesh().n();
    Matrix F(n, grid().size());
    for (int m = 0; m < grid().size(); ++m) F.col(m) = g[m] * f.values;
    return forward_->measure(forward_->solve(Vector::Zero(n), Vector::Zero(n), F), sides);
  }

  BilinearReport integral_identity(const MeshField& f, const TimeSeries& g, const Probe& probe) const {
    BilinearReport r;
    r.bilinear = bilinear_form(f, g, probe);
    r.flux_side = forward_flux(f, g, probe.sides()).dot(probe.data);
    r.abs_residual = std::abs(r.bilinear - r.flux_side);
    const double scale = std::max(std::abs(r.bilinear), std::abs(r.flux_side));
    r.rel_residual = scale > 0.0 ? r.abs_residual / scale : 0.0;
    return r;
  }

  /// Reference B-norm: the sup over normalized data-space probes of
  /// <Kf, psi> equals ||Kf||_data.
  double b_norm_direct(const MeshField& f, const TimeSeries& g, const std::vector<Side>& sides) const {
    return forward_flux(f, g, sides).norm();
  }

  /// The sup attained at psi = Kf / ||Kf||, with B_g evaluated through the
  /// adjoint field, so numerator and data norm come from different routes.
  double b_norm_dual(const MeshField& f, const TimeSeries& g, const std::vector<Side>& sides) const {
    const FluxTrace kf = forward_flux(f, g, sides);
    const double nrm = kf.norm();
    if (nrm == 0.0) return 0.0;
    return bilinear_form(f, g, reversed(solve_reversed(kf))) / nrm;
  }

  /// Sup of |B_g(f, psi)| over normalized psi in the span of the dictionary,
  /// sqrt(b^T G^{-1} b) with b_k = B_g(f, psi_k) and G the data Gram matrix.
  double b_norm_dictionary(const MeshField& f, const TimeSeries& g, const std::vector<Probe>& dict) const {
    return b_norm_dictionary(f, g, dict, adjoint_fields(dict));
  }

  double b_norm_dictionary(const MeshField& f, const TimeSeries& g, const std::vector<Probe>& dict,
                           const std::vector<SpaceTimeField>& fields) const {
    if (dict.empty()) throw InvalidArgument("dictionary mode needs at least one probe");
    if (fields.size() != dict.size()) throw InvalidArgument("adjoint fields do not match the dictionary");
    const int K = static_cast<int>(dict.size());
    Vector b(K);
    for (int k = 0; k < K; ++k) b[k] = bilinear_form(f, g, fields[k]);
    const Matrix G = gram(dict);
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const double cut = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
    const Vector c = es.eigenvectors().transpose() * b;
    double s = 0.0;
    for (int k = 0; k < K; ++k)
      if (es.eigenvalues()[k] > cut) s += c[k] * c[k] / es.eigenvalues()[k];
    return std::sqrt(s);
  }

  /// Largest single-probe value max_k |B_g(f, psi_k)| / ||psi_k||.
  double b_norm_dictionary_max(const MeshField& f, const TimeSeries& g, const std::vector<Probe>& dict,
                               const std::vector<SpaceTimeField>& fields) const {
    if (dict.empty()) throw InvalidArgument("dictionary mode needs at least one probe");
    double best = 0.0;
    for (std::size_t k = 0; k < dict.size(); ++k)
      best = std::max(best, std::abs(bilinear_form(f, g, fields[k])) / dict[k].data.norm());
    return best;
  }

  std::vector<SpaceTimeField> adjoint_fields(const std::vector<Probe>& dict) const {
    std::vector<SpaceTimeField> out(dict.size());
    parallel_for(dict.size(), [&](std::size_t k) { out[k] = solve_adjoint(dict[k]); });
    return out;
  }

  static Matrix gram(const std::vector<Probe>& dict) {
    const int K = static_cast<int>(dict.size());
    Matrix G(K, K);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j <= i; ++j) G(i, j) = G(j, i) = dict[i].data.dot(dict[j].data);
    return G;
  }

 private:
  ProblemSpec spec_;
  std::shared_ptr<const ForwardSolver> forward_;
  std::shared_ptr<const ForwardSolver> adjoint_;
};

inline SpaceTimeField solve_adjoint(const ProblemSpec& spec, const Probe& probe) {
  return AdjointSystem(spec).solve_adjoint(probe);
}

inline double bilinear_form(const ProblemSpec& spec, const MeshField& f, const TimeSeries& g, const Probe& probe) {
  return AdjointSystem(spec).bilinear_form(f, g, probe);
}

inline BilinearReport integral_identity_residual(const ProblemSpec& spec, const MeshField& f, const TimeSeries& g,
                                                 const Probe& probe) {
  return AdjointSystem(spec).integral_identity(f, g, probe);
}

}  // namespace fdw

#endif  // FDW_ADJOINT_HPP
