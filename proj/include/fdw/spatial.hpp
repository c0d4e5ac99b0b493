#ifndef FDW_SPATIAL_HPP
#define FDW_SPATIAL_HPP

/// \file spatial.hpp
/// \brief Finite-difference discretization of A = A0 + B d/dx + c on an interval
/// with homogeneous Dirichlet conditions.
///
/// A0 u = -(a u')' uses the conservative stencil with a sampled at half nodes,
/// so the discrete A0 is exactly symmetric. Mesh fields store interior values
/// only; the boundary values are zero unless stated otherwise.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdw/core.hpp"

namespace fdw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class SpatialMesh {
 public:
  SpatialMesh() = default;
  SpatialMesh(double x_left, double x_right, int n_interior) : xl_(x_left), xr_(x_right), n_(n_interior) {
    if (!std::isfinite(x_left) || !std::isfinite(x_right) || !(x_right > x_left))
      throw InvalidArgument("mesh needs x_L < x_R");
    if (n_interior < 1) throw InvalidArgument("mesh needs at least one interior node");
  }

  double x_left() const { return xl_; }
  double x_right() const { return xr_; }
  int n() const { return n_; }
  double h() const { return (xr_ - xl_) / (n_ + 1); }
  /// Interior node i = 0..n-1.
  double x(int i) const { return xl_ + (i + 1) * h(); }
  /// Half node between interior nodes i-1 and i, i = 0..n (i = 0 lies next to x_L).
  double x_half(int i) const { return xl_ + (i + 0.5) * h(); }

  bool operator==(const SpatialMesh& o) const { return xl_ == o.xl_ && xr_ == o.xr_ && n_ == o.n_; }

  Vector sample(const std::function<double(double)>& f) const {
    Vector v(n_);
    for (int i = 0; i < n_; ++i) v[i] = f(x(i));
    return v;
  }

  /// h-weighted inner product.
  double dot(const Vector& u, const Vector& v) const { return h() * u.dot(v); }
  double norm(const Vector& u) const { return std::sqrt(dot(u, u)); }

 private:
  double xl_ = 0.0;
  double xr_ = 1.0;
  int n_ = 1;
};

inline void require_same_mesh(const SpatialMesh& a, const SpatialMesh& b) {
  if (!(a == b)) throw GridMismatch("spatial meshes differ");
}

struct MeshField {
  SpatialMesh mesh;
  Vector values;

  MeshField() = default;
  explicit MeshField(const SpatialMesh& m) : mesh(m), values(Vector::Zero(m.n())) {}
  MeshField(const SpatialMesh& m, Vector v) : mesh(m), values(std::move(v)) {
    if (values.size() != m.n()) throw InvalidArgument("mesh field length does not match its mesh");
  }
  static MeshField sample(const SpatialMesh& m, const std::function<double(double)>& f) { return {m, m.sample(f)}; }
};

enum class Side { left, right };

inline const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

/// Coefficient callbacks; a must stay above a0 > 0.
struct Coefficients {
  std::function<double(double)> a = [](double) { return 1.0; };
  std::function<double(double)> B = [](double) { return 0.0; };
  std::function<double(double)> c = [](double) { return 0.0; };
  double a0 = 1.0;

  static Coefficients constant(double a, double B, double c) {
    Coefficients k;
    k.a = [a](double) { return a; };
    k.B = [B](double) { return B; };
    k.c = [c](double) { return c; };
    k.a0 = a;
    return k;
  }
};

/// Symmetric tridiagonal matrix: diag (n), off (n-1).
struct SymTridiagonal {
  Vector diag;
  Vector off;

  int n() const { return static_cast<int>(diag.size()); }
  Vector apply(const Vector& u) const {
    const int n = this->n();
    Vector r = diag.cwiseProduct(u);
    for (int i = 0; i + 1 < n; ++i) {
      r[i] += off[i] * u[i + 1];
      r[i + 1] += off[i] * u[i];
    }
    return r;
  }
  double entry(int i, int j) const {
    if (i == j) return diag[i];
    if (j == i + 1) return off[i];
    if (i == j + 1) return off[j];
    return 0.0;
  }
  Matrix dense() const {
    const int n = this->n();
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = diag[i];
    for (int i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = off[i];
    return m;
  }
};

/// General tridiagonal matrix: lower (n-1), diag (n), upper (n-1).
struct Tridiagonal {
  Vector lower;
  Vector diag;
  Vector upper;

  int n() const { return static_cast<int>(diag.size()); }
  Vector apply(const Vector& u) const {
    const int n = this->n();
    Vector r = diag.cwiseProduct(u);
    for (int i = 0; i + 1 < n; ++i) {
      r[i] += upper[i] * u[i + 1];
      r[i + 1] += lower[i] * u[i];
    }
    return r;
  }
  Tridiagonal transpose() const { return {upper, diag, lower}; }
  bool is_zero() const { return lower.isZero(0.0) && diag.isZero(0.0) && upper.isZero(0.0); }
  Matrix dense() const {
    const int n = this->n();
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = diag[i];
    for (int i = 0; i + 1 < n; ++i) {
      m(i, i + 1) = upper[i];
      m(i + 1, i) = lower[i];
    }
    return m;
  }
  /// Solves (this + shift I) x = rhs by the Thomas algorithm.
  Vector solve(const Vector& rhs, double shift = 0.0) const {
    const int n = this->n();
    Vector cp(n), dp(n);
    double den = diag[0] + shift;
    if (den == 0.0) throw NumericalError("singular tridiagonal system");
    cp[0] = n > 1 ? upper[0] / den : 0.0;
    dp[0] = rhs[0] / den;
    for (int i = 1; i < n; ++i) {
      den = diag[i] + shift - lower[i - 1] * cp[i - 1];
      if (den == 0.0) throw NumericalError("singular tridiagonal system");
      cp[i] = i + 1 < n ? upper[i] / den : 0.0;
      dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / den;
    }
    Vector x(n);
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
  }
};

inline Tridiagonal operator+(const SymTridiagonal& s, const Tridiagonal& t) {
  return {t.lower + s.off, t.diag + s.diag, t.upper + s.off};
}

/// Coefficients sampled on a mesh.
struct Discretization {
  SpatialMesh mesh;
  Vector a_half;   ///< n + 1 values at x_{i-1/2}
  double a_left = 1.0;
  double a_right = 1.0;
  Vector B;        ///< n + 2 values at x_L, interior nodes, x_R
  Vector c;        ///< n interior values
  double a0 = 1.0;

  Discretization() = default;
  Discretization(const SpatialMesh& m, const Coefficients& k) : mesh(m), a0(k.a0) {
    if (!(k.a0 > 0.0)) throw InvalidArgument("ellipticity bound a0 must be positive");
    const int n = m.n();
    a_half.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
      a_half[i] = k.a(m.x_half(i));
      if (!(a_half[i] >= k.a0))
        throw InvalidArgument("coefficient a drops below a0 at x = " + std::to_string(m.x_half(i)));
    }
    a_left = k.a(m.x_left());
    a_right = k.a(m.x_right());
    if (!(a_left >= k.a0) || !(a_right >= k.a0)) throw InvalidArgument("coefficient a drops below a0 at the boundary");
    B.resize(n + 2);
    B[0] = k.B(m.x_left());
    for (int i = 0; i < n; ++i) B[i + 1] = k.B(m.x(i));
    B[n + 1] = k.B(m.x_right());
    c = m.sample(k.c);
    for (int i = 0; i < B.size(); ++i)
      if (!std::isfinite(B[i])) throw InvalidArgument("coefficient B is not finite");
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(c[i])) throw InvalidArgument("coefficient c is not finite");
  }

  bool symmetric_only() const { return B.isZero(0.0) && c.isZero(0.0); }
};

/// (A0 u)_i = -(a_{i+1/2}(u_{i+1} - u_i) - a_{i-1/2}(u_i - u_{i-1})) / h^2.
inline SymTridiagonal assemble_a0(const Discretization& d) {
  const int n = d.mesh.n();
  const double h2 = d.mesh.h() * d.mesh.h();
  SymTridiagonal A;
  A.diag.resize(n);
  A.off.resize(std::max(n - 1, 0));
  for (int i = 0; i < n; ++i) A.diag[i] = (d.a_half[i] + d.a_half[i + 1]) / h2;
  for (int i = 0; i + 1 < n; ++i) A.off[i] = -d.a_half[i + 1] / h2;
  return A;
}

/// Central-difference first-order part: B_i (u_{i+1} - u_{i-1}) / (2h) + c_i u_i.
inline Tridiagonal assemble_first_order(const Discretization& d) {
  const int n = d.mesh.n();
  const double h2 = 2.0 * d.mesh.h();
  Tridiagonal M;
  M.diag = d.c;
  M.lower.resize(std::max(n - 1, 0));
  M.upper.resize(std::max(n - 1, 0));
  for (int i = 0; i + 1 < n; ++i) {
    M.upper[i] = d.B[i + 1] / h2;       // row i, column i+1
    M.lower[i] = -d.B[i + 2] / h2;      // row i+1, column i
  }
  return M;
}

inline MeshField apply_first_order(const Discretization& d, const MeshField& u) {
  require_same_mesh(d.mesh, u.mesh);
  return {u.mesh, assemble_first_order(d).apply(u.values)};
}

/// Divergence-form companion -(B w)' + c w, the exact transpose of the
/// central-difference first-order part:
/// -(B_{j+1} w_{j+1} - B_{j-1} w_{j-1}) / (2h) + c_j w_j.
inline MeshField apply_first_order_adjoint(const Discretization& d, const MeshField& w) {
  require_same_mesh(d.mesh, w.mesh);
  return {w.mesh, assemble_first_order(d).transpose().apply(w.values)};
}

/// Eigenpairs of the symmetric part, orthonormal in the h-weighted inner product.
struct EigenBasis {
  SpatialMesh mesh;
  Vector lambdas;  ///< ascending
  Matrix phis;     ///< column n is phi_n sampled at the interior nodes

  int size() const { return static_cast<int>(lambdas.size()); }
  double h() const { return mesh.h(); }
  /// Coefficients <u, phi_n>_h.
  Vector project(const Vector& u) const { return h() * (phis.transpose() * u); }
  Vector synthesize(const Vector& coef) const { return phis * coef; }
  MeshField mode(int k) const { return {mesh, phis.col(k)}; }
};

inline EigenBasis eigendecompose(const SpatialMesh& mesh, const SymTridiagonal& A) {
  if (A.n() != mesh.n()) throw GridMismatch("operator size does not match mesh");
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(A.diag, A.off, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver did not converge");
  EigenBasis b;
  b.mesh = mesh;
  b.lambdas = es.eigenvalues();
  b.phis = es.eigenvectors() / std::sqrt(mesh.h());
  for (int k = 0; k < b.size(); ++k) {
    int i = 0;
    while (i < mesh.n() && std::abs(b.phis(i, k)) < 1e-12 * b.phis.col(k).cwiseAbs().maxCoeff()) ++i;
    if (i < mesh.n() && b.phis(i, k) < 0) b.phis.col(k) *= -1.0;
  }
  return b;
}

inline EigenBasis eigendecompose(const Discretization& d) { return eigendecompose(d.mesh, assemble_a0(d)); }

/// sum_n lambda_n^gamma <u, phi_n>_h phi_n
inline MeshField fractional_power_apply(const EigenBasis& basis, double gamma, const MeshField& u) {
  require_same_mesh(basis.mesh, u.mesh);
  Vector coef = basis.project(u.values);
  if (gamma != 0.0)
    for (int k = 0; k < basis.size(); ++k) coef[k] *= std::pow(basis.lambdas[k], gamma);
  return {u.mesh, basis.synthesize(coef)};
}

/// Row vector r with flux = r . u for homogeneous Dirichlet data: the conormal
/// derivative a du/dnu at the chosen endpoint by the one-sided second-order
/// stencil through the zero boundary value.
inline Vector flux_functional(const Discretization& d, Side side) {
  const int n = d.mesh.n();
  if (n < 2) throw InvalidArgument("conormal flux needs at least two interior nodes");
  const double h = d.mesh.h();
  Vector r = Vector::Zero(n);
  if (side == Side::right) {
    r[n - 2] = d.a_right / (2.0 * h);
    r[n - 1] = -4.0 * d.a_right / (2.0 * h);
  } else {
    r[0] = -4.0 * d.a_left / (2.0 * h);
    r[1] = d.a_left / (2.0 * h);
  }
  return r;
}

inline double conormal_flux(const Discretization& d, const MeshField& u, Side side) {
  require_same_mesh(d.mesh, u.mesh);
  return flux_functional(d, side).dot(u.values);
}

}  // namespace fdw

#endif  // FDW_SPATIAL_HPP
