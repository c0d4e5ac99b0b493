#ifndef FDW_FRACOPS_HPP
#define FDW_FRACOPS_HPP

/// \file fracops.hpp
/// \brief Riemann-Liouville integrals on uniform time grids, the Caputo
/// derivative of order alpha in (1, 2) written as d/dt J^{2-alpha} d/dt, and
/// the Duhamel kernel built from a time profile g.
///
/// Weakly singular kernels are always integrated by exact moments against the
/// piecewise-linear interpolant of the data (product trapezoid rule).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "fdw/core.hpp"

namespace fdw {

class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double T, int n_steps) : T_(T), n_(n_steps) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("time horizon must be positive");
    if (n_steps < 1) throw InvalidArgument("time grid needs at least one step");
  }

  double T() const { return T_; }
  int n_steps() const { return n_; }
  int size() const { return n_ + 1; }
  double dt() const { return T_ / n_; }
  double t(int m) const { return m == n_ ? T_ : m * dt(); }

  bool operator==(const TimeGrid& o) const { return T_ == o.T_ && n_ == o.n_; }

  /// Trapezoid weights (dt/2, dt, ..., dt, dt/2).
  std::vector<double> trapezoid_weights() const {
    std::vector<double> w(size(), dt());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
  }

 private:
  double T_ = 1.0;
  int n_ = 1;
};

struct TimeSeries {
  TimeGrid grid;
  std::vector<double> values;

  TimeSeries() = default;
  explicit TimeSeries(TimeGrid g) : grid(g), values(g.size(), 0.0) {}
  TimeSeries(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.size())
      throw InvalidArgument("time series length does not match its grid");
  }

  static TimeSeries sample(TimeGrid g, const std::function<double(double)>& f) {
    TimeSeries s(g);
    for (int m = 0; m < g.size(); ++m) s.values[m] = f(g.t(m));
    return s;
  }

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int m) const { return values[m]; }
  double& operator[](int m) { return values[m]; }
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b) {
  if (!(a == b)) throw GridMismatch("time grids differ");
}

/// Trapezoid integral over the whole grid.
inline double integrate(const TimeSeries& f) {
  const auto w = f.grid.trapezoid_weights();
  double s = 0.0;
  for (int m = 0; m < f.size(); ++m) s += w[m] * f[m];
  return s;
}

inline TimeSeries reversed(const TimeSeries& f) {
  TimeSeries r = f;
  std::reverse(r.values.begin(), r.values.end());
  return r;
}

/// Product-trapezoid weights of J^gamma on a uniform grid. The value at node n
/// is dt^gamma / Gamma(gamma + 2) * (first(n) f_0 + sum_{j=1}^{n} lag(n - j) f_j).
class RlWeights {
 public:
  RlWeights(double gamma, int n_steps, double dt) : gamma_(gamma), scale_(std::pow(dt, gamma) / std::tgamma(gamma + 2.0)) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("fractional order must be positive");
    lag_.resize(n_steps + 1);
    first_.resize(n_steps + 1);
    const double g1 = gamma + 1.0;
    lag_[0] = 1.0;
    for (int k = 1; k <= n_steps; ++k)
      lag_[k] = std::pow(k + 1.0, g1) - 2.0 * std::pow(double(k), g1) + std::pow(k - 1.0, g1);
    first_[0] = 0.0;
    for (int n = 1; n <= n_steps; ++n)
      first_[n] = std::pow(n - 1.0, g1) - (n - 1.0 - gamma) * std::pow(double(n), gamma);
  }

  double gamma() const { return gamma_; }
  double scale() const { return scale_; }
  /// Weight of f_j in the value at node n, scale included.
  double weight(int n, int j) const {
    if (n == 0) return 0.0;
    if (j == 0) return scale_ * first_[n];
    return scale_ * lag_[n - j];
  }

  template <class Get>
  double apply_at(int n, Get&& f) const {
    if (n == 0) return 0.0;
    double s = first_[n] * f(0);
    for (int j = 1; j <= n; ++j) s += lag_[n - j] * f(j);
    return scale_ * s;
  }

 private:
  double gamma_;
  double scale_;
  std::vector<double> lag_;
  std::vector<double> first_;
};

/// Forward Riemann-Liouville integral J^gamma f, gamma in (0, 2].
inline TimeSeries rl_integral(double gamma, const TimeSeries& f) {
  if (!(gamma > 0.0) || gamma > 2.0) throw InvalidArgument("rl_integral: gamma must lie in (0, 2]");
  const RlWeights w(gamma, f.grid.n_steps(), f.grid.dt());
  TimeSeries out(f.grid);
  parallel_for(f.size(), [&](std::size_t n) {
    out.values[n] = w.apply_at(static_cast<int>(n), [&](int j) { return f.values[j]; });
  });
  return out;
}

/// Backward integral J_{T-}^gamma f by time reflection.
inline TimeSeries rl_integral_backward(double gamma, const TimeSeries& f) {
  return reversed(rl_integral(gamma, reversed(f)));
}

/// c * t^p
struct PowerTerm {
  double coef = 0.0;
  double power = 0.0;
};

/// A series held as explicit power terms plus a sampled remainder. Integrals
/// of non-smooth data such as J^b f behave like f(0) t^b near 0; keeping that
/// term exact lets further integrals stay second order.
struct SplitSeries {
  TimeSeries regular;
  std::vector<PowerTerm> terms;

  TimeSeries sampled() const {
    TimeSeries s = regular;
    for (int m = 0; m < s.size(); ++m) {
      const double t = s.grid.t(m);
      for (const auto& p : terms) s[m] += p.power == 0.0 ? p.coef : (t == 0.0 ? 0.0 : p.coef * std::pow(t, p.power));
    }
    return s;
  }
};

/// J^gamma f with the f(0) t^gamma / Gamma(gamma + 1) part kept exact.
inline SplitSeries rl_integral_split(double gamma, const TimeSeries& f) {
  const double f0 = f[0];
  TimeSeries rest = f;
  for (auto& v : rest.values) v -= f0;
  SplitSeries out{rl_integral(gamma, rest), {}};
  if (f0 != 0.0) out.terms.push_back({f0 / std::tgamma(gamma + 1.0), gamma});
  return out;
}

/// J^gamma of a split series: power terms map exactly,
/// J^gamma t^p = Gamma(p + 1) / Gamma(p + 1 + gamma) t^{p + gamma}.
inline SplitSeries rl_integral_split(double gamma, const SplitSeries& f) {
  SplitSeries out = rl_integral_split(gamma, f.regular);
  for (const auto& p : f.terms)
    out.terms.push_back({p.coef * std::exp(std::lgamma(p.power + 1.0) - std::lgamma(p.power + 1.0 + gamma)), p.power + gamma});
  return out;
}

/// Three-point derivative: centered inside, one-sided second order at the ends.
inline TimeSeries differentiate(const TimeSeries& f) {
  const int n = f.size();
  if (n < 3) throw InvalidArgument("differentiation needs at least three nodes");
  const double h = f.grid.dt();
  TimeSeries d(f.grid);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (int m = 1; m + 1 < n; ++m) d[m] = (f[m + 1] - f[m - 1]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return d;
}

/// d/dt J^{2-alpha} d/dt applied to u - a - t b.
inline TimeSeries caputo_shifted(double alpha, const TimeSeries& u, double a, double b) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidArgument("caputo_shifted: alpha must lie in (1, 2)");
  if (u.size() < 3) throw InvalidArgument("caputo_shifted: series needs at least three nodes");
  if (std::abs(u[0] - a) > u.grid.dt() * std::max(1.0, std::abs(a)))
    throw InvalidArgument("caputo_shifted: u(0) does not match the initial value a");
  TimeSeries v(u.grid);
  for (int m = 0; m < u.size(); ++m) v[m] = u[m] - a - u.grid.t(m) * b;
  return differentiate(rl_integral(2.0 - alpha, differentiate(v)));
}

/// Right-sided Caputo derivative on [t, T] by reflection through the forward one.
inline TimeSeries caputo_backward(double alpha, const TimeSeries& v, double v_T, double dv_T) {
  return reversed(caputo_shifted(alpha, reversed(v), v_T, -dv_T));
}

/// rho(t) = singular * t^{alpha-2} + regular(t), with J^{2-alpha} rho = g.
struct DuhamelKernel {
  double alpha = 1.5;
  double g0 = 0.0;
  double singular = 0.0;  ///< g0 / Gamma(alpha - 1)
  TimeSeries regular;     ///< J^{alpha-1} g'
};

/// Builds the Duhamel kernel. g0 is the exact g(0); g_prime, when given, is
/// sampled instead of differencing g.
inline DuhamelKernel duhamel_kernel(double alpha, const TimeSeries& g, double g0,
                                    const std::function<double(double)>& g_prime = {}) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidArgument("duhamel_kernel: alpha must lie in (1, 2)");
  if (!std::isfinite(g0)) throw InvalidArgument("duhamel_kernel: g(0) must be finite");
  const TimeSeries dg = g_prime ? TimeSeries::sample(g.grid, g_prime) : differentiate(g);
  DuhamelKernel k;
  k.alpha = alpha;
  k.g0 = g0;
  k.singular = g0 / std::tgamma(alpha - 1.0);
  k.regular = rl_integral(alpha - 1.0, dg);
  return k;
}

/// Samples of rho at the positive nodes (node 0 is singular and left as NaN).
inline TimeSeries duhamel_kernel_values(const DuhamelKernel& k) {
  TimeSeries r = k.regular;
  r[0] = std::nan("");
  for (int m = 1; m < r.size(); ++m) r[m] += k.singular * std::pow(r.grid.t(m), k.alpha - 2.0);
  return r;
}

/// Trapezoid convolution (a * b)(t_n) = int_0^{t_n} a(t_n - s) b(s) ds of two
/// continuous series.
inline TimeSeries convolve(const TimeSeries& a, const TimeSeries& b) {
  require_same_grid(a.grid, b.grid);
  const double dt = a.grid.dt();
  TimeSeries out(a.grid);
  parallel_for(a.size(), [&](std::size_t nn) {
    const int n = static_cast<int>(nn);
    if (n == 0) return;
    double s = 0.5 * (a[n] * b[0] + a[0] * b[n]);
    for (int j = 1; j < n; ++j) s += a[n - j] * b[j];
    out.values[n] = s * dt;
  });
  return out;
}

/// (rho * v)(t): the singular part by exact moments against piecewise-linear v
/// (g0 J^{alpha-1} v), the regular part by the trapezoid rule.
inline TimeSeries convolve_singular(const DuhamelKernel& rho, const TimeSeries& v) {
  require_same_grid(rho.regular.grid, v.grid);
  TimeSeries out = convolve(rho.regular, v);
  if (rho.g0 != 0.0) {
    const TimeSeries s = rl_integral(rho.alpha - 1.0, v);
    for (int m = 0; m < out.size(); ++m) out[m] += rho.g0 * s[m];
  }
  return out;
}

}  // namespace fdw

#endif  // FDW_FRACOPS_HPP
