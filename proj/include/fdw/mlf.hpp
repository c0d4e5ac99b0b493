#ifndef FDW_MLF_HPP
#define FDW_MLF_HPP

/// \file mlf.hpp
/// \brief Two-parameter Mittag-Leffler function E_{a,b}(z) on the real axis.
///
/// Three evaluation routes are combined:
///   - the power series, summed in long double;
///   - the large-|z| expansion: residue terms of the Laplace inversion contour
///     plus the algebraic series -sum z^{-k} / Gamma(b - a k), truncated at its
///     smallest term;
///   - an integral representation along the branch cut, integrated with
///     double-exponential quadrature, used when neither expansion certifies.
/// Every route returns an absolute error estimate. A value is certified when
/// that estimate is below 1e-13 of the value itself. Close to a sign change the
/// relative error is not meaningful; there the route with the smallest error
/// relative to the magnitude of its contributions is accepted instead.

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

#include "fdw/core.hpp"

namespace fdw {

struct MlfParams {
  double alpha = 1.0;
  double beta = 1.0;
};

enum class MlfMethod { exact, series, series_extended, asymptotic, integral };

inline const char* to_string(MlfMethod m) {
  switch (m) {
    case MlfMethod::exact: return "exact";
    case MlfMethod::series: return "series";
    case MlfMethod::series_extended: return "series_extended";
    case MlfMethod::asymptotic: return "asymptotic";
    case MlfMethod::integral: return "integral";
  }
  return "?";
}

struct MlfEvaluation {
  double value = 0.0;
  double error_estimate = 0.0;  ///< absolute
  double scale = 0.0;           ///< magnitude of the largest contribution
  MlfMethod method = MlfMethod::exact;
  bool certified = false;
};

/// Raised when no route reaches the accuracy contract.
class MlfEvaluationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// 1/Gamma(y), exactly zero at the non-positive integers.
inline double rgamma(double y) {
  if (y <= 0.0 && y == std::floor(y)) return 0.0;
  if (y > 0.0) {
    if (y > 171.0) return 0.0;
    return 1.0 / std::tgamma(y);
  }
  // reflection: 1/Gamma(y) = sin(pi y) Gamma(1 - y) / pi
  const double s = boost::math::sin_pi(y);
  const double lg = std::lgamma(1.0 - y);
  return s * std::exp(lg - std::log(std::numbers::pi));
}

class MittagLeffler {
 public:
  static constexpr int kMaxSeriesTerms = 300;
  static constexpr int kMaxAsymptoticTerms = 200;
  static constexpr double kCertifyRel = 1e-13;
  static constexpr double kAcceptRel = 1e-12;
  static constexpr double kExtendedSeriesReach = 48.0;

  MittagLeffler(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!std::isfinite(alpha) || !std::isfinite(beta))
      throw InvalidArgument("Mittag-Leffler parameters must be finite");
    if (!(alpha > 0.0 && alpha <= 2.0))
      throw InvalidArgument("Mittag-Leffler alpha must lie in (0, 2]");
    series_coef_.resize(kMaxSeriesTerms);
    for (int k = 0; k < kMaxSeriesTerms; ++k) {
      const long double arg = static_cast<long double>(alpha) * k + beta;
      if (arg <= 0 && arg == std::floor(arg))
        series_coef_[k] = 0.0L;
      else
        series_coef_[k] = 1.0L / std::tgamma(arg);
    }
  }

  explicit MittagLeffler(MlfParams p) : MittagLeffler(p.alpha, p.beta) {}

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double operator()(double z) const { return evaluate(z).value; }

  MlfEvaluation evaluate(double z) const {
    if (!std::isfinite(z)) throw InvalidArgument("Mittag-Leffler argument must be finite");
    if (z == 0.0) return {rgamma(beta_), 0.0, std::abs(rgamma(beta_)), MlfMethod::exact, true};
    if (alpha_ == 1.0 && beta_ == 1.0) {
      const double v = std::exp(z);
      return {v, 0.0, v, MlfMethod::exact, true};
    }
    if (alpha_ == 2.0 && beta_ == 1.0 && z < 0.0) {
      const double v = std::cos(std::sqrt(-z));
      return {v, 4e-16, 1.0, MlfMethod::exact, true};
    }
    if (z > 0.0) return evaluate_positive(z);

    std::vector<MlfEvaluation> tried;
    const double x = -z;
    auto pick = [&](const std::optional<MlfEvaluation>& r) -> bool {
      if (!r) return false;
      tried.push_back(*r);
      return r->certified;
    };

    const double w = std::pow(x, 1.0 / alpha_);

    if (x < 5.0) {
      if (pick(series(z))) return tried.back();
    } else if (x <= 50.0) {
      auto s = series(z);
      auto a = asymptotic(z);
      if (s) tried.push_back(*s);
      if (a) tried.push_back(*a);
      if (s && a && s->certified && a->certified) {
        if (std::abs(s->value - a->value) <= 1e-9 * std::abs(s->value)) return *a;
      } else if (s && s->certified) {
        return *s;
      } else if (a && a->certified) {
        return *a;
      }
    } else {
      if (pick(asymptotic(z))) return tried.back();
      if (w < 25.0 && pick(series(z))) return tried.back();
    }
    if (w < kExtendedSeriesReach && pick(series_extended(z))) return tried.back();
    if (pick(integral(z))) return tried.back();

    // Near a sign change nothing certifies relative to the value; accept the
    // route whose error is smallest against its own contribution magnitude.
    const MlfEvaluation* best = nullptr;
    for (const auto& r : tried) {
      if (r.error_estimate <= kAcceptRel * r.scale &&
          (!best || r.error_estimate / r.scale < best->error_estimate / best->scale))
        best = &r;
    }
    if (best) return *best;
    std::ostringstream msg;
    msg.precision(3);
    msg << "Mittag-Leffler evaluation failed for alpha=" << alpha_ << " beta=" << beta_ << " z=" << z
        << "; attempted:";
    if (tried.empty()) msg << " none applicable";
    for (const auto& r : tried)
      msg << ' ' << to_string(r.method) << "(err=" << r.error_estimate << ", value=" << r.value << ")";
    throw MlfEvaluationFailure(msg.str());
  }

  /// Power series in long double. Empty if the series does not converge within
  /// the term budget.
  std::optional<MlfEvaluation> series(double z) const {
    return sum_series<long double>(z, series_coef_, MlfMethod::series);
  }

  /// Power series in 113-bit binary floating point; the coefficient table is
  /// built on first use. Slower, but stays accurate up to |z|^{1/a} near 45.
  std::optional<MlfEvaluation> series_extended(double z) const {
    std::call_once(extended_->once, [this] {
      extended_->coef.resize(kMaxSeriesTerms);
      for (int k = 0; k < kMaxSeriesTerms; ++k) {
        const Quad arg = Quad(alpha_) * k + Quad(beta_);
        if (arg <= 0 && arg == floor(arg))
          extended_->coef[k] = 0;
        else
          extended_->coef[k] = 1 / boost::math::tgamma(arg);
      }
    });
    return sum_series<Quad>(z, extended_->coef, MlfMethod::series_extended);
  }

  /// Large-|z| expansion for z < 0.
  std::optional<MlfEvaluation> asymptotic(double z) const {
    if (!(z < 0.0)) return std::nullopt;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double x = -z;
    const double lx = std::log(x);
    const auto [res, res_amp, res_err] = residue_part(beta_, x);
    if (alpha_ == 1.0 && res_amp > 1e-300) return std::nullopt;

    double alg = 0.0, alg_abs = 0.0;
    double prev_env = std::numeric_limits<double>::infinity();
    double omitted = 0.0;
    bool stopped = false;
    for (int k = 1; k <= kMaxAsymptoticTerms; ++k) {
      const double y = beta_ - alpha_ * k;
      const double term = -std::exp(-k * lx) * rgamma(y);  // -z^{-k}/Gamma(y), sign from (-1)^k below
      const double signed_term = (k % 2 == 0 ? 1.0 : -1.0) * term;
      double env = std::abs(signed_term);
      if (1.0 - y > 0.0) env = std::max(env, std::exp(std::lgamma(1.0 - y) - k * lx) / std::numbers::pi);
      if (k > 1 && 1.0 - y > 1.0 && env > prev_env) {
        omitted = prev_env;
        stopped = true;
        break;
      }
      alg += signed_term;
      alg_abs += std::abs(signed_term);
      prev_env = env;
      if (env < 1e-18 * (std::abs(alg) + res_amp)) {
        omitted = env;
        stopped = true;
        break;
      }
    }
    if (!stopped) omitted = prev_env;
    MlfEvaluation r;
    r.value = res + alg;
    r.error_estimate = omitted + res_err + 4 * eps * (alg_abs + std::abs(res));
    r.scale = std::max(std::abs(r.value), res_amp + std::abs(alg));
    r.method = MlfMethod::asymptotic;
    r.certified = r.error_estimate <= kCertifyRel * std::abs(r.value);
    return r;
  }

  /// Branch-cut integral representation for z < 0 (alpha != 1).
  std::optional<MlfEvaluation> integral(double z) const {
    if (!(z < 0.0) || alpha_ == 1.0) return std::nullopt;
    auto r = integral_route(beta_, -z);
    if (!r) return std::nullopt;
    r->certified = r->error_estimate <= kCertifyRel * std::abs(r->value);
    return r;
  }

 private:
  using Quad = boost::multiprecision::cpp_bin_float_quad;

  struct ExtendedTable {
    std::once_flag once;
    std::vector<Quad> coef;
  };

  template <class Real>
  std::optional<MlfEvaluation> sum_series(double z, const std::vector<Real>& coef, MlfMethod method) const {
    using std::abs;
    const Real eps = std::numeric_limits<Real>::epsilon();
    const Real zr = z;
    const double x = std::abs(z);
    const double peak = x > 0 ? std::pow(x, 1.0 / alpha_) / alpha_ : 0.0;
    Real power = 1, sum = 0, abs_sum = 0, weighted = 0, last = 0;
    bool converged = false;
    for (int k = 0; k < kMaxSeriesTerms; ++k) {
      const Real t = power * coef[k];
      const Real at = abs(t);
      sum += t;
      abs_sum += at;
      weighted += (4 + Real(k) / 2) * at;
      if (k > peak && t != 0 && at < Real(1e-16) * abs(sum)) {
        last = at;
        converged = true;
        break;
      }
      if (k > peak + 2 && t == 0 && abs(power) < Real(1e-300)) {
        converged = true;
        break;
      }
      power *= zr;
    }
    if (!converged) return std::nullopt;
    MlfEvaluation r;
    r.value = static_cast<double>(sum);
    r.error_estimate = static_cast<double>(eps * weighted + last) +
                       std::numeric_limits<double>::epsilon() * 0.5 * std::abs(r.value);
    r.scale = std::max(std::abs(r.value), std::min(static_cast<double>(abs_sum), 1.0));
    r.method = method;
    r.certified = r.error_estimate <= kCertifyRel * std::abs(r.value);
    return r;
  }

  struct Residue {
    double value;
    double amplitude;
    double error;
  };

  // Contribution of the poles s^alpha = z of the Laplace-inversion integrand
  // lying on the principal sheet; for z = -x these are x^{1/a} e^{+-i pi/a}.
  Residue residue_part(double beta, double x) const {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (alpha_ < 1.0) return {0.0, 0.0, 0.0};
    const long double w = std::pow(static_cast<long double>(x), 1.0L / alpha_);
    if (alpha_ == 1.0) {
      // single pole on the cut; only its magnitude is tracked
      const double amp = static_cast<double>(std::pow(w, 1.0L - beta) * std::exp(-w));
      return {0.0, amp, amp};
    }
    const long double pi = std::numbers::pi_v<long double>;
    const long double theta = pi / alpha_;
    const long double amp = 2.0L / alpha_ * std::pow(w, 1.0L - beta) * std::exp(w * std::cos(theta));
    const long double phase = (1.0L - beta) * theta + w * std::sin(theta);
    const long double v = amp * std::cos(phase);
    const double a = static_cast<double>(amp);
    return {static_cast<double>(v), a, a * eps * (4.0 + static_cast<double>(w))};
  }

  std::optional<MlfEvaluation> integral_route(double beta, double x) const {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (beta >= 1.0 + alpha_) {
      // E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
      auto lower = integral_route(beta - alpha_, x);
      if (!lower) return std::nullopt;
      const double rg = rgamma(beta - alpha_);
      MlfEvaluation r = *lower;
      r.value = (lower->value - rg) / (-x);
      r.error_estimate = lower->error_estimate / x + eps * std::abs(rg) / x;
      r.scale = std::max(std::abs(r.value), (lower->scale + std::abs(rg)) / x);
      return r;
    }
    const double a = alpha_;
    const double pi = std::numbers::pi;
    const double sb = boost::math::sin_pi(beta);
    const double sab = boost::math::sin_pi(a - beta);
    const double ca = boost::math::cos_pi(a);
    const double sa = boost::math::sin_pi(a);
    auto f = [=](double r) -> double {
      if (r <= 0.0) return 0.0;
      const double ra = std::pow(r, a);
      const double num = ra * sb - x * sab;
      const double re = ra + x * ca;
      const double im = x * sa;
      const double den = re * re + im * im;
      const double v = std::exp(-r) * std::pow(r, a - beta) * num / den / pi;
      return std::isfinite(v) ? v : 0.0;
    };
    double value = 0.0, err = 0.0, l1 = 0.0;
    try {
      const double r0 = std::pow(x, 1.0 / a);
      if (r0 < 100.0) {
        boost::math::quadrature::tanh_sinh<double> ts(15);
        boost::math::quadrature::exp_sinh<double> es(9);
        double e1 = 0, l1a = 0, e2 = 0, l1b = 0;
        const double v1 = ts.integrate(f, 0.0, r0, 1e-15, &e1, &l1a);
        const double v2 = es.integrate(f, r0, std::numeric_limits<double>::infinity(), 1e-15, &e2, &l1b);
        value = v1 + v2;
        err = e1 + e2;
        l1 = l1a + l1b;
      } else {
        boost::math::quadrature::exp_sinh<double> es(9);
        value = es.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-15, &err, &l1);
      }
    } catch (const std::exception&) {
      return std::nullopt;
    }
    const auto res = residue_part(beta, x);
    MlfEvaluation r;
    r.value = value + res.value;
    r.error_estimate = err + 8 * eps * l1 + res.error;
    r.scale = std::max(std::abs(r.value), std::abs(value) + res.amplitude);
    r.method = MlfMethod::integral;
    return r;
  }

  MlfEvaluation evaluate_positive(double z) const {
    if (auto s = series(z); s) {
      s->certified = s->error_estimate <= kCertifyRel * std::abs(s->value);
      return *s;
    }
    // best effort: dominant exponential plus algebraic tail
    const double w = std::pow(z, 1.0 / alpha_);
    double v = std::exp(w) * std::pow(w, 1.0 - beta_) / alpha_;
    for (int k = 1; k <= 10; ++k) v -= std::pow(z, -k) * rgamma(beta_ - alpha_ * k);
    return {v, std::abs(v) * 1e-8, std::abs(v), MlfMethod::asymptotic, false};
  }

  double alpha_;
  double beta_;
  std::vector<long double> series_coef_;
  std::shared_ptr<ExtendedTable> extended_ = std::make_shared<ExtendedTable>();
};

/// One-shot evaluation; constructs the coefficient tables on every call.
inline double mlf_eval(MlfParams params, double z) { return MittagLeffler(params).evaluate(z).value; }

/// The three kernel factors of the solution operators at (lambda, t):
/// E_{a,1}(-lambda t^a), t E_{a,2}(-lambda t^a), t^{a-1} E_{a,a}(-lambda t^a).
struct RelaxationTriple {
  double e1 = 1.0;
  double e2t = 0.0;
  double kern = 0.0;
};

/// Evaluators for a fixed order alpha in (1, 2) bundling every Mittag-Leffler
/// family the solvers need. Immutable, shareable across threads.
class RelaxationKernels {
 public:
  explicit RelaxationKernels(double alpha)
      : alpha_(alpha),
        e1_(alpha, 1.0),
        e2_(alpha, 2.0),
        ea_(alpha, alpha),
        ea1_(alpha, alpha + 1.0),
        ea2_(alpha, alpha + 2.0) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidArgument("relaxation kernels need alpha in (1, 2)");
  }

  double alpha() const { return alpha_; }

  RelaxationTriple triple(double lambda, double t) const {
    check(lambda, t);
    if (t == 0.0) return {1.0, 0.0, 0.0};
    const double ta = std::pow(t, alpha_);
    const double z = -lambda * ta;
    return {e1_(z), t * e2_(z), ta / t * ea_(z)};
  }

  /// Integral of the kernel over [0, t]: t^a E_{a,a+1}(-lambda t^a).
  double kernel_integral(double lambda, double t) const {
    check(lambda, t);
    if (t == 0.0) return 0.0;
    const double ta = std::pow(t, alpha_);
    return ta * ea1_(-lambda * ta);
  }

  /// Double integral of the kernel: t^{a+1} E_{a,a+2}(-lambda t^a).
  double kernel_double_integral(double lambda, double t) const {
    check(lambda, t);
    if (t == 0.0) return 0.0;
    const double ta = std::pow(t, alpha_);
    return ta * t * ea2_(-lambda * ta);
  }

  const MittagLeffler& e1() const { return e1_; }
  const MittagLeffler& e2() const { return e2_; }
  const MittagLeffler& ea() const { return ea_; }

 private:
  static void check(double lambda, double t) {
    if (!std::isfinite(lambda) || !std::isfinite(t)) throw InvalidArgument("kernel arguments must be finite");
    if (t < 0.0) throw InvalidArgument("kernel time must be non-negative");
  }

  double alpha_;
  MittagLeffler e1_, e2_, ea_, ea1_, ea2_;
};

inline RelaxationTriple relaxation_triple(double alpha, double lambda, double t) {
  return RelaxationKernels(alpha).triple(lambda, t);
}

}  // namespace fdw

#endif  // FDW_MLF_HPP
