#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fdw/mlf.hpp"

namespace {

struct OracleRow {
  double alpha, beta, z, value;
  int digits;
};

std::vector<OracleRow> load_oracle() {
  std::ifstream in(std::string(FDW_TEST_DATA_DIR) + "/mlf_oracle.csv");
  std::vector<OracleRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    OracleRow r{};
    ls >> r.alpha >> r.beta >> r.z >> r.value >> r.digits;
    rows.push_back(r);
  }
  return rows;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Mlf, ClosedForms) {
  EXPECT_NEAR(fdw::mlf_eval({1.0, 1.0}, -1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(fdw::mlf_eval({2.0, 1.0}, -std::numbers::pi * std::numbers::pi), -1.0, 1e-14);
  EXPECT_NEAR(fdw::mlf_eval({1.0, 2.0}, -3.0), (1 - std::exp(-3.0)) / 3.0, 1e-15);
  EXPECT_NEAR(fdw::mlf_eval({2.0, 2.0}, -4.0), std::sin(2.0) / 2.0, 1e-14);
  EXPECT_EQ(fdw::mlf_eval({1.5, 2.0}, 0.0), 1.0);
}

TEST(Mlf, OracleFixture) {
  const auto rows = load_oracle();
  ASSERT_GE(rows.size(), 200u);
  double worst = 0;
  for (const auto& r : rows) {
    const double v = fdw::mlf_eval({r.alpha, r.beta}, r.z);
    const double e = rel(v, r.value);
    worst = std::max(worst, e);
    EXPECT_LE(e, 1e-10) << "alpha=" << r.alpha << " beta=" << r.beta << " z=" << r.z;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Mlf, NamedPoint) {
  EXPECT_NEAR(fdw::mlf_eval({1.5, 1.5}, -2.0), 0.4134096590549081962, 1e-13);
}

TEST(Mlf, ReciprocalGamma) {
  EXPECT_EQ(fdw::rgamma(0.0), 0.0);
  EXPECT_EQ(fdw::rgamma(-3.0), 0.0);
  EXPECT_NEAR(fdw::rgamma(0.5), 1 / std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_NEAR(fdw::rgamma(-0.5), -1 / (2 * std::sqrt(std::numbers::pi)), 1e-15);
}

TEST(Mlf, Recurrence) {
  for (double a : {1.1, 1.5, 1.9})
    for (double b : {1.0, 2.0, a, 0.5})
      for (double z : {-0.01, -0.7, -3.0, -12.0, -40.0, -300.0, -5e3, -1e5}) {
        const double lhs = fdw::mlf_eval({a, b}, z);
        const double rhs = z * fdw::mlf_eval({a, b + a}, z) + fdw::rgamma(b);
        const double scale = std::abs(z * fdw::mlf_eval({a, b + a}, z)) + std::abs(fdw::rgamma(b));
        EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(std::abs(lhs), 1e-3 * scale))
            << a << ' ' << b << ' ' << z;
      }
}

TEST(Mlf, DerivativeIdentities) {
  for (double a : {1.1, 1.5, 1.9})
    for (double lambda : {1.0, 9.87}) {
      fdw::RelaxationKernels k(a);
      double worst_h = 0, worst_h2 = 0;
      for (double h : {1e-3, 5e-4}) {
        double worst1 = 0, worst2 = 0;
        for (double t = 0.1; t <= 5.0; t += 0.05) {
          const double d1 = (k.triple(lambda, t + h).e2t - k.triple(lambda, t - h).e2t) / (2 * h);
          worst1 = std::max(worst1, std::abs(d1 - k.triple(lambda, t).e1));
          const double d2 = (k.triple(lambda, t + h).e1 - k.triple(lambda, t - h).e1) / (2 * h);
          worst2 = std::max(worst2, std::abs(d2 + lambda * k.triple(lambda, t).kern));
        }
        EXPECT_LE(worst1, 50 * h * h * std::max(1.0, lambda * lambda));
        EXPECT_LE(worst2, 50 * h * h * std::max(1.0, lambda * lambda));
        (h == 1e-3 ? worst_h : worst_h2) = worst1 + worst2;
      }
      // second order: halving h divides the error by about four
      EXPECT_LT(worst_h2, 0.35 * worst_h);
    }
}

TEST(Mlf, DecayBound) {
  // max |E_{a,1}(-x)|(1+x) over 601 log-spaced x in [1, 1e6], computed once with
  // tests/oracle/mlf_oracle.py (0.72677, 2.02259, 60.8500) and rounded up.
  const std::vector<std::pair<double, double>> frozen = {{1.1, 0.7268}, {1.5, 2.0226}, {1.9, 60.851}};
  for (auto [a, c] : frozen) {
    fdw::MittagLeffler e(a, 1.0);
    double worst = 0;
    for (int i = 0; i <= 600; ++i) {
      const double x = std::pow(10.0, 6.0 * i / 600.0);
      worst = std::max(worst, std::abs(e(-x)) * (1 + x));
    }
    EXPECT_LE(worst, c) << "alpha=" << a;
  }
}

TEST(Mlf, MethodAgreementOnOverlapBand) {
  // Overlap band x = w^a with w in [33, 40]: the expansion's smallest term is
  // about e^{-w} and the extended series loses about e^{w} * 1e-34, so both
  // error estimates are below 1e-10 of the value there.
  int compared = 0;
  for (double a : {1.1, 1.5, 1.9})
    for (double b : {1.0, 2.0, a}) {
      fdw::MittagLeffler e(a, b);
      for (double w = 33.0; w <= 40.0; w += 0.5) {
        const double x = std::pow(w, a);
        auto s = e.series_extended(-x);
        auto as = e.asymptotic(-x);
        ASSERT_TRUE(s && as);
        EXPECT_LE(s->error_estimate, 1e-10 * std::abs(s->value)) << a << ' ' << b << ' ' << x;
        EXPECT_LE(as->error_estimate, 1e-10 * std::abs(as->value)) << a << ' ' << b << ' ' << x;
        EXPECT_LE(rel(as->value, s->value), 1e-9) << a << ' ' << b << ' ' << x;
        ++compared;
      }
    }
  EXPECT_EQ(compared, 9 * 15);
}

TEST(Mlf, LongDoubleSeriesAgreesWithExtended) {
  for (double a : {1.1, 1.5, 1.9})
    for (double b : {1.0, 2.0, a}) {
      fdw::MittagLeffler e(a, b);
      for (double x : {0.3, 2.0, 7.0, 15.0}) {
        auto s = e.series(-x);
        auto q = e.series_extended(-x);
        ASSERT_TRUE(s && q);
        EXPECT_LE(std::abs(s->value - q->value), s->error_estimate + q->error_estimate);
      }
    }
}

TEST(Mlf, IntegralRouteMatchesOthers) {
  for (double a : {1.1, 1.5, 1.9})
    for (double b : {1.0, 2.0, a, a + 1, a + 2}) {
      fdw::MittagLeffler e(a, b);
      for (double x : {0.5, 3.0, 20.0, 200.0, 5e4}) {
        auto in = e.integral(-x);
        ASSERT_TRUE(in.has_value());
        const double ref = e(-x);
        EXPECT_LE(std::abs(in->value - ref), 1e-11 * std::max(std::abs(ref), in->scale * 1e-2))
            << a << ' ' << b << ' ' << x;
      }
    }
}

TEST(Mlf, Errors) {
  EXPECT_THROW(fdw::MittagLeffler(0.0, 1.0), fdw::InvalidArgument);
  EXPECT_THROW(fdw::MittagLeffler(2.5, 1.0), fdw::InvalidArgument);
  EXPECT_THROW(fdw::mlf_eval({1.5, 1.0}, std::nan("")), fdw::InvalidArgument);
  EXPECT_THROW(fdw::mlf_eval({1.5, 1.0}, INFINITY), fdw::InvalidArgument);
}

TEST(Mlf, PositiveArgumentsBestEffort) {
  EXPECT_NEAR(fdw::mlf_eval({1.0, 1.0}, 2.0), std::exp(2.0), 1e-13);
  // E_{2,1}(x^2) = cosh x
  EXPECT_NEAR(fdw::mlf_eval({2.0, 1.0}, 9.0) / std::cosh(3.0), 1.0, 1e-13);
}

TEST(Mlf, RelaxationTriple) {
  auto t0 = fdw::relaxation_triple(1.5, 3.0, 0.0);
  EXPECT_EQ(t0.e1, 1.0);
  EXPECT_EQ(t0.e2t, 0.0);
  EXPECT_EQ(t0.kern, 0.0);
  auto t2 = fdw::relaxation_triple(1.5, 0.0, 2.0);
  EXPECT_NEAR(t2.e1, 1.0, 1e-15);
  EXPECT_NEAR(t2.e2t, 2.0, 1e-15);
  EXPECT_NEAR(t2.kern, std::sqrt(2.0) / std::tgamma(1.5), 1e-14);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  auto t1 = fdw::relaxation_triple(1.5, pi2, 1.0);
  const auto rows = load_oracle();
  for (const auto& r : rows) {
    if (r.alpha != 1.5 || r.z != -pi2) continue;
    if (r.beta == 1.0) EXPECT_LE(rel(t1.e1, r.value), 1e-12);
    if (r.beta == 2.0) EXPECT_LE(rel(t1.e2t, r.value), 1e-12);
    if (r.beta == 1.5) EXPECT_LE(rel(t1.kern, r.value), 1e-12);
  }
  EXPECT_THROW(fdw::relaxation_triple(1.5, 1.0, -1.0), fdw::InvalidArgument);
}

TEST(Mlf, ThreadSafeSharedEvaluator) {
  fdw::MittagLeffler e(1.5, 1.0);
  std::vector<double> serial(64), parallel(64);
  for (int i = 0; i < 64; ++i) serial[i] = e(-0.5 * i);
  fdw::set_max_threads(4);
  fdw::parallel_for(64, [&](std::size_t i) { parallel[i] = e(-0.5 * i); });
  fdw::set_max_threads(0);
  EXPECT_EQ(serial, parallel);
}
