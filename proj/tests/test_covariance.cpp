#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>

#include "mfbm/covariance.hpp"

using namespace mfbm;

namespace {

// rho_H(k) written with pow directly, in extended precision
double rho_pow(double h, double k) {
  const long double a = 2.0L * h, kk = k;
  return static_cast<double>(0.5L * (std::pow(std::abs(kk + 1), a) - 2 * std::pow(std::abs(kk), a) +
                                     std::pow(std::abs(kk - 1), a)));
}

// m-th H-derivative in extended precision
double rho_der(double h, long double k, int m) {
  auto term = [&](long double j) {
    if (j == 0) return 0.0L;
    const long double l = std::log(std::abs(j));
    return std::pow(2 * l, m) * std::exp(2.0L * h * l);
  };
  return static_cast<double>(0.5L * (term(k + 1) - 2 * term(k) + term(k - 1)));
}

}  // namespace

TEST(Covariance, DerivativesAtLargeLags) {
  for (double h : {0.1, 0.35, 0.6, 0.74}) {
    for (int k : {2, 3, 50, 1000}) {
      for (int m : {1, 2}) {
        const double e = rho_der(h, k, m);
        EXPECT_NEAR(fgn_autocovariance(h, k, m), e, 1e-9 * std::abs(e)) << h << " " << k << " " << m;
      }
    }
  }
}

TEST(Covariance, AutocovarianceValues) {
  for (double h : {0.1, 0.35, 0.6, 0.74}) {
    EXPECT_DOUBLE_EQ(fgn_autocovariance(h, 0), 1.0);
    for (int k : {1, 2, 7, 100}) {
      EXPECT_NEAR(fgn_autocovariance(h, k), rho_pow(h, k), 1e-12 * std::abs(rho_pow(h, k)));
      EXPECT_DOUBLE_EQ(fgn_autocovariance(h, k), fgn_autocovariance(h, -k));
    }
  }
  // white noise
  EXPECT_NEAR(fgn_autocovariance(0.5, 3), 0.0, 1e-15);
  // sign of the memory
  EXPECT_GT(fgn_autocovariance(0.6, 1), 0.0);
  EXPECT_LT(fgn_autocovariance(0.35, 1), 0.0);
}

TEST(Covariance, AutocovarianceDerivatives) {
  const double step = 1e-5;
  for (double h : {0.2, 0.6}) {
    for (int k : {0, 1, 3, 20}) {
      const double d1 = (rho_pow(h + step, k) - rho_pow(h - step, k)) / (2 * step);
      const double d2 = (rho_pow(h + step, k) - 2 * rho_pow(h, k) + rho_pow(h - step, k)) / (step * step);
      EXPECT_NEAR(fgn_autocovariance(h, k, 1), d1, 1e-8 * std::max(1.0, std::abs(d1)));
      EXPECT_NEAR(fgn_autocovariance(h, k, 2), d2, 1e-4 * std::max(1.0, std::abs(d2)));
    }
  }
  EXPECT_THROW(fgn_autocovariance(0.6, 1, 3), ValidationError);
}

TEST(Covariance, ToeplitzDense) {
  const auto t = build_toeplitz(0.6, 6);
  const Eigen::MatrixXd m = t.dense();
  EXPECT_TRUE(m.isApprox(m.transpose()));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(m(i, j), fgn_autocovariance(0.6, i - j));
  EXPECT_THROW(build_toeplitz(0.6, 0), ValidationError);
}

TEST(Covariance, FactorAgreesWithDenseLinearAlgebra) {
  const Eigen::MatrixXd t = build_toeplitz(0.35, 20).dense();
  const SpdFactor f(t);
  EXPECT_NEAR(f.log_det(), std::log(t.determinant()), 1e-10);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(20, -1.0, 2.0);
  EXPECT_LT((t * f.solve(b) - b).norm(), 1e-12);
  const Eigen::VectorXd hb = f.half_solve(b);
  EXPECT_NEAR(hb.squaredNorm(), b.dot(t.inverse() * b), 1e-10);
  EXPECT_GT(f.min_diag(), 0.0);

  const Eigen::MatrixXd td = build_toeplitz(0.35, 20, 1).dense();
  const Eigen::MatrixXd ti = t.inverse();
  EXPECT_NEAR(trace_solve(f, td), (ti * td).trace(), 1e-10);
  EXPECT_NEAR(trace_solve_product(f, td, t), (ti * td * ti * t).trace(), 1e-10);
  EXPECT_NEAR(trace_product(td, t), (td * t).trace(), 1e-12);
  EXPECT_TRUE(f.whiten(td).isApprox(f.whiten(td).transpose(), 1e-12));
}

TEST(Covariance, FactorRejectsIndefinite) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(SpdFactor{a}, NumericalError);
}

TEST(Covariance, TraceKernelDimensionChecks) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(4, 4);
  EXPECT_THROW(trace_product(a, b), ValidationError);
  EXPECT_THROW(trace(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
  const SpdFactor f(a);
  EXPECT_THROW(trace_solve(f, b), ValidationError);
}

TEST(Covariance, ObservationCovariance) {
  const ModelParams p(1.2, 0.6);
  const SamplingScheme s(p, 10, 0.4);
  const auto c = observation_covariance(p, s);
  const Eigen::MatrixXd t = build_toeplitz(0.6, 10).dense();
  const Eigen::MatrixXd expect = s.delta() * Eigen::MatrixXd::Identity(10, 10) + s.signal_scale() * t;
  EXPECT_LT((c.v - expect).norm(), 1e-14);
}

TEST(Covariance, DerivativeRelation) {
  // d_H V - sigma ln(delta) d_sigma V = sigma^2 delta^{2H} Tdot, built from the model quantities
  const ModelParams p(1.4, 0.6);
  const SamplingScheme s(p, 16, 0.4);
  const double step = 1e-6;
  auto v_at = [&](double sg, double h) {
    const ModelParams q(sg, h);
    return observation_covariance(q, SamplingScheme(q, 16, 0.4)).v;
  };
  const Eigen::MatrixXd dvs = (v_at(1.4 + step, 0.6) - v_at(1.4 - step, 0.6)) / (2 * step);
  const Eigen::MatrixXd dvh = (v_at(1.4, 0.6 + step) - v_at(1.4, 0.6 - step)) / (2 * step);
  const Eigen::MatrixXd rhs = s.signal_scale() * build_toeplitz(0.6, 16, 1).dense();
  EXPECT_LT((dvh - 1.4 * s.log_delta() * dvs - rhs).norm() / rhs.norm(), 1e-8);
}

TEST(Covariance, CirculantGapMatchesDense) {
  for (double h : {0.35, 0.6}) {
    const auto t = build_toeplitz(h, 33);
    const auto c = circulant_approximation(t);
    const Eigen::MatrixXd cm = c.dense();
    EXPECT_TRUE(cm.isApprox(cm.transpose()));
    EXPECT_NEAR(c.frobenius_gap_sq, (t.dense() - cm).squaredNorm(), 1e-12);
  }
  EXPECT_THROW(circulant_approximation(build_toeplitz(0.6, 1)), ValidationError);
}

TEST(Covariance, CirculantGapPerDimensionShrinks) {
  double prev = 1e9;
  for (std::int64_t n : {64, 128, 256, 512}) {
    const double r = circulant_approximation(build_toeplitz(0.6, n)).frobenius_gap_sq / n;
    EXPECT_LE(r, prev);
    prev = r;
  }
}

TEST(Covariance, ResolventIdentity) {
  for (double h : {0.2, 0.35}) {
    for (double eps : {0.05, 0.4, 2.0}) {
      const Eigen::MatrixXd t = build_toeplitz(h, 48).dense();
      const double scale = (t + eps * Eigen::MatrixXd::Identity(48, 48)).inverse().norm();
      EXPECT_LT(resolvent_identity_residual(h, 48, eps) / scale, 1e-10) << h << " " << eps;
    }
  }
  EXPECT_THROW(resolvent_identity_residual(0.2, 8, -1.0), ValidationError);
}

TEST(Covariance, TraceAveragesAgainstExplicitInverse) {
  const double h = 0.3;
  const std::int64_t n = 40;
  const Eigen::MatrixXd t = build_toeplitz(h, n).dense();
  const Eigen::MatrixXd td = build_toeplitz(h, n, 1).dense();
  const Eigen::MatrixXd m = t.inverse() * td;
  const auto a = fgn_trace_averages(h, n);
  EXPECT_NEAR(a.first, m.trace() / n, 1e-10);
  EXPECT_NEAR(a.second, (m * m).trace() / (2.0 * n), 1e-10);
}
