#include "mfbm/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfbm {

namespace {

// d^m/dH^m |j|^{2H} = (2 ln|j|)^m |j|^{2H}, identically zero at j = 0.
double power_term(double hurst, std::int64_t j, int order) {
  if (j == 0) return 0.0;
  const double lj = std::log(static_cast<double>(j < 0 ? -j : j));
  const double base = std::exp(2.0 * hurst * lj);
  switch (order) {
    case 0:
      return base;
    case 1:
      return 2.0 * lj * base;
    default:
      return 4.0 * lj * lj * base;
  }
}

void require_same_size(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw ValidationError(std::string(what) + ": dimension mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

}  // namespace

double fgn_autocovariance(double hurst, std::int64_t lag, int order) {
  if (order < 0 || order > 2) throw ValidationError("autocovariance order must be 0, 1 or 2");
  const std::int64_t k = lag < 0 ? -lag : lag;
  if (k < 2) {
    return 0.5 * (power_term(hurst, k + 1, order) - 2.0 * power_term(hurst, k, order) +
                  power_term(hurst, k - 1, order));
  }
  // k^{2H} s(H) with s = (1+x)^{2H} - 2 + (1-x)^{2H}, x = 1/k, kept free of cancellation
  const double x = 1.0 / static_cast<double>(k);
  const double lp = std::log1p(x), lm = std::log1p(-x);
  const double ep = std::expm1(2.0 * hurst * lp), em = std::expm1(2.0 * hurst * lm);
  const double lk = std::log(static_cast<double>(k));
  const double scale = 0.5 * std::exp(2.0 * hurst * lk);
  const double s = ep + em;
  if (order == 0) return scale * s;
  const double s1 = 2.0 * std::log1p(-x * x) + 2.0 * (lp * ep + lm * em);
  if (order == 1) return scale * (2.0 * lk * s + s1);
  const double s2 = 4.0 * (lp * lp * (1.0 + ep) + lm * lm * (1.0 + em));
  return scale * (4.0 * lk * lk * s + 4.0 * lk * s1 + s2);
}

Eigen::MatrixXd SymmetricToeplitz::dense() const {
  const Eigen::Index n = static_cast<Eigen::Index>(first_row.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = first_row[static_cast<std::size_t>(i > j ? i - j : j - i)];
  }
  return m;
}

SymmetricToeplitz build_toeplitz(double hurst, std::int64_t n, int order) {
  if (n < 1) throw ValidationError("Toeplitz size must be >= 1");
  SymmetricToeplitz t;
  t.first_row.resize(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) t.first_row[static_cast<std::size_t>(k)] = fgn_autocovariance(hurst, k, order);
  return t;
}

SpdFactor::SpdFactor(const Eigen::MatrixXd& a) : llt_(a) {
  if (a.rows() != a.cols()) throw ValidationError("SpdFactor: matrix must be square");
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization failed (matrix not positive definite), n = " +
                         std::to_string(a.rows()));
  }
  const auto& l = llt_.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NumericalError("Cholesky factor has non-positive diagonal at index " + std::to_string(i));
    }
    s += std::log(d);
  }
  log_det_ = 2.0 * s;
}

double SpdFactor::min_diag() const { return llt_.matrixLLT().diagonal().minCoeff(); }

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& b) const {
  if (b.size() != dim()) throw ValidationError("SpdFactor::solve: dimension mismatch");
  return llt_.solve(b);
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& b) const {
  if (b.rows() != dim()) throw ValidationError("SpdFactor::solve: dimension mismatch");
  return llt_.solve(b);
}

Eigen::VectorXd SpdFactor::half_solve(const Eigen::VectorXd& b) const {
  if (b.size() != dim()) throw ValidationError("SpdFactor::half_solve: dimension mismatch");
  return llt_.matrixL().solve(b);
}

Eigen::MatrixXd SpdFactor::whiten(const Eigen::MatrixXd& b) const {
  if (b.rows() != dim() || b.cols() != dim()) throw ValidationError("SpdFactor::whiten: dimension mismatch");
  // L^{-1} B, then (L^{-1} (L^{-1} B)^T)^T = L^{-1} B L^{-T}
  Eigen::MatrixXd left = llt_.matrixL().solve(b);
  Eigen::MatrixXd both = llt_.matrixL().solve(left.transpose());
  return both.transpose();
}

ObservationCovariance observation_covariance(const ModelParams& params, const SamplingScheme& scheme) {
  const auto t = build_toeplitz(params.hurst(), scheme.n(), 0).dense();
  const Eigen::Index n = t.rows();
  Eigen::MatrixXd v = scheme.delta() * (Eigen::MatrixXd::Identity(n, n) + scheme.gamma() * t);
  SpdFactor chol(v);
  return ObservationCovariance{std::move(v), std::move(chol), params, scheme};
}

Eigen::MatrixXd CirculantApprox::dense() const {
  const Eigen::Index n = static_cast<Eigen::Index>(first_row.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = first_row[static_cast<std::size_t>(((j - i) % n + n) % n)];
  }
  return m;
}

CirculantApprox circulant_approximation(const SymmetricToeplitz& t) {
  const std::int64_t n = t.n();
  if (n < 2) throw ValidationError("circulant approximation requires n >= 2");
  CirculantApprox c;
  c.first_row.resize(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) {
    c.first_row[static_cast<std::size_t>(j)] = t.first_row[static_cast<std::size_t>(std::min(j, n - j))];
  }
  // Band d holds n - d entries above and n - d below the diagonal.
  double gap = 0.0;
  for (std::int64_t d = 1; d < n; ++d) {
    const double diff = t.first_row[static_cast<std::size_t>(d)] - c.first_row[static_cast<std::size_t>(d)];
    gap += 2.0 * static_cast<double>(n - d) * diff * diff;
  }
  c.frobenius_gap_sq = gap;
  return c;
}

double resolvent_identity_residual(double hurst, std::int64_t n, double epsilon) {
  if (!(epsilon >= 0.0)) throw ValidationError("resolvent epsilon must be non-negative");
  const Eigen::MatrixXd t = build_toeplitz(hurst, n, 0).dense();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(t.rows(), t.cols());
  const SpdFactor ft(t);
  const SpdFactor fk(t + epsilon * eye);
  const Eigen::MatrixXd t_inv = ft.solve(eye);
  const Eigen::MatrixXd t_inv2 = ft.solve(t_inv);
  const Eigen::MatrixXd k = fk.solve(eye);
  const Eigen::MatrixXd l = fk.solve(t_inv2);  // K T^{-2}
  return (k - t_inv + epsilon * t_inv2 - epsilon * epsilon * l).norm();
}

double trace(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ValidationError("trace: matrix must be square");
  return a.trace();
}

double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require_same_size(a, b, "trace_product");
  // tr(AB) = sum_ij A_ij B_ji
  return (a.array() * b.transpose().array()).sum();
}

double trace_solve(const SpdFactor& f, const Eigen::MatrixXd& b) {
  if (b.rows() != f.dim() || b.cols() != f.dim()) throw ValidationError("trace_solve: dimension mismatch");
  return f.whiten(b).trace();
}

double trace_solve_product(const SpdFactor& f, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  require_same_size(b, c, "trace_solve_product");
  if (b.rows() != f.dim()) throw ValidationError("trace_solve_product: dimension mismatch");
  const Eigen::MatrixXd sb = f.whiten(b);
  const Eigen::MatrixXd sc = (&b == &c) ? sb : f.whiten(c);
  return trace_product(sb, sc);
}

TraceAverages fgn_trace_averages(double hurst, std::int64_t n) {
  const Eigen::MatrixXd t = build_toeplitz(hurst, n, 0).dense();
  const Eigen::MatrixXd td = build_toeplitz(hurst, n, 1).dense();
  const SpdFactor f(t);
  const Eigen::MatrixXd s = f.whiten(td);
  const double nn = static_cast<double>(n);
  return {s.trace() / nn, s.squaredNorm() / (2.0 * nn)};
}

}  // namespace mfbm
