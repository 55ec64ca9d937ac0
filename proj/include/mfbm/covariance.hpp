#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mfbm/model.hpp"

namespace mfbm {

// Autocovariance of standard fGn, rho_H(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2,
// or its m-th derivative in H (order in {0,1,2}).
double fgn_autocovariance(double hurst, std::int64_t lag, int order = 0);

struct SymmetricToeplitz {
  std::vector<double> first_row;

  std::int64_t n() const { return static_cast<std::int64_t>(first_row.size()); }
  Eigen::MatrixXd dense() const;
};

// first_row[k] = fgn_autocovariance(hurst, k, order), k = 0..n-1.
SymmetricToeplitz build_toeplitz(double hurst, std::int64_t n, int order = 0);

// Cholesky factor A = L L^T of a symmetric positive definite matrix.
class SpdFactor {
 public:
  // Throws NumericalError when A is not numerically positive definite.
  explicit SpdFactor(const Eigen::MatrixXd& a);

  Eigen::Index dim() const { return llt_.rows(); }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }
  double log_det() const { return log_det_; }
  double min_diag() const;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  // L^{-1} b
  Eigen::VectorXd half_solve(const Eigen::VectorXd& b) const;
  // L^{-1} B L^{-T}, symmetric when B is; shares its spectrum with A^{-1} B.
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& b) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

// V_n = delta (I + gamma T_n) together with its Cholesky factor.
struct ObservationCovariance {
  Eigen::MatrixXd v;
  SpdFactor chol;
  ModelParams params;
  SamplingScheme scheme;
};

ObservationCovariance observation_covariance(const ModelParams& params, const SamplingScheme& scheme);

struct CirculantApprox {
  std::vector<double> first_row;
  double frobenius_gap_sq = 0.0;  // ||T_n - C_n||_F^2

  Eigen::MatrixXd dense() const;
};

// Even-extension circulant, c_j = r_{min(j, n-j)}. Requires t.n() >= 2.
CirculantApprox circulant_approximation(const SymmetricToeplitz& t);

// ||K - T^{-1} + eps T^{-2} - eps^2 K T^{-2}||_F with K = (T + eps I)^{-1}.
double resolvent_identity_residual(double hurst, std::int64_t n, double epsilon);

// Trace kernels. Dimension mismatches throw ValidationError.
double trace(const Eigen::MatrixXd& a);
// tr(A B)
double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
// tr(F^{-1} B)
double trace_solve(const SpdFactor& f, const Eigen::MatrixXd& b);
// tr(F^{-1} B F^{-1} C)
double trace_solve_product(const SpdFactor& f, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c);

// (1/n) tr(T^{-1} Tdot) and (1/2n) tr((T^{-1} Tdot)^2) for the standard fGn of size n.
struct TraceAverages {
  double first = 0.0;
  double second = 0.0;
};
TraceAverages fgn_trace_averages(double hurst, std::int64_t n);

}  // namespace mfbm
