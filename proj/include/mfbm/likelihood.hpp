#pragma once

#include <Eigen/Core>

#include "mfbm/covariance.hpp"
#include "mfbm/matrix2.hpp"
#include "mfbm/model.hpp"

namespace mfbm {

struct ScoreVector {
  double d_sigma = 0.0;
  double d_h = 0.0;

  Vec2 vec() const { return {d_sigma, d_h}; }
};

// The four pieces of d^2 l / d theta_u d theta_v = t_info - t_bias - q_info + q_bias.
struct HessianTerms {
  Sym2x2 t_info;  // (1/2) tr(V^{-1} dV_u V^{-1} dV_v)
  Sym2x2 t_bias;  // (1/2) tr(V^{-1} d2V_uv)
  Sym2x2 q_info;  // x' V^{-1} dV_u V^{-1} dV_v V^{-1} x, symmetrized
  Sym2x2 q_bias;  // (1/2) x' V^{-1} d2V_uv V^{-1} x

  Sym2x2 hessian() const { return t_info - t_bias - q_info + q_bias; }
};

// Every covariance derivative is a combination a T + b Tdot + c Tddot of the fGn Toeplitz
// matrix and its H-derivatives.
struct ToeplitzCombo {
  double t = 0.0;
  double td = 0.0;
  double tdd = 0.0;
};

// Exact Gaussian likelihood of X ~ N(0, V_n(theta)) at one parameter value. Construction
// factors V_n and caches the whitened matrices needed by scores and information; each
// evaluation on data then costs O(n^2).
class ExactLikelihood {
 public:
  enum class Level { Loglik, Full };

  ExactLikelihood(const ModelParams& params, const SamplingScheme& scheme, Level level = Level::Full);

  const ModelParams& params() const { return cov_.params; }
  const SamplingScheme& scheme() const { return cov_.scheme; }
  const ObservationCovariance& covariance() const { return cov_; }
  std::int64_t n() const { return cov_.scheme.n(); }

  double loglik(const Eigen::VectorXd& x) const;

  // Sandwich form: d_sigma = gamma/(sigma delta) (x' Psi_sigma x - E), d_h = gamma/(2 delta) (x' Psi_H x - E).
  ScoreVector score(const Eigen::VectorXd& x) const;
  // Score in direction sigma^2 delta^{2H} Tdot (the log-free part of the H-score).
  double structural_score(const Eigen::VectorXd& x) const;
  // -1/2 tr(V^{-1} B) + 1/2 x' V^{-1} B V^{-1} x, evaluated densely for an arbitrary direction B.
  double directional_score(const Eigen::VectorXd& x, const Eigen::MatrixXd& direction) const;

  HessianTerms hessian_terms(const Eigen::VectorXd& x) const;
  Sym2x2 hessian(const Eigen::VectorXd& x) const { return hessian_terms(x).hessian(); }

  Sym2x2 expected_fisher() const;
  // (1/2) tr(V^{-1} d2V_uv)
  Sym2x2 bias_traces() const;
  // E[q_bias] = (1/2) tr(V^{-1} d2V_uv V^{-1} V), evaluated literally with dense products.
  Sym2x2 expected_bias_quadratic() const;

  ToeplitzCombo dv(int u) const;
  ToeplitzCombo d2v(int u, int v) const;
  Eigen::MatrixXd dense(const ToeplitzCombo& c) const;

  const Eigen::MatrixXd& t() const { return t_; }
  const Eigen::MatrixXd& tdot() const { return td_; }
  const Eigen::MatrixXd& tddot() const { return tdd_; }

 private:
  void require_full(const char* what) const;
  void require_size(const Eigen::VectorXd& x) const;

  ObservationCovariance cov_;
  Level level_;
  Eigen::MatrixXd t_, td_, tdd_;
  // Whitened L^{-1} B L^{-T} for B in {T, Tdot}, and traces tr(V^{-1} B) for B in {T, Tdot, Tddot}.
  Eigen::MatrixXd s_t_, s_td_;
  double tr_t_ = 0.0, tr_td_ = 0.0, tr_tdd_ = 0.0;
  double gram_tt_ = 0.0, gram_ttd_ = 0.0, gram_tdtd_ = 0.0;
};

double loglik(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme);
ScoreVector score_exact(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme);
Sym2x2 hessian_exact(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme);
Sym2x2 expected_fisher(const ModelParams& params, const SamplingScheme& scheme);

}  // namespace mfbm
