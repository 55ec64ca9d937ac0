#include "mfbm/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace mfbm {

namespace {

double frob_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return a.cwiseProduct(b).sum(); }

double combine(const ToeplitzCombo& c, double t, double td, double tdd) { return c.t * t + c.td * td + c.tdd * tdd; }

}  // namespace

ExactLikelihood::ExactLikelihood(const ModelParams& params, const SamplingScheme& scheme, Level level)
    : cov_(observation_covariance(params, scheme)), level_(level) {
  const double h = params.hurst();
  const std::int64_t n = scheme.n();
  t_ = build_toeplitz(h, n, 0).dense();
  td_ = build_toeplitz(h, n, 1).dense();
  tdd_ = build_toeplitz(h, n, 2).dense();
  if (level_ == Level::Loglik) return;
  s_t_ = cov_.chol.whiten(t_);
  s_td_ = cov_.chol.whiten(td_);
  tr_t_ = s_t_.trace();
  tr_td_ = s_td_.trace();
  tr_tdd_ = trace_solve(cov_.chol, tdd_);
  gram_tt_ = frob_inner(s_t_, s_t_);
  gram_ttd_ = frob_inner(s_t_, s_td_);
  gram_tdtd_ = frob_inner(s_td_, s_td_);
}

void ExactLikelihood::require_full(const char* what) const {
  if (level_ != Level::Full) throw ValidationError(std::string(what) + ": likelihood context built at Loglik level");
}

void ExactLikelihood::require_size(const Eigen::VectorXd& x) const {
  if (x.size() != n()) {
    throw ValidationError("data length " + std::to_string(x.size()) + " does not match n = " + std::to_string(n()));
  }
  if (!x.allFinite()) throw ValidationError("data contain non-finite values");
}

ToeplitzCombo ExactLikelihood::dv(int u) const {
  const double s = params().sigma();
  const double gd = scheme().signal_scale();  // gamma * delta
  const double ld = scheme().log_delta();
  if (u == 0) return {2.0 * gd / s, 0.0, 0.0};
  return {2.0 * ld * gd, gd, 0.0};
}

ToeplitzCombo ExactLikelihood::d2v(int u, int v) const {
  const double s = params().sigma();
  const double gd = scheme().signal_scale();
  const double ld = scheme().log_delta();
  if (u > v) std::swap(u, v);
  if (u == 0 && v == 0) return {2.0 * gd / (s * s), 0.0, 0.0};
  if (u == 0) return {4.0 * ld * gd / s, 2.0 * gd / s, 0.0};
  return {4.0 * ld * ld * gd, 4.0 * ld * gd, gd};
}

Eigen::MatrixXd ExactLikelihood::dense(const ToeplitzCombo& c) const { return c.t * t_ + c.td * td_ + c.tdd * tdd_; }

double ExactLikelihood::loglik(const Eigen::VectorXd& x) const {
  require_size(x);
  const Eigen::VectorXd w = cov_.chol.solve(x);
  const double nn = static_cast<double>(n());
  return -0.5 * nn * std::log(2.0 * std::numbers::pi) - 0.5 * cov_.chol.log_det() - 0.5 * x.dot(w);
}

ScoreVector ExactLikelihood::score(const Eigen::VectorXd& x) const {
  require_full("score");
  require_size(x);
  const double d = scheme().delta();
  const double g = scheme().gamma();
  const double ld = scheme().log_delta();
  const double s = params().sigma();
  // y = A^{-1} x with A = I + gamma T = V / delta
  const Eigen::VectorXd y = d * cov_.chol.solve(x);
  const double qt = y.dot(t_ * y);
  const double qtd = y.dot(td_ * y);
  // tr(A^{-1} B) = delta tr(V^{-1} B); E = delta tr(A^{-1} B)
  const double et = d * d * tr_t_;
  const double etd = d * d * tr_td_;
  ScoreVector out;
  out.d_sigma = g / (s * d) * (qt - et);
  out.d_h = g / (2.0 * d) * (2.0 * ld * (qt - et) + (qtd - etd));
  return out;
}

double ExactLikelihood::structural_score(const Eigen::VectorXd& x) const {
  require_full("structural_score");
  require_size(x);
  const double d = scheme().delta();
  const Eigen::VectorXd y = d * cov_.chol.solve(x);
  return scheme().gamma() / (2.0 * d) * (y.dot(td_ * y) - d * d * tr_td_);
}

double ExactLikelihood::directional_score(const Eigen::VectorXd& x, const Eigen::MatrixXd& direction) const {
  require_size(x);
  if (direction.rows() != n() || direction.cols() != n()) throw ValidationError("direction matrix has wrong size");
  const Eigen::VectorXd w = cov_.chol.solve(x);
  return 0.5 * (w.dot(direction * w) - trace_solve(cov_.chol, direction));
}

HessianTerms ExactLikelihood::hessian_terms(const Eigen::VectorXd& x) const {
  require_full("hessian");
  require_size(x);
  const Eigen::VectorXd w = cov_.chol.solve(x);
  const Eigen::VectorXd pt = t_ * w;
  const Eigen::VectorXd ptd = td_ * w;
  const double qt = w.dot(pt);
  const double qtd = w.dot(ptd);
  const double qtdd = w.dot(tdd_ * w);
  const Eigen::VectorXd rt = cov_.chol.solve(pt);
  const Eigen::VectorXd rtd = cov_.chol.solve(ptd);
  const double g11 = pt.dot(rt);
  const double g12 = 0.5 * (pt.dot(rtd) + ptd.dot(rt));
  const double g22 = ptd.dot(rtd);

  HessianTerms h;
  h.t_info = expected_fisher();
  h.t_bias = bias_traces();
  double qi[2][2], qb[2][2];
  for (int u = 0; u < 2; ++u) {
    for (int v = u; v < 2; ++v) {
      const ToeplitzCombo a = dv(u), b = dv(v);
      qi[u][v] = a.t * b.t * g11 + (a.t * b.td + a.td * b.t) * g12 + a.td * b.td * g22;
      qb[u][v] = 0.5 * combine(d2v(u, v), qt, qtd, qtdd);
    }
  }
  h.q_info = {qi[0][0], qi[0][1], qi[1][1]};
  h.q_bias = {qb[0][0], qb[0][1], qb[1][1]};
  return h;
}

Sym2x2 ExactLikelihood::expected_fisher() const {
  require_full("expected_fisher");
  double f[2][2];
  for (int u = 0; u < 2; ++u) {
    for (int v = u; v < 2; ++v) {
      const ToeplitzCombo a = dv(u), b = dv(v);
      f[u][v] = 0.5 * (a.t * b.t * gram_tt_ + (a.t * b.td + a.td * b.t) * gram_ttd_ + a.td * b.td * gram_tdtd_);
    }
  }
  return {f[0][0], f[0][1], f[1][1]};
}

Sym2x2 ExactLikelihood::bias_traces() const {
  require_full("bias_traces");
  auto tb = [&](int u, int v) { return 0.5 * combine(d2v(u, v), tr_t_, tr_td_, tr_tdd_); };
  return {tb(0, 0), tb(0, 1), tb(1, 1)};
}

Sym2x2 ExactLikelihood::expected_bias_quadratic() const {
  const Eigen::MatrixXd vinv_v = cov_.chol.solve(cov_.v);
  auto eq = [&](int u, int v) {
    const Eigen::MatrixXd a = cov_.chol.solve(dense(d2v(u, v)));
    return 0.5 * trace_product(a, vinv_v);
  };
  return {eq(0, 0), eq(0, 1), eq(1, 1)};
}

double loglik(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme) {
  return ExactLikelihood(params, scheme, ExactLikelihood::Level::Loglik).loglik(x);
}

ScoreVector score_exact(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme) {
  return ExactLikelihood(params, scheme).score(x);
}

Sym2x2 hessian_exact(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme) {
  return ExactLikelihood(params, scheme).hessian(x);
}

Sym2x2 expected_fisher(const ModelParams& params, const SamplingScheme& scheme) {
  return ExactLikelihood(params, scheme).expected_fisher();
}

}  // namespace mfbm
