#include "mfbm/lan.hpp"

#include <cmath>
#include <string>

namespace mfbm {

RateMatrix rate_matrix(const ModelParams& params, const SamplingScheme& scheme) {
  RateMatrix r;
  r.regime = classify_regime(params);
  const double root_n = std::sqrt(static_cast<double>(scheme.n()));
  if (r.regime == Regime::NoiseDominated) {
    r.scale = 1.0 / (root_n * std::exp((2.0 * params.hurst() - 1.0) * scheme.log_delta()));
  } else {
    r.scale = 1.0 / root_n;
  }
  r.off_diag = -params.sigma() * scheme.log_delta();
  return r;
}

Sym2x2 congruence(const RateMatrix& phi, const Sym2x2& m) {
  const double s2 = phi.scale * phi.scale;
  const double c = phi.off_diag;
  return {s2 * m.a11, s2 * (c * m.a11 + m.a12), s2 * (c * c * m.a11 + 2.0 * c * m.a12 + m.a22)};
}

Sym2x2 congruence_product(const RateMatrix& phi, const Sym2x2& m) {
  const Eigen::Matrix2d p = phi.matrix();
  return Sym2x2::from_matrix(p.transpose() * m.matrix() * p);
}

Vec2 normalized_score(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme,
                      ScoreSource source) {
  const RateMatrix phi = rate_matrix(params, scheme);
  const ScoreVector s = source == ScoreSource::Exact ? score_exact(x, params, scheme)
                                                     : score_whittle(x, params, scheme).first;
  return phi.transpose_apply(s.vec());
}

Sym2x2 normalized_observed_info(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme) {
  return congruence(rate_matrix(params, scheme), -1.0 * hessian_exact(x, params, scheme));
}

std::pair<ModelParams, SamplingScheme> perturbed_parameters(const ModelParams& params, const SamplingScheme& scheme,
                                                            const Vec2& u) {
  const Vec2 shift = rate_matrix(params, scheme).apply(u);
  const double s = params.sigma() + shift(0);
  const double h = params.hurst() + shift(1);
  try {
    ModelParams p(s, h);
    SamplingScheme sc(p, scheme.n(), scheme.alpha());
    return {p, sc};
  } catch (const ValidationError& e) {
    throw DomainError("perturbed parameter (sigma = " + std::to_string(s) + ", H = " + std::to_string(h) +
                      ") leaves the admissible set: " + e.what());
  }
}

namespace {

ExactLikelihood shifted_context(const ModelParams& params, const SamplingScheme& scheme, const Vec2& u) {
  const auto [p, sc] = perturbed_parameters(params, scheme, u);
  return ExactLikelihood(p, sc, ExactLikelihood::Level::Loglik);
}

}  // namespace

RemainderEvaluator::RemainderEvaluator(const ModelParams& params, const SamplingScheme& scheme, const Vec2& u,
                                       std::optional<Fisher2x2> asymptotic)
    : base_(params, scheme),
      shifted_(shifted_context(params, scheme, u)),
      phi_(rate_matrix(params, scheme)),
      u_(u),
      fisher_(asymptotic ? *asymptotic : fisher_asymptotic(params)) {}

RemainderResult RemainderEvaluator::evaluate(const Eigen::VectorXd& x) const {
  const double ratio = shifted_.loglik(x) - base_.loglik(x);
  const Vec2 lan = phi_.transpose_apply(base_.score(x).vec());
  const Sym2x2 jn = congruence(phi_, -1.0 * base_.hessian(x));
  const double linear = u_.dot(lan);
  RemainderResult r;
  r.observed = ratio - linear + 0.5 * u_.dot(jn.matrix() * u_);
  r.asymptotic = ratio - linear + 0.5 * u_.dot(fisher_.matrix() * u_);
  return r;
}

RemainderResult lan_remainder(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme,
                              const Vec2& u) {
  return RemainderEvaluator(params, scheme, u).evaluate(x);
}

}  // namespace mfbm
