#pragma once

#include <optional>

#include <Eigen/Core>

#include "mfbm/likelihood.hpp"
#include "mfbm/matrix2.hpp"
#include "mfbm/model.hpp"
#include "mfbm/spectral.hpp"
#include "mfbm/whittle.hpp"

namespace mfbm {

// phi_n = scale [[1, off_diag], [0, 1]]
struct RateMatrix {
  double scale = 0.0;
  double off_diag = 0.0;
  Regime regime = Regime::NoiseDominated;

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d m;
    m << scale, scale * off_diag, 0.0, scale;
    return m;
  }
  double determinant() const { return scale * scale; }
  Vec2 apply(const Vec2& u) const { return {scale * (u(0) + off_diag * u(1)), scale * u(1)}; }
  // phi' g
  Vec2 transpose_apply(const Vec2& g) const { return {scale * g(0), scale * (off_diag * g(0) + g(1))}; }
};

// scale = v_n = 1/(sqrt(n) delta^{2H-1}) when noise dominated, n^{-1/2} otherwise; off_diag = -sigma ln delta.
RateMatrix rate_matrix(const ModelParams& params, const SamplingScheme& scheme);

// phi' M phi expanded by hand, and through Eigen products.
Sym2x2 congruence(const RateMatrix& phi, const Sym2x2& m);
Sym2x2 congruence_product(const RateMatrix& phi, const Sym2x2& m);

Vec2 normalized_score(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme,
                      ScoreSource source = ScoreSource::Exact);
Sym2x2 normalized_observed_info(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme);

struct RemainderResult {
  double observed = 0.0;    // with the normalized observed information J_n
  double asymptotic = 0.0;  // with fisher_asymptotic
};

// Shifted parameter theta + phi u and its scheme; DomainError when it leaves the admissible set.
std::pair<ModelParams, SamplingScheme> perturbed_parameters(const ModelParams& params, const SamplingScheme& scheme,
                                                            const Vec2& u);

// Per-(theta, n, u) state for the remainder r_n: the base likelihood with scores and Hessian,
// the loglik-only context at theta + phi u, and the asymptotic information.
class RemainderEvaluator {
 public:
  RemainderEvaluator(const ModelParams& params, const SamplingScheme& scheme, const Vec2& u,
                     std::optional<Fisher2x2> asymptotic = std::nullopt);

  RemainderResult evaluate(const Eigen::VectorXd& x) const;
  const ExactLikelihood& base() const { return base_; }
  const RateMatrix& rate() const { return phi_; }

 private:
  ExactLikelihood base_;
  ExactLikelihood shifted_;
  RateMatrix phi_;
  Vec2 u_;
  Fisher2x2 fisher_;
};

RemainderResult lan_remainder(const Eigen::VectorXd& x, const ModelParams& params, const SamplingScheme& scheme,
                              const Vec2& u);

}  // namespace mfbm
