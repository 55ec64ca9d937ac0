#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "mfbm/model.hpp"
#include "mfbm/rng.hpp"

namespace mfbm {

enum class SamplerMethod { Auto, Cholesky, CirculantEmbedding };

std::string_view to_string(SamplerMethod m);
SamplerMethod parse_sampler_method(std::string_view s);

// Auto resolves to Cholesky for n <= 512 and circulant embedding above.
SamplerMethod resolve_method(SamplerMethod m, std::int64_t n);

struct IncrementSample {
  Eigen::VectorXd x;  // observed increments
  Eigen::VectorXd g;  // standard fGn path
  Eigen::VectorXd z;  // white noise
  ModelParams params;
  SamplingScheme scheme;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  SamplerMethod method = SamplerMethod::Cholesky;  // method actually used
  bool fell_back = false;  // circulant embedding requested but had a negative eigenvalue
};

// Exact sampler for N(0, T_n) fGn plus independent white noise; the setup (Cholesky factor
// or embedding eigenvalues) is computed once and reused for every draw.
class IncrementSampler {
 public:
  IncrementSampler(const ModelParams& params, const SamplingScheme& scheme,
                   SamplerMethod method = SamplerMethod::Auto);

  // Deterministic in (seed, replicate); independent of any other draw.
  IncrementSample draw(std::uint64_t seed, std::uint64_t replicate) const;

  SamplerMethod method() const { return method_; }
  bool fell_back() const { return fell_back_; }

 private:
  Eigen::VectorXd sample_fgn_cholesky(ReplicateStream& rs) const;
  Eigen::VectorXd sample_fgn_circulant(ReplicateStream& rs) const;

  ModelParams params_;
  SamplingScheme scheme_;
  SamplerMethod method_;
  bool fell_back_ = false;
  Eigen::MatrixXd chol_lower_;
  Eigen::VectorXd embed_sqrt_eigs_;  // sqrt(lambda_j / m)
};

IncrementSample sample_components(const ModelParams& params, const SamplingScheme& scheme, std::uint64_t seed,
                                  SamplerMethod method = SamplerMethod::Auto);

}  // namespace mfbm
