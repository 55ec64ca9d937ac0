#include "mfbm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "mfbm/covariance.hpp"

namespace mfbm {

std::string_view to_string(SamplerMethod m) {
  switch (m) {
    case SamplerMethod::Auto:
      return "auto";
    case SamplerMethod::Cholesky:
      return "cholesky";
    case SamplerMethod::CirculantEmbedding:
      return "circulant_embedding";
  }
  return "unknown";
}

SamplerMethod parse_sampler_method(std::string_view s) {
  if (s == "auto") return SamplerMethod::Auto;
  if (s == "cholesky") return SamplerMethod::Cholesky;
  if (s == "circulant_embedding" || s == "circulant") return SamplerMethod::CirculantEmbedding;
  throw ValidationError("unknown sampler method '" + std::string(s) + "'");
}

SamplerMethod resolve_method(SamplerMethod m, std::int64_t n) {
  if (m != SamplerMethod::Auto) return m;
  return n <= 512 ? SamplerMethod::Cholesky : SamplerMethod::CirculantEmbedding;
}

IncrementSampler::IncrementSampler(const ModelParams& params, const SamplingScheme& scheme, SamplerMethod method)
    : params_(params), scheme_(scheme), method_(resolve_method(method, scheme.n())) {
  const std::int64_t n = scheme.n();
  const auto row = build_toeplitz(params.hurst(), n, 0);
  if (method_ == SamplerMethod::CirculantEmbedding && n >= 2) {
    // First row of the 2(n-1) circulant embedding: r_0..r_{n-1}, r_{n-2}..r_1.
    const std::int64_t m = 2 * (n - 1);
    std::vector<std::complex<double>> c(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) {
      const std::int64_t k = j < n ? j : m - j;
      c[static_cast<std::size_t>(j)] = row.first_row[static_cast<std::size_t>(k)];
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> eig;
    fft.fwd(eig, c);
    double max_abs = 0.0;
    for (const auto& e : eig) max_abs = std::max(max_abs, std::abs(e.real()));
    bool negative = false;
    embed_sqrt_eigs_.resize(m);
    for (std::int64_t j = 0; j < m; ++j) {
      double lam = eig[static_cast<std::size_t>(j)].real();
      if (lam < 0.0) {
        if (lam < -1e-10 * max_abs) negative = true;
        lam = 0.0;
      }
      embed_sqrt_eigs_(j) = std::sqrt(lam / static_cast<double>(m));
    }
    if (negative) {
      method_ = SamplerMethod::Cholesky;
      fell_back_ = true;
      embed_sqrt_eigs_.resize(0);
    }
  } else if (method_ == SamplerMethod::CirculantEmbedding) {
    embed_sqrt_eigs_ = Eigen::VectorXd::Ones(1);
  }
  if (method_ == SamplerMethod::Cholesky) {
    if (n > kMaxDenseN) {
      throw ResourceError("Cholesky sampler: n = " + std::to_string(n) + " exceeds the dense limit " +
                          std::to_string(kMaxDenseN));
    }
    chol_lower_ = SpdFactor(row.dense()).lower();
  }
}

Eigen::VectorXd IncrementSampler::sample_fgn_cholesky(ReplicateStream& rs) const {
  const Eigen::Index n = chol_lower_.rows();
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi(i) = rs.next_normal();
  return chol_lower_.triangularView<Eigen::Lower>() * xi;
}

Eigen::VectorXd IncrementSampler::sample_fgn_circulant(ReplicateStream& rs) const {
  const Eigen::Index n = scheme_.n();
  const Eigen::Index m = embed_sqrt_eigs_.size();
  if (n == 1) return Eigen::VectorXd::Constant(1, rs.next_normal());
  std::vector<std::complex<double>> w(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = rs.next_normal();
    const double b = rs.next_normal();
    w[static_cast<std::size_t>(j)] = embed_sqrt_eigs_(j) * std::complex<double>(a, b);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> y;
  fft.fwd(y, w);
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = y[static_cast<std::size_t>(i)].real();
  return g;
}

IncrementSample IncrementSampler::draw(std::uint64_t seed, std::uint64_t replicate) const {
  ReplicateStream rs(seed, replicate);
  Eigen::VectorXd g = method_ == SamplerMethod::Cholesky ? sample_fgn_cholesky(rs) : sample_fgn_circulant(rs);
  const Eigen::Index n = g.size();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rs.next_normal();
  const double a = params_.sigma() * std::exp(params_.hurst() * scheme_.log_delta());
  const double b = std::sqrt(scheme_.delta());
  Eigen::VectorXd x = a * g + b * z;
  return IncrementSample{std::move(x), std::move(g), std::move(z), params_, scheme_, seed, replicate, method_,
                         fell_back_};
}

IncrementSample sample_components(const ModelParams& params, const SamplingScheme& scheme, std::uint64_t seed,
                                  SamplerMethod method) {
  return IncrementSampler(params, scheme, method).draw(seed, 0);
}

}  // namespace mfbm
