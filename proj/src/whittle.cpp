#include "mfbm/whittle.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "mfbm/covariance.hpp"

namespace mfbm {

std::vector<std::complex<double>> dft(const Eigen::VectorXd& x) {
  std::vector<double> in(x.data(), x.data() + x.size());
  std::vector<std::complex<double>> out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  // Indexing from t = 1 only rotates the phase; |J| is unchanged.
  return out;
}

namespace {

Periodogram from_dft(const std::vector<std::complex<double>>& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  Periodogram p;
  p.freqs.resize(n - 1);
  p.values.resize(n - 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  p.zero_value = std::norm(j[0]) * inv_n;
  for (Eigen::Index k = 1; k < n; ++k) {
    p.freqs(k - 1) = 2.0 * std::numbers::pi * static_cast<double>(k) * inv_n;
    p.values(k - 1) = std::norm(j[static_cast<std::size_t>(k)]) * inv_n;
  }
  return p;
}

}  // namespace

Periodogram periodogram(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw ValidationError("periodogram needs at least 2 observations");
  return from_dft(dft(x));
}

WhittleContext::WhittleContext(const ModelParams& params, const SamplingScheme& scheme, const SpectralEvalConfig& cfg)
    : params_(params), scheme_(scheme) {
  const std::int64_t n = scheme.n();
  if (n < 2) throw ValidationError("Whittle score needs n >= 2");
  const std::int64_t half = n / 2;
  f_.resize(half);
  fdot_.resize(half);
  for (std::int64_t k = 1; k <= half; ++k) {
    const double lam = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    const SpectralPair sp = fgn_spectral_pair(params.hurst(), lam, cfg);
    f_(k - 1) = sp.value;
    fdot_(k - 1) = sp.dh;
  }
}

WhittleScore WhittleContext::score(const Eigen::VectorXd& x) const {
  if (x.size() != scheme_.n()) {
    throw ValidationError("data length " + std::to_string(x.size()) + " does not match n = " +
                          std::to_string(scheme_.n()));
  }
  return score(periodogram(x));
}

WhittleScore WhittleContext::score(const Periodogram& p, int stride) const {
  const std::int64_t n = scheme_.n();
  if (p.n() != n) throw ValidationError("periodogram size does not match the scheme");
  if (stride < 1) throw ValidationError("stride must be >= 1");
  const double d = scheme_.delta();
  const double g = scheme_.gamma();
  const double ld = scheme_.log_delta();
  const double s = params_.sigma();
  double sum_f = 0.0, sum_h = 0.0, sum_z = 0.0;
  for (std::int64_t k = stride; k <= n / 2; k += stride) {
    // both k and n-k contribute, except k = n/2 which is its own mirror
    const double w = (2 * k == n ? 1.0 : 2.0) * stride;
    const double f = f_(k - 1);
    const double fd = fdot_(k - 1);
    const double denom = (1.0 + g * f) * (1.0 + g * f);
    const double dn = p.values(k - 1) - d * (1.0 + g * f);
    sum_f += w * f * dn / denom;
    sum_h += w * (2.0 * ld * f + fd) * dn / denom;
    sum_z += w * fd * dn / denom;
  }
  WhittleScore out;
  out.score.d_sigma = g / (s * d) * sum_f;
  out.score.d_h = g / (2.0 * d) * sum_h;
  out.z = g / (2.0 * d) * sum_z;
  return out;
}

std::pair<ScoreVector, double> score_whittle(const Eigen::VectorXd& x, const ModelParams& params,
                                             const SamplingScheme& scheme, const SpectralEvalConfig& cfg) {
  const WhittleScore w = WhittleContext(params, scheme, cfg).score(x);
  return {w.score, w.z};
}

Eigen::VectorXd PeriodogramDecomposition::reconstruct() const {
  return signal_coef * i_g.values + noise_coef * i_z.values + cross_coef * cross;
}

PeriodogramDecomposition periodogram_decomposition(const IncrementSample& sample) {
  const auto n = sample.g.size();
  if (n < 2 || sample.z.size() != n) throw ValidationError("sample must hold g and z of equal length >= 2");
  const auto jg = dft(sample.g);
  const auto jz = dft(sample.z);
  PeriodogramDecomposition out;
  out.i_g = from_dft(jg);
  out.i_z = from_dft(jz);
  out.cross.resize(n - 1);
  for (Eigen::Index k = 1; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    out.cross(k - 1) = (jg[idx] * std::conj(jz[idx])).real() / static_cast<double>(n);
  }
  const double h = sample.params.hurst();
  const double ld = sample.scheme.log_delta();
  const double sg = sample.params.sigma();
  out.signal_coef = sample.scheme.signal_scale();
  out.noise_coef = sample.scheme.delta();
  out.cross_coef = 2.0 * sg * std::exp((h + 0.5) * ld);
  return out;
}

double fourth_moment_ratio(const ModelParams& params, const SamplingScheme& scheme, ScoreComponent which) {
  if (scheme.n() > kMaxDenseN) throw ResourceError("fourth_moment_ratio: n exceeds the dense limit");
  const ObservationCovariance cov = observation_covariance(params, scheme);
  const Eigen::MatrixXd b = build_toeplitz(params.hurst(), scheme.n(), which == ScoreComponent::Sigma ? 0 : 1).dense();
  // A V is similar to L^T A L = delta^2 L^{-1} B L^{-T}; the ratio ignores the scale.
  const Eigen::MatrixXd s = cov.chol.whiten(b);
  const double s2 = s.squaredNorm();
  const Eigen::MatrixXd sq = s * s;
  const double r = sq.squaredNorm() / (s2 * s2);
  if (!std::isfinite(r)) throw NumericalError("fourth_moment_ratio: non-finite trace ratio");
  return r;
}

}  // namespace mfbm
