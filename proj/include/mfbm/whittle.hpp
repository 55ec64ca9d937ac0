#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mfbm/likelihood.hpp"
#include "mfbm/model.hpp"
#include "mfbm/simulate.hpp"
#include "mfbm/spectral.hpp"

namespace mfbm {

// I_n(lambda_k) = (1/n) |sum_t x_t e^{-i lambda_k t}|^2 on lambda_k = 2 pi k / n, k = 1..n-1.
struct Periodogram {
  Eigen::VectorXd freqs;
  Eigen::VectorXd values;
  double zero_value = 0.0;  // I_n(0); kept only for the Parseval check

  std::int64_t n() const { return static_cast<std::int64_t>(values.size()) + 1; }
  // I_n(0) + sum_k I_n(lambda_k), equal to sum_t x_t^2
  double total_energy() const { return zero_value + values.sum(); }
};

// Requires x.size() >= 2.
Periodogram periodogram(const Eigen::VectorXd& x);

// DFT sum_t x_t e^{-i lambda_k t} for k = 0..n-1.
std::vector<std::complex<double>> dft(const Eigen::VectorXd& x);

struct WhittleScore {
  ScoreVector score;
  double z = 0.0;  // structural component Z_n
};

// Spectral densities on the half grid k = 1..floor(n/2), evaluated once per (params, scheme).
class WhittleContext {
 public:
  WhittleContext(const ModelParams& params, const SamplingScheme& scheme, const SpectralEvalConfig& cfg = {});

  WhittleScore score(const Eigen::VectorXd& x) const;
  // stride s keeps only k divisible by s, each weighted s times (coarser Riemann sum).
  WhittleScore score(const Periodogram& p, int stride = 1) const;

  const ModelParams& params() const { return params_; }
  const SamplingScheme& scheme() const { return scheme_; }
  // f_H(lambda_k), fdot_H(lambda_k) for k = 1..floor(n/2)
  const Eigen::VectorXd& f() const { return f_; }
  const Eigen::VectorXd& fdot() const { return fdot_; }

 private:
  ModelParams params_;
  SamplingScheme scheme_;
  Eigen::VectorXd f_, fdot_;
};

std::pair<ScoreVector, double> score_whittle(const Eigen::VectorXd& x, const ModelParams& params,
                                             const SamplingScheme& scheme, const SpectralEvalConfig& cfg = {});

// I_x = signal_coef I_G + noise_coef I_Z + cross_coef Re J_GZ, J_GZ = (1/n) J_G conj(J_Z).
struct PeriodogramDecomposition {
  Periodogram i_g;
  Periodogram i_z;
  Eigen::VectorXd cross;  // Re J_GZ(lambda_k), k = 1..n-1
  double signal_coef = 0.0;  // sigma^2 delta^{2H}
  double noise_coef = 0.0;   // delta
  double cross_coef = 0.0;   // 2 sigma delta^{H + 1/2}

  Eigen::VectorXd reconstruct() const;
};

PeriodogramDecomposition periodogram_decomposition(const IncrementSample& sample);

enum class ScoreComponent { Sigma, H };

// tr((A V)^4) / tr((A V)^2)^2 for the exact score weight A (Psi_sigma, or the structural
// weight built from Tdot). Scale free, in (0, 1].
double fourth_moment_ratio(const ModelParams& params, const SamplingScheme& scheme, ScoreComponent which);

}  // namespace mfbm
