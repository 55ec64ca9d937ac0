#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "mfbm/matrix2.hpp"
#include "mfbm/model.hpp"

namespace mfbm {

struct SpectralEvalConfig {
  int truncation = 1000;  // lattice terms |k| <= K
  bool tail_correction = true;
  int quadrature_points = 32;  // Gauss-Legendre nodes per panel
  int endpoint_refinement_levels = 40;
  double quadrature_rel_tol = 1e-8;

  void validate() const;
};

// f_H and its H-derivative at one frequency.
struct SpectralPair {
  double value = 0.0;
  double dh = 0.0;
};

// f_H(lambda) = Gamma(2H+1) sin(pi H) 2(1 - cos lambda) sum_k |lambda + 2 k pi|^{-2H-1}
// (order 0) or d f_H / dH (order 1). Even in lambda; lambda = 0 is a pole for H > 1/2.
double fgn_spectral_density(double hurst, double lambda, int order = 0, const SpectralEvalConfig& cfg = {});
SpectralPair fgn_spectral_pair(double hurst, double lambda, const SpectralEvalConfig& cfg = {});

// delta (1 + gamma f_H(lambda))
double observation_spectral_density(const ModelParams& params, const SamplingScheme& scheme, double lambda,
                                    const SpectralEvalConfig& cfg = {});
double observation_spectral_density(double delta, double gamma, double fgn_value);

// Composite Gauss-Legendre on (0, pi] over panels [pi/2^{l+1}, pi/2^l], l < levels. The
// optional endpoint callback returns the analytic integral over (0, eps] of the integrand's
// leading small-lambda behaviour.
struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};
QuadratureResult integrate_zero_pi(const std::function<double(double)>& integrand, const SpectralEvalConfig& cfg,
                                   const std::function<double(double)>& endpoint = {});

// int_0^eps lambda^p ln^m(lambda) d lambda for p > -1, m in {0,1,2}.
double power_log_moment(double p, int m, double eps);

// (1/2pi) int_{-pi}^{pi} f_H(lambda) cos(k lambda) d lambda; equals rho_H(k).
double spectral_autocovariance(double hurst, std::int64_t lag, const SpectralEvalConfig& cfg = {});

enum class ConstantsMethod { Spectral, Trace };

struct PureFgnConstants {
  double t1 = 0.0;
  double t2 = 0.0;
  ConstantsMethod method = ConstantsMethod::Spectral;
  std::optional<std::int64_t> trace_n;
};

// Spectral: t1 = (1/pi) int_0^pi fdot/f, t2 = (1/2pi) int_0^pi (fdot/f)^2, needs hurst > 1/4.
// Trace: t1 = (1/n) tr(T^{-1} Tdot), t2 = (1/2n) tr((T^{-1} Tdot)^2) at n = trace_n >= 64.
PureFgnConstants pure_fgn_constants(double hurst, ConstantsMethod method, std::int64_t trace_n = 2048,
                                    const SpectralEvalConfig& cfg = {});

// Trace-method constants extrapolated in 1/n over a doubling grid (two Richardson levels for
// three sizes). Sizes must be increasing, each the double of the previous one.
PureFgnConstants pure_fgn_constants_extrapolated(double hurst, std::span<const std::int64_t> sizes);

inline constexpr std::int64_t kDefaultTraceSizes[] = {512, 1024, 2048};

// Asymptotic Fisher information: J_mixed for 1/2 < H < 3/4, J_pure otherwise (spectral
// constants for H > 1/4, extrapolated trace constants for H <= 1/4).
Fisher2x2 fisher_asymptotic(const ModelParams& params, const SpectralEvalConfig& cfg = {});
Fisher2x2 fisher_pure(const ModelParams& params, const PureFgnConstants& c);

}  // namespace mfbm
