#include "mfbm/model.hpp"

#include <cmath>
#include <string>

namespace mfbm {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::NoiseDominated:
      return "noise_dominated";
    case Regime::SignalDominatedUpper:
      return "signal_dominated_upper";
    case Regime::SignalDominatedLower:
      return "signal_dominated_lower";
  }
  return "unknown";
}

ModelParams::ModelParams(double sigma, double hurst) : sigma_(sigma), hurst_(hurst) {
  if (!(std::isfinite(sigma) && sigma > 0.0)) {
    throw ValidationError("sigma must be positive and finite, got " + std::to_string(sigma));
  }
  if (!(hurst > 0.0 && hurst < 0.75)) {
    throw ValidationError("hurst must lie in (0, 3/4), got " + std::to_string(hurst));
  }
  if (hurst == 0.5) {
    throw ValidationError("hurst = 1/2 is excluded from the model");
  }
}

Regime classify_regime(const ModelParams& params) {
  const double h = params.hurst();
  if (h > 0.5) return Regime::NoiseDominated;
  if (h > 0.25) return Regime::SignalDominatedUpper;
  return Regime::SignalDominatedLower;
}

SamplingScheme::SamplingScheme(const ModelParams& params, std::int64_t n, double alpha)
    : n_(n), alpha_(alpha) {
  if (n < 1) throw ValidationError("n must be >= 1, got " + std::to_string(n));
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  const double h = params.hurst();
  if (h <= 0.25 && !(alpha > 0.5)) {
    throw ValidationError("inadmissible (H, alpha): alpha > 1/2 when H <= 1/4 (H = " +
                          std::to_string(h) + ", alpha = " + std::to_string(alpha) + ")");
  }
  const double s2 = params.sigma() * params.sigma();
  delta_ = std::pow(static_cast<double>(n), -alpha);
  log_delta_ = -alpha * std::log(static_cast<double>(n));
  gamma_ = s2 * std::exp((2.0 * h - 1.0) * log_delta_);
  epsilon_ = std::exp((1.0 - 2.0 * h) * log_delta_) / s2;
  signal_scale_ = s2 * std::exp(2.0 * h * log_delta_);
}

std::string_view to_string(ScoreSource s) { return s == ScoreSource::Exact ? "exact" : "whittle"; }

ScoreSource parse_score_source(std::string_view s) {
  if (s == "exact") return ScoreSource::Exact;
  if (s == "whittle") return ScoreSource::Whittle;
  throw ValidationError("score source must be 'exact' or 'whittle', got '" + std::string(s) + "'");
}

void MonteCarloConfig::validate() const {
  if (replications < 2) {
    throw ValidationError("replications must be >= 2, got " + std::to_string(replications));
  }
}

}  // namespace mfbm
