#pragma once

#include <cstdint>
#include <string_view>

#include "mfbm/errors.hpp"

namespace mfbm {

// Observation model: increments X_i = sigma * delta^H * G_i + delta^{1/2} * Z_i of
// Y_t = sigma * B^H_t + W_t sampled at t_i = i * delta, delta = n^{-alpha}.

enum class Regime {
  NoiseDominated,        // 1/2 < H < 3/4
  SignalDominatedUpper,  // 1/4 < H < 1/2
  SignalDominatedLower,  // 0 < H <= 1/4
};

std::string_view to_string(Regime r);

class ModelParams {
 public:
  // Throws ValidationError unless sigma > 0 and hurst in (0, 1/2) U (1/2, 3/4).
  ModelParams(double sigma, double hurst);

  double sigma() const { return sigma_; }
  double hurst() const { return hurst_; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  double sigma_;
  double hurst_;
};

Regime classify_regime(const ModelParams& params);

inline bool is_signal_dominated(Regime r) { return r != Regime::NoiseDominated; }

class SamplingScheme {
 public:
  // Throws ValidationError for n < 1, alpha outside (0,1), or hurst <= 1/4 with alpha <= 1/2.
  SamplingScheme(const ModelParams& params, std::int64_t n, double alpha);

  std::int64_t n() const { return n_; }
  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  double log_delta() const { return log_delta_; }
  // gamma = sigma^2 delta^{2H-1}
  double gamma() const { return gamma_; }
  // epsilon = sigma^{-2} delta^{1-2H} = 1 / gamma
  double epsilon() const { return epsilon_; }
  // sigma^2 delta^{2H}, the variance scale of the fGn component.
  double signal_scale() const { return signal_scale_; }

 private:
  std::int64_t n_;
  double alpha_;
  double delta_;
  double log_delta_;
  double gamma_;
  double epsilon_;
  double signal_scale_;
};

enum class ScoreSource { Exact, Whittle };

std::string_view to_string(ScoreSource s);
ScoreSource parse_score_source(std::string_view s);

struct MonteCarloConfig {
  ModelParams params;
  SamplingScheme scheme;
  std::int64_t replications;
  std::uint64_t seed;
  ScoreSource score_source = ScoreSource::Exact;

  // Throws ValidationError when replications < 2.
  void validate() const;
};

}  // namespace mfbm
