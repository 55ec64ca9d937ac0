#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfbm/lan.hpp"
#include "mfbm/matrix2.hpp"
#include "mfbm/model.hpp"
#include "mfbm/simulate.hpp"

namespace mfbm {

// 0 means: MFBM_THREADS if set, else the hardware concurrency.
int resolve_threads(int requested);

// Runs body(i) for i in [0, count) on up to `threads` workers. The first exception thrown by
// any body is rethrown after all workers stop.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& body);

struct SampleRow {
  std::int64_t replicate = 0;
  double s1 = 0.0;
  double s2 = 0.0;
};

struct MomentSummary {
  Vec2 mean = Vec2::Zero();
  Sym2x2 covariance;  // unbiased, divisor M - 1
  Vec2 skewness = Vec2::Zero();
  Vec2 kurtosis = Vec2::Zero();  // excess
  std::int64_t count = 0;
};

MomentSummary summarize(const std::vector<Vec2>& samples);

struct SampleTable {
  std::vector<SampleRow> rows;  // sorted by replicate, excluded replicates omitted
  MomentSummary summary;
  Fisher2x2 target_fisher;
  double max_rel_err = 0.0;  // covariance vs target_fisher
  std::vector<std::int64_t> excluded;
};

struct McOptions {
  int threads = 0;
  SamplerMethod sampler = SamplerMethod::Auto;
  std::optional<Fisher2x2> target;  // defaults to fisher_asymptotic(params)
};

// Failure rate above this fraction aborts a Monte Carlo run.
inline constexpr double kMaxFailureRate = 0.01;

SampleTable mc_normalized_scores(const MonteCarloConfig& config, const McOptions& options = {});

// 17 significant digits, "." separator, independent of the locale.
std::string format_double(double v);

void write_scores_csv(const SampleTable& table, std::ostream& out);
void write_scores_csv(const SampleTable& table, const std::filesystem::path& path);

nlohmann::json sym_json(const Sym2x2& m);
nlohmann::json mc_config_json(const MonteCarloConfig& config, const McOptions& options);
nlohmann::json summary_json(const SampleTable& table, const MonteCarloConfig& config, const McOptions& options);

struct StudyPoint {
  std::int64_t n = 0;
  Sym2x2 var_exact_whittle_gap;  // covariance of phi'(grad l - grad l^W)
  std::optional<double> median_abs_remainder;             // observed J_n variant
  std::optional<double> median_abs_remainder_asymptotic;  // asymptotic J variant
  std::string remainder_note;  // why the remainder is missing, if it is
  double frobenius_ratio = 0.0;  // ||T - C||_F^2 / n
  double fourth_moment_ratio_sigma = 0.0;
  double fourth_moment_ratio_h = 0.0;
  Sym2x2 score_covariance;
  double max_rel_err = 0.0;
  std::int64_t excluded = 0;
};

struct StudyConfig {
  ModelParams params;
  double alpha;
  std::vector<std::int64_t> n_grid;
  std::int64_t replications;
  std::uint64_t seed;
  Vec2 u = Vec2(1.0, 1.0);
  int threads = 0;
  SamplerMethod sampler = SamplerMethod::Auto;

  void validate() const;
};

struct StudyReport {
  std::vector<std::int64_t> grid;
  std::vector<StudyPoint> metrics;
  Fisher2x2 target_fisher;
  nlohmann::json config;
};

StudyReport convergence_study(const StudyConfig& config);
nlohmann::json study_json(const StudyReport& report);

struct RegimePoint {
  std::int64_t n = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  // MC means over replicates of the k-averaged ratios
  //   delta I_Z / (sigma^2 delta^{2H} f_H)  and  |2 sigma delta^{H+1/2} Re J_GZ| / (sigma^2 delta^{2H} f_H)
  double noise_coeff = 0.0;
  double cross_coeff = 0.0;
  // against the previous grid point, with the predicted delta-power ratios
  std::optional<double> noise_ratio, noise_ratio_predicted;
  std::optional<double> cross_ratio, cross_ratio_predicted;
  Sym2x2 score_covariance;
  double max_rel_err_pure = 0.0;  // score_covariance vs J_pure
  // covariance of (mixed normalized exact score) - (pure fGn normalized score of the signal part)
  Sym2x2 pure_gap_covariance;
  std::int64_t excluded = 0;
};

struct RegimeReport {
  std::vector<std::int64_t> grid;
  std::vector<RegimePoint> points;
  Fisher2x2 fisher_pure;
  nlohmann::json config;
};

// Requires H < 1/2 (the alpha > 1/2 gate for H <= 1/4 is enforced by SamplingScheme).
RegimeReport regime_study(const StudyConfig& config);
nlohmann::json regime_json(const RegimeReport& report);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace mfbm
