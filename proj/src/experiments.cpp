#include "mfbm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "mfbm/covariance.hpp"
#include "mfbm/whittle.hpp"

namespace mfbm {

int resolve_threads(int requested) {
  if (requested < 0) throw ValidationError("thread count must be >= 0");
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MFBM_THREADS"); env != nullptr && *env != '\0') {
    int v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end || v < 1) {
      throw ValidationError(std::string("MFBM_THREADS must be a positive integer, got '") + env + "'");
    }
    return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& body) {
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), count));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

MomentSummary summarize(const std::vector<Vec2>& samples) {
  MomentSummary s;
  s.count = static_cast<std::int64_t>(samples.size());
  if (s.count < 2) throw ValidationError("need at least two samples to summarize");
  const double m = static_cast<double>(s.count);
  for (const auto& v : samples) s.mean += v;
  s.mean /= m;
  Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
  Vec2 m2 = Vec2::Zero(), m3 = Vec2::Zero(), m4 = Vec2::Zero();
  for (const auto& v : samples) {
    const Vec2 d = v - s.mean;
    c += d * d.transpose();
    const Vec2 d2 = d.cwiseProduct(d);
    m2 += d2;
    m3 += d2.cwiseProduct(d);
    m4 += d2.cwiseProduct(d2);
  }
  s.covariance = Sym2x2::from_matrix(c / (m - 1.0));
  m2 /= m;
  m3 /= m;
  m4 /= m;
  for (int i = 0; i < 2; ++i) {
    s.skewness(i) = m3(i) / std::pow(m2(i), 1.5);
    s.kurtosis(i) = m4(i) / (m2(i) * m2(i)) - 3.0;
  }
  return s;
}

namespace {

void check_failures(std::int64_t failed, std::int64_t total, const std::string& what) {
  if (static_cast<double>(failed) > kMaxFailureRate * static_cast<double>(total)) {
    throw NumericalError(what + ": " + std::to_string(failed) + " of " + std::to_string(total) +
                         " replicates failed, above the 1% abort threshold");
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

template <class T>
std::vector<T> compact(const std::vector<std::optional<T>>& v) {
  std::vector<T> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (e) out.push_back(*e);
  }
  return out;
}

nlohmann::json vec_json(const Vec2& v) { return nlohmann::json::array({v(0), v(1)}); }

}  // namespace

SampleTable mc_normalized_scores(const MonteCarloConfig& config, const McOptions& options) {
  config.validate();
  const ModelParams& params = config.params;
  const SamplingScheme& scheme = config.scheme;
  const IncrementSampler sampler(params, scheme, options.sampler);
  const RateMatrix phi = rate_matrix(params, scheme);
  std::optional<ExactLikelihood> exact;
  std::optional<WhittleContext> whittle;
  if (config.score_source == ScoreSource::Exact) {
    exact.emplace(params, scheme);
  } else {
    whittle.emplace(params, scheme);
  }

  const std::int64_t m = config.replications;
  std::vector<std::optional<Vec2>> results(static_cast<std::size_t>(m));
  parallel_for(m, resolve_threads(options.threads), [&](std::int64_t r) {
    try {
      const Eigen::VectorXd x = sampler.draw(config.seed, static_cast<std::uint64_t>(r)).x;
      const ScoreVector s = exact ? exact->score(x) : whittle->score(x).score;
      const Vec2 z = phi.transpose_apply(s.vec());
      if (!z.allFinite()) throw NumericalError("non-finite normalized score");
      results[static_cast<std::size_t>(r)] = z;
    } catch (const NumericalError&) {
    }
  });

  SampleTable table;
  std::vector<Vec2> ok;
  for (std::int64_t r = 0; r < m; ++r) {
    const auto& e = results[static_cast<std::size_t>(r)];
    if (!e) {
      table.excluded.push_back(r);
      continue;
    }
    table.rows.push_back({r, (*e)(0), (*e)(1)});
    ok.push_back(*e);
  }
  check_failures(static_cast<std::int64_t>(table.excluded.size()), m, "mc_normalized_scores");
  table.summary = summarize(ok);
  table.target_fisher = options.target ? *options.target : fisher_asymptotic(params);
  table.max_rel_err = max_rel_entry_error(table.summary.covariance, table.target_fisher);
  return table;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_scores_csv(const SampleTable& table, std::ostream& out) {
  out << "replicate,s_sigma,s_h\n";
  for (const auto& row : table.rows) {
    out << row.replicate << ',' << format_double(row.s1) << ',' << format_double(row.s2) << '\n';
  }
}

void write_scores_csv(const SampleTable& table, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path.string() + " for writing");
  write_scores_csv(table, f);
}

nlohmann::json sym_json(const Sym2x2& m) {
  return nlohmann::json::array({nlohmann::json::array({m.a11, m.a12}), nlohmann::json::array({m.a12, m.a22})});
}

nlohmann::json mc_config_json(const MonteCarloConfig& config, const McOptions& options) {
  return {
      {"command", "mc-score"},
      {"sigma", config.params.sigma()},
      {"hurst", config.params.hurst()},
      {"n", config.scheme.n()},
      {"alpha", config.scheme.alpha()},
      {"m", config.replications},
      {"seed", config.seed},
      {"score", std::string(to_string(config.score_source))},
      {"sampler", std::string(to_string(options.sampler))},
  };
}

nlohmann::json summary_json(const SampleTable& table, const MonteCarloConfig& config, const McOptions& options) {
  nlohmann::json j;
  j["mean"] = vec_json(table.summary.mean);
  j["covariance"] = sym_json(table.summary.covariance);
  j["target_fisher"] = sym_json(table.target_fisher);
  j["max_rel_err"] = table.max_rel_err;
  j["skewness"] = vec_json(table.summary.skewness);
  j["kurtosis"] = vec_json(table.summary.kurtosis);
  j["config"] = mc_config_json(config, options);
  j["replications_used"] = table.rows.size();
  j["excluded_replicates"] = table.excluded;
  j["regime"] = std::string(to_string(classify_regime(config.params)));
  return j;
}

void StudyConfig::validate() const {
  if (n_grid.empty()) throw ValidationError("n_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 32 || n_grid[i] > 2048) throw ValidationError("n_grid values must lie in [32, 2048]");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ValidationError("n_grid must be strictly increasing");
  }
  if (replications < 2) throw ValidationError("replications must be >= 2");
  if (!u.allFinite()) throw ValidationError("u must be finite");
  // every grid point must pass the sampling-scheme checks
  for (auto n : n_grid) SamplingScheme(params, n, alpha);
}

namespace {

nlohmann::json study_config_json(const StudyConfig& c, const char* command) {
  return {
      {"command", command},
      {"sigma", c.params.sigma()},
      {"hurst", c.params.hurst()},
      {"alpha", c.alpha},
      {"n_grid", c.n_grid},
      {"m", c.replications},
      {"seed", c.seed},
      {"u", vec_json(c.u)},
      {"sampler", std::string(to_string(c.sampler))},
  };
}

}  // namespace

StudyReport convergence_study(const StudyConfig& config) {
  config.validate();
  const ModelParams& params = config.params;
  const int threads = resolve_threads(config.threads);
  StudyReport report;
  report.grid = config.n_grid;
  report.config = study_config_json(config, "convergence");
  report.target_fisher = fisher_asymptotic(params);

  for (const std::int64_t n : config.n_grid) {
    const SamplingScheme scheme(params, n, config.alpha);
    const IncrementSampler sampler(params, scheme, config.sampler);
    const WhittleContext whittle(params, scheme);
    const RateMatrix phi = rate_matrix(params, scheme);
    StudyPoint pt;
    pt.n = n;
    std::optional<RemainderEvaluator> rem;
    std::optional<ExactLikelihood> own;
    try {
      rem.emplace(params, scheme, config.u, report.target_fisher);
    } catch (const DomainError& e) {
      pt.remainder_note = e.what();
      own.emplace(params, scheme);
    }
    const ExactLikelihood& base = rem ? rem->base() : *own;

    struct Rep {
      Vec2 score, gap;
      double r_obs = 0.0, r_asy = 0.0;
    };
    const std::int64_t m = config.replications;
    std::vector<std::optional<Rep>> reps(static_cast<std::size_t>(m));
    parallel_for(m, threads, [&](std::int64_t r) {
      try {
        const Eigen::VectorXd x = sampler.draw(config.seed, static_cast<std::uint64_t>(r)).x;
        Rep rep;
        rep.score = phi.transpose_apply(base.score(x).vec());
        rep.gap = rep.score - phi.transpose_apply(whittle.score(x).score.vec());
        if (rem) {
          const RemainderResult rr = rem->evaluate(x);
          rep.r_obs = rr.observed;
          rep.r_asy = rr.asymptotic;
        }
        if (!rep.score.allFinite() || !rep.gap.allFinite()) throw NumericalError("non-finite score");
        reps[static_cast<std::size_t>(r)] = rep;
      } catch (const NumericalError&) {
      }
    });
    const auto ok = compact(reps);
    pt.excluded = m - static_cast<std::int64_t>(ok.size());
    check_failures(pt.excluded, m, "convergence_study");

    std::vector<Vec2> scores, gaps;
    std::vector<double> r_obs, r_asy;
    for (const auto& rep : ok) {
      scores.push_back(rep.score);
      gaps.push_back(rep.gap);
      r_obs.push_back(std::abs(rep.r_obs));
      r_asy.push_back(std::abs(rep.r_asy));
    }
    pt.score_covariance = summarize(scores).covariance;
    pt.max_rel_err = max_rel_entry_error(pt.score_covariance, report.target_fisher);
    pt.var_exact_whittle_gap = summarize(gaps).covariance;
    if (rem) {
      pt.median_abs_remainder = median(r_obs);
      pt.median_abs_remainder_asymptotic = median(r_asy);
    }
    pt.frobenius_ratio =
        circulant_approximation(build_toeplitz(params.hurst(), n, 0)).frobenius_gap_sq / static_cast<double>(n);
    pt.fourth_moment_ratio_sigma = fourth_moment_ratio(params, scheme, ScoreComponent::Sigma);
    pt.fourth_moment_ratio_h = fourth_moment_ratio(params, scheme, ScoreComponent::H);
    report.metrics.push_back(std::move(pt));
  }
  return report;
}

nlohmann::json study_json(const StudyReport& report) {
  nlohmann::json j;
  j["grid"] = report.grid;
  j["target_fisher"] = sym_json(report.target_fisher);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : report.metrics) {
    nlohmann::json r;
    r["n"] = p.n;
    r["var_exact_whittle_gap"] = vec_json({p.var_exact_whittle_gap.a11, p.var_exact_whittle_gap.a22});
    r["cov_exact_whittle_gap"] = sym_json(p.var_exact_whittle_gap);
    r["median_abs_remainder"] = p.median_abs_remainder ? nlohmann::json(*p.median_abs_remainder) : nlohmann::json();
    r["median_abs_remainder_asymptotic"] =
        p.median_abs_remainder_asymptotic ? nlohmann::json(*p.median_abs_remainder_asymptotic) : nlohmann::json();
    if (!p.remainder_note.empty()) r["remainder_note"] = p.remainder_note;
    r["frobenius_ratio"] = p.frobenius_ratio;
    r["fourth_moment_ratio"] = vec_json({p.fourth_moment_ratio_sigma, p.fourth_moment_ratio_h});
    r["score_covariance"] = sym_json(p.score_covariance);
    r["max_rel_err"] = p.max_rel_err;
    r["excluded"] = p.excluded;
    rows.push_back(std::move(r));
  }
  j["metrics"] = std::move(rows);
  j["config"] = report.config;
  return j;
}

RegimeReport regime_study(const StudyConfig& config) {
  config.validate();
  const ModelParams& params = config.params;
  if (!is_signal_dominated(classify_regime(params))) throw ValidationError("regime_study needs H < 1/2");
  const double h = params.hurst();
  const double sg = params.sigma();
  const int threads = resolve_threads(config.threads);
  RegimeReport report;
  report.grid = config.n_grid;
  report.config = study_config_json(config, "regime");
  report.fisher_pure = fisher_asymptotic(params);

  for (const std::int64_t n : config.n_grid) {
    const SamplingScheme scheme(params, n, config.alpha);
    const IncrementSampler sampler(params, scheme, config.sampler);
    const ExactLikelihood base(params, scheme);
    const WhittleContext dens(params, scheme);  // f_H on the half grid
    const RateMatrix phi = rate_matrix(params, scheme);
    const Eigen::MatrixXd tdot = base.tdot();
    const SpdFactor tf(base.t());
    const double tr_td = trace_solve(tf, tdot);
    const double root_n = std::sqrt(static_cast<double>(n));
    const std::int64_t half = n / 2;

    struct Rep {
      double noise = 0.0, cross = 0.0;
      Vec2 score, gap;
    };
    const std::int64_t m = config.replications;
    std::vector<std::optional<Rep>> reps(static_cast<std::size_t>(m));
    parallel_for(m, threads, [&](std::int64_t r) {
      try {
        const IncrementSample s = sampler.draw(config.seed, static_cast<std::uint64_t>(r));
        const PeriodogramDecomposition dec = periodogram_decomposition(s);
        Rep rep;
        for (std::int64_t k = 1; k <= half; ++k) {
          const double sig = dec.signal_coef * dens.f()(k - 1);
          rep.noise += dec.noise_coef * dec.i_z.values(k - 1) / sig;
          rep.cross += std::abs(dec.cross_coef * dec.cross(k - 1)) / sig;
        }
        rep.noise /= static_cast<double>(half);
        rep.cross /= static_cast<double>(half);
        rep.score = phi.transpose_apply(base.score(s.x).vec());
        const Eigen::VectorXd w = tf.solve(s.g);
        const double pure_sigma = (s.g.dot(w) - static_cast<double>(n)) / sg;
        const double pure_struct = 0.5 * w.dot(tdot * w) - 0.5 * tr_td;
        rep.gap = rep.score - Vec2(pure_sigma, pure_struct) / root_n;
        if (!rep.score.allFinite() || !rep.gap.allFinite()) throw NumericalError("non-finite score");
        reps[static_cast<std::size_t>(r)] = rep;
      } catch (const NumericalError&) {
      }
    });
    const auto ok = compact(reps);
    RegimePoint pt;
    pt.n = n;
    pt.delta = scheme.delta();
    pt.epsilon = scheme.epsilon();
    pt.excluded = m - static_cast<std::int64_t>(ok.size());
    check_failures(pt.excluded, m, "regime_study");
    std::vector<Vec2> scores, gaps;
    for (const auto& rep : ok) {
      pt.noise_coeff += rep.noise;
      pt.cross_coeff += rep.cross;
      scores.push_back(rep.score);
      gaps.push_back(rep.gap);
    }
    pt.noise_coeff /= static_cast<double>(ok.size());
    pt.cross_coeff /= static_cast<double>(ok.size());
    pt.score_covariance = summarize(scores).covariance;
    pt.max_rel_err_pure = max_rel_entry_error(pt.score_covariance, report.fisher_pure);
    pt.pure_gap_covariance = summarize(gaps).covariance;
    if (!report.points.empty()) {
      const RegimePoint& prev = report.points.back();
      const double dr = pt.delta / prev.delta;
      pt.noise_ratio = pt.noise_coeff / prev.noise_coeff;
      pt.noise_ratio_predicted = std::pow(dr, 1.0 - 2.0 * h);
      pt.cross_ratio = pt.cross_coeff / prev.cross_coeff;
      pt.cross_ratio_predicted = std::pow(dr, 0.5 - h);
    }
    report.points.push_back(std::move(pt));
  }
  return report;
}

nlohmann::json regime_json(const RegimeReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json j;
  j["grid"] = report.grid;
  j["fisher_pure"] = sym_json(report.fisher_pure);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : report.points) {
    rows.push_back({
        {"n", p.n},
        {"delta", p.delta},
        {"epsilon", p.epsilon},
        {"noise_coeff", p.noise_coeff},
        {"cross_coeff", p.cross_coeff},
        {"noise_ratio", opt(p.noise_ratio)},
        {"noise_ratio_predicted", opt(p.noise_ratio_predicted)},
        {"cross_ratio", opt(p.cross_ratio)},
        {"cross_ratio_predicted", opt(p.cross_ratio_predicted)},
        {"score_covariance", sym_json(p.score_covariance)},
        {"max_rel_err_pure", p.max_rel_err_pure},
        {"pure_gap_covariance", sym_json(p.pure_gap_covariance)},
        {"excluded", p.excluded},
    });
  }
  j["points"] = std::move(rows);
  j["config"] = report.config;
  return j;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
}

}  // namespace mfbm
