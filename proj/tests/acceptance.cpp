// Acceptance gate: `mfbm_acceptance A<k>` runs one criterion, prints detail lines and a final
// "PASS A<k>" or "FAIL A<k>" line, and exits 0 on pass.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfbm/covariance.hpp"
#include "mfbm/experiments.hpp"
#include "mfbm/lan.hpp"
#include "mfbm/likelihood.hpp"
#include "mfbm/simulate.hpp"
#include "mfbm/spectral.hpp"
#include "mfbm/whittle.hpp"

namespace fs = std::filesystem;
using namespace mfbm;

namespace {

class Gate {
 public:
  explicit Gate(std::string id) : id_(std::move(id)) {}

  void check(bool ok, const std::string& what) {
    std::cout << "  [" << (ok ? "ok" : "FAIL") << "] " << what << '\n';
    if (!ok) failed_.push_back(what);
    ++count_;
  }
  void note(const std::string& s) { std::cout << "  " << s << '\n'; }

  int finish() const {
    if (failed_.empty()) {
      std::cout << "PASS " << id_ << " (" << count_ << " checks)\n";
      return 0;
    }
    std::cout << "FAIL " << id_ << " (" << failed_.size() << " of " << count_ << " checks failed)\n";
    return 1;
  }

 private:
  std::string id_;
  std::vector<std::string> failed_;
  int count_ = 0;
};

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

std::string mat(const Sym2x2& m) { return "[[" + num(m.a11) + ", " + num(m.a12) + "], [., " + num(m.a22) + "]]"; }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

fs::path out_dir(const std::string& id) {
  const fs::path d = fs::path("acceptance_out") / id;
  fs::create_directories(d);
  return d;
}

// A1: normalized exact-score covariance at n = 100 against J and the reported empirical matrix.
int a1() {
  Gate g("A1");
  const ModelParams p(1.0, 0.6);
  const MonteCarloConfig cfg{p, SamplingScheme(p, 100, 0.4), 3000, 1, ScoreSource::Exact};
  const McOptions opt;
  const SampleTable t = mc_normalized_scores(cfg, opt);
  const fs::path d = out_dir("A1");
  write_scores_csv(t, d / "scores.csv");
  write_json(summary_json(t, cfg, opt), d / "summary.json");
  const Sym2x2 reported{2.14, 0.95, 6.31};
  const Sym2x2 finite = congruence(rate_matrix(p, cfg.scheme), expected_fisher(p, cfg.scheme));
  g.note("empirical covariance " + mat(t.summary.covariance) + " from " + std::to_string(t.rows.size()) +
         " replicates");
  g.note("finite-n normalized information phi' I_n phi = " + mat(finite));
  g.check(t.max_rel_err <= 0.10, "covariance vs quadrature J " + mat(t.target_fisher) +
                                     ": max rel err " + num(t.max_rel_err) + " <= 0.10");
  const double e2 = max_rel_entry_error(t.summary.covariance, reported);
  g.check(e2 <= 0.10, "covariance vs reported J_empirical " + mat(reported) + ": max rel err " + num(e2) + " <= 0.10");
  return g.finish();
}

// A2: quadrature Fisher information.
int a2() {
  Gate g("A2");
  const Fisher2x2 j = fisher_asymptotic(ModelParams(1.0, 0.6));
  const Sym2x2 reported{2.15, 0.94, 6.27};
  const double e = max_rel_entry_error(j, reported);
  g.check(e <= 0.10, "fisher_asymptotic(1, 0.6) = " + mat(j) + " vs reported J_theory " + mat(reported) +
                         ": max rel err " + num(e) + " <= 0.10");
  for (double h : {0.2, 0.35, 0.55, 0.6, 0.7}) {
    const Fisher2x2 f = fisher_asymptotic(ModelParams(1.0, h));
    g.check(f.determinant() > 0.0 && f.a11 > 0.0, "H = " + num(h) + ": J = " + mat(f) + ", det " + num(f.determinant()) + " > 0");
  }
  return g.finish();
}

// A3: finite differences and the information identity.
int a3() {
  Gate g("A3");
  const double sg = 1.0, h = 0.6, alpha = 0.4;
  const ModelParams p(sg, h);
  auto ll = [&](const Eigen::VectorXd& x, double s, double hh, std::int64_t n) {
    const ModelParams q(s, hh);
    return loglik(x, q, SamplingScheme(q, n, alpha));
  };
  auto sc = [&](const Eigen::VectorXd& x, double s, double hh, std::int64_t n) {
    const ModelParams q(s, hh);
    return score_exact(x, q, SamplingScheme(q, n, alpha)).vec();
  };
  double worst_score = 0.0, worst_hess = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const SamplingScheme s32(p, 32, alpha);
    const Eigen::VectorXd x = sample_components(p, s32, seed).x;
    const double e = 1e-5;
    const Vec2 fd((ll(x, sg + e, h, 32) - ll(x, sg - e, h, 32)) / (2 * e),
                  (ll(x, sg, h + e, 32) - ll(x, sg, h - e, 32)) / (2 * e));
    const Vec2 an = score_exact(x, p, s32).vec();
    for (int i = 0; i < 2; ++i) worst_score = std::max(worst_score, rel(an(i), fd(i)));

    const SamplingScheme s16(p, 16, alpha);
    const Eigen::VectorXd y = sample_components(p, s16, seed).x;
    const double k = 1e-4;
    const Vec2 ds = (sc(y, sg + k, h, 16) - sc(y, sg - k, h, 16)) / (2 * k);
    const Vec2 dh = (sc(y, sg, h + k, 16) - sc(y, sg, h - k, 16)) / (2 * k);
    const Sym2x2 hs = hessian_exact(y, p, s16);
    worst_hess = std::max({worst_hess, rel(hs.a11, ds(0)), rel(hs.a12, ds(1)), rel(hs.a12, dh(0)), rel(hs.a22, dh(1))});
  }
  g.check(worst_score <= 1e-6, "score_exact vs central differences of loglik, n = 32: max rel err " + num(worst_score) + " <= 1e-6");
  g.check(worst_hess <= 1e-4, "hessian_exact vs central differences of score_exact, n = 16: max rel err " + num(worst_hess) + " <= 1e-4");

  const SamplingScheme s(p, 32, alpha);
  const ExactLikelihood lik(p, s);
  const IncrementSampler smp(p, s);
  const int m = 2000;
  Eigen::MatrixXd v(m, 3);
  for (int r = 0; r < m; ++r) {
    const Sym2x2 nh = -1.0 * lik.hessian(smp.draw(2024, r).x);
    v.row(r) << nh.a11, nh.a12, nh.a22;
  }
  const Sym2x2 fi = lik.expected_fisher();
  const double target[3] = {fi.a11, fi.a12, fi.a22};
  const char* names[3] = {"11", "12", "22"};
  for (int c = 0; c < 3; ++c) {
    const double mean = v.col(c).mean();
    const double se = std::sqrt((v.col(c).array() - mean).square().sum() / (m - 1) / m);
    const double z = (mean - target[c]) / se;
    g.check(std::abs(z) <= 4.0, std::string("MC mean of -hessian entry ") + names[c] + " = " + num(mean) +
                                    " vs expected_fisher " + num(target[c]) + ": |z| = " + num(std::abs(z)) + " <= 4");
  }
  return g.finish();
}

// A4: exact identities at 1e-10.
int a4() {
  Gate g("A4");
  const double tol = 1e-10;
  double worst = 0.0;
  for (double h : {0.2, 0.35, 0.6, 0.7}) {
    for (double eps : {1e-3, 0.1, 2.0}) {
      const Eigen::MatrixXd t = build_toeplitz(h, 64).dense();
      const double scale = (t + eps * Eigen::MatrixXd::Identity(64, 64)).inverse().norm();
      worst = std::max(worst, resolvent_identity_residual(h, 64, eps) / scale);
    }
  }
  g.check(worst <= tol, "resolvent identity, n = 64: max residual / ||K||_F " + num(worst));

  worst = 0.0;
  double worst_der = 0.0, worst_bias = 0.0, worst_par = 0.0, worst_log = 0.0;
  const std::pair<double, double> cases[] = {{0.6, 0.4}, {0.7, 0.3}, {0.35, 0.6}, {0.2, 0.6}};
  for (const auto& [h, alpha] : cases) {
    const ModelParams p(1.3, h);
    const SamplingScheme s(p, 96, alpha);
    const Eigen::VectorXd x = sample_components(p, s, 8).x;
    const auto [w, z] = score_whittle(x, p, s);
    worst = std::max(worst, rel(w.d_h, p.sigma() * s.log_delta() * w.d_sigma + z));

    const ExactLikelihood lik(p, s);
    const Eigen::MatrixXd lhs = lik.dense(lik.dv(1)) - p.sigma() * s.log_delta() * lik.dense(lik.dv(0));
    const Eigen::MatrixXd rhs = s.signal_scale() * build_toeplitz(h, 96, 1).dense();
    worst_der = std::max(worst_der, (lhs - rhs).norm() / rhs.norm());

    const Sym2x2 b = lik.bias_traces(), q = lik.expected_bias_quadratic();
    worst_bias = std::max(worst_bias, max_rel_entry_error(q, b));

    const Periodogram per = periodogram(x);
    worst_par = std::max(worst_par, rel(per.total_energy(), x.squaredNorm()));

    const double second = normalized_score(x, p, s)(1);
    worst_log = std::max(worst_log, rel(second, rate_matrix(p, s).scale * lik.structural_score(x)));
  }
  g.check(worst <= tol, "Whittle relation d_H l^W = sigma ln(delta) d_sigma l^W + Z: max rel err " + num(worst));
  g.check(worst_der <= tol, "dV/dH - sigma ln(delta) dV/dsigma = sigma^2 delta^{2H} Tdot: max rel err " + num(worst_der));
  g.check(worst_bias <= tol, "tr(V^-1 D) = tr(V^-1 D V^-1 V) for second derivatives D: max rel err " + num(worst_bias));
  g.check(worst_par <= tol, "Parseval sum_k I(lambda_k) = sum_t x_t^2: max rel err " + num(worst_par));
  g.check(worst_log <= tol, "second normalized component = v_n * structural score: max rel err " + num(worst_log));
  return g.finish();
}

// A5: spectral density against the autocovariance.
int a5() {
  Gate g("A5");
  for (double h : {0.2, 0.35, 0.6}) {
    double worst = 0.0;
    for (std::int64_t k : {0, 1, 2, 5}) worst = std::max(worst, rel(spectral_autocovariance(h, k), fgn_autocovariance(h, k)));
    g.check(worst <= 1e-6, "H = " + num(h) + ": (1/2pi) int f_H cos(k l) vs rho_H(k), k in {0,1,2,5}: max rel err " + num(worst));
  }
  double worst = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double l = std::numbers::pi * i / 200.0;
    worst = std::max(worst, std::abs(fgn_spectral_density(0.5, l) - 1.0));
    worst = std::max(worst, std::abs(fgn_spectral_density(0.5, -l) - 1.0));
  }
  g.check(worst <= 1e-8, "f_{1/2} = 1 on a 400-point grid: max abs err " + num(worst));
  return g.finish();
}

// A6: convergence trends for the noise-dominated example.
int a6() {
  Gate g("A6");
  StudyConfig c{ModelParams(1.0, 0.6), 0.4, {64, 128, 256, 512}, 1000, 1};
  const StudyReport r = convergence_study(c);
  write_json(study_json(r), out_dir("A6") / "study.json");
  for (const auto& pt : r.metrics) {
    g.note("n = " + std::to_string(pt.n) + ": var gap (" + num(pt.var_exact_whittle_gap.a11) + ", " +
           num(pt.var_exact_whittle_gap.a22) + "), ||T-C||^2/n " + num(pt.frobenius_ratio) + ", fourth moment (" +
           num(pt.fourth_moment_ratio_sigma) + ", " + num(pt.fourth_moment_ratio_h) + "), median |r| " +
           (pt.median_abs_remainder ? num(*pt.median_abs_remainder) : std::string("n/a: ") + pt.remainder_note));
  }
  const StudyPoint& first = r.metrics.front();
  const StudyPoint& last = r.metrics.back();
  g.check(last.var_exact_whittle_gap.a11 < 0.5 * first.var_exact_whittle_gap.a11,
          "gap variance (sigma) at 512 < 0.5 x at 64: ratio " + num(last.var_exact_whittle_gap.a11 / first.var_exact_whittle_gap.a11));
  g.check(last.var_exact_whittle_gap.a22 < 0.5 * first.var_exact_whittle_gap.a22,
          "gap variance (H) at 512 < 0.5 x at 64: ratio " + num(last.var_exact_whittle_gap.a22 / first.var_exact_whittle_gap.a22));
  bool mono = true;
  for (std::size_t i = 1; i < r.metrics.size(); ++i) mono = mono && r.metrics[i].frobenius_ratio <= r.metrics[i - 1].frobenius_ratio;
  g.check(mono, "||T - C||_F^2 / n non-increasing over the grid");
  const StudyPoint& p128 = r.metrics[1];
  g.check(last.fourth_moment_ratio_sigma <= 0.5 * p128.fourth_moment_ratio_sigma,
          "fourth-moment ratio (sigma) 512 vs 128: " + num(last.fourth_moment_ratio_sigma / p128.fourth_moment_ratio_sigma) + " <= 0.5");
  g.check(last.fourth_moment_ratio_h <= 0.5 * p128.fourth_moment_ratio_h,
          "fourth-moment ratio (H) 512 vs 128: " + num(last.fourth_moment_ratio_h / p128.fourth_moment_ratio_h) + " <= 0.5");
  std::vector<std::pair<std::int64_t, double>> rem;
  for (const auto& pt : r.metrics) {
    if (pt.median_abs_remainder) rem.emplace_back(pt.n, *pt.median_abs_remainder);
    else g.note("n = " + std::to_string(pt.n) + " left out of the remainder trend: theta + phi u is inadmissible there");
  }
  bool dec = rem.size() >= 2;
  for (std::size_t i = 1; i < rem.size(); ++i) dec = dec && rem[i].second < rem[i - 1].second;
  std::string pts;
  for (const auto& [n, v] : rem) pts += " " + std::to_string(n) + ":" + num(v);
  g.check(dec, "median |r_n| strictly decreasing over the admissible grid points" + pts);
  return g.finish();
}

// A7: signal-dominated regime.
int a7() {
  Gate g("A7");
  StudyConfig c{ModelParams(1.0, 0.35), 0.6, {64, 128, 256, 512}, 2000, 1};
  const RegimeReport r = regime_study(c);
  write_json(regime_json(r), out_dir("A7") / "study_h035.json");
  g.note("J_pure(1, 0.35) = " + mat(r.fisher_pure));
  for (const auto& pt : r.points) {
    g.note("n = " + std::to_string(pt.n) + ": score covariance " + mat(pt.score_covariance) + ", max rel err " +
           num(pt.max_rel_err_pure) + ", noise coeff " + num(pt.noise_coeff) + ", cross coeff " + num(pt.cross_coeff));
  }
  g.check(r.points.back().max_rel_err_pure <= 0.15,
          "n = 512 normalized score covariance vs J_pure: max rel err " + num(r.points.back().max_rel_err_pure) + " <= 0.15");

  const auto sp = pure_fgn_constants(0.35, ConstantsMethod::Spectral);
  const auto tr = pure_fgn_constants(0.35, ConstantsMethod::Trace, 2048);
  g.check(rel(tr.t1, sp.t1) <= 0.05 && rel(tr.t2, sp.t2) <= 0.05,
          "T1, T2 spectral (" + num(sp.t1) + ", " + num(sp.t2) + ") vs trace at n = 2048 (" + num(tr.t1) + ", " +
              num(tr.t2) + "): rel err " + num(rel(tr.t1, sp.t1)) + ", " + num(rel(tr.t2, sp.t2)) + " <= 0.05");

  double worst_noise = 0.0, worst_cross = 0.0;
  for (const auto& pt : r.points) {
    if (!pt.noise_ratio) continue;
    worst_noise = std::max(worst_noise, rel(*pt.noise_ratio, *pt.noise_ratio_predicted));
    worst_cross = std::max(worst_cross, rel(*pt.cross_ratio, *pt.cross_ratio_predicted));
  }
  g.check(worst_noise <= 0.20, "noise contribution ratios vs delta^{1-2H} powers: max rel err " + num(worst_noise) + " <= 0.20");
  g.check(worst_cross <= 0.20, "cross contribution ratios vs delta^{1/2-H} powers: max rel err " + num(worst_cross) + " <= 0.20");

  StudyConfig low{ModelParams(1.0, 0.2), 0.6, {64, 128, 256, 512}, 1000, 1};
  const RegimeReport rl = regime_study(low);
  write_json(regime_json(rl), out_dir("A7") / "study_h020.json");
  bool dec = true;
  std::string errs;
  for (std::size_t i = 0; i < rl.points.size(); ++i) {
    errs += " " + num(rl.points[i].max_rel_err_pure);
    if (i > 0) dec = dec && rl.points[i].max_rel_err_pure < rl.points[i - 1].max_rel_err_pure;
  }
  g.note("J_pure(1, 0.2) = " + mat(rl.fisher_pure));
  g.check(dec, "H = 0.2, alpha = 0.6 runs; max rel err vs J_pure decreasing across the grid:" + errs);
  bool gap_dec = true;
  for (std::size_t i = 1; i < rl.points.size(); ++i) {
    gap_dec = gap_dec && rl.points[i].pure_gap_covariance.a11 + rl.points[i].pure_gap_covariance.a22 <
                             rl.points[i - 1].pure_gap_covariance.a11 + rl.points[i - 1].pure_gap_covariance.a22;
  }
  g.check(gap_dec, "H = 0.2: trace of the mixed-vs-pure score gap covariance decreasing across the grid");
  return g.finish();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// A8: byte-identical scores.csv across thread counts.
int a8() {
  Gate g("A8");
  const ModelParams p(1.0, 0.6);
  for (ScoreSource src : {ScoreSource::Exact, ScoreSource::Whittle}) {
    const MonteCarloConfig cfg{p, SamplingScheme(p, 128, 0.4), 300, 77, src};
    std::string ref;
    bool same = true;
    for (int th : {1, 2, 4, 7}) {
      McOptions o;
      o.threads = th;
      std::ostringstream os;
      write_scores_csv(mc_normalized_scores(cfg, o), os);
      if (ref.empty()) ref = os.str();
      else same = same && os.str() == ref;
    }
    g.check(same && !ref.empty(), std::string("library, ") + std::string(to_string(src)) + " scores: threads 1, 2, 4, 7 give identical bytes");
  }
  const char* cli = std::getenv("MFBM_CLI");
  if (!cli) {
    g.check(false, "MFBM_CLI is not set, cannot run the command-line check");
    return g.finish();
  }
  const fs::path d = out_dir("A8");
  std::vector<std::string> files;
  for (const std::string th : {"1", "3", "8"}) {
    const fs::path sub = d / ("threads_" + th);
    const std::string cmd = "MFBM_THREADS=" + th + " \"" + std::string(cli) +
                            "\" mc-score --n 200 --m 200 --seed 5 --out-dir \"" + sub.string() + "\" > /dev/null";
    const int rc = std::system(cmd.c_str());
    g.check(rc == 0, "cli mc-score with MFBM_THREADS=" + th + " exits 0");
    files.push_back(slurp(sub / "scores.csv"));
  }
  const fs::path sub = d / "flag";
  const std::string cmd = "\"" + std::string(cli) + "\" mc-score --n 200 --m 200 --seed 5 --threads 5 --out-dir \"" +
                          sub.string() + "\" > /dev/null";
  g.check(std::system(cmd.c_str()) == 0, "cli mc-score with --threads 5 exits 0");
  files.push_back(slurp(sub / "scores.csv"));
  bool same = !files[0].empty();
  for (const auto& f : files) same = same && f == files[0];
  g.check(same, "cli scores.csv byte-identical across thread counts 1, 3, 8, 5");
  return g.finish();
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<int()>> gates = {{"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},
                                                              {"A5", a5}, {"A6", a6}, {"A7", a7}, {"A8", a8}};
  std::vector<std::string> which;
  for (int i = 1; i < argc; ++i) which.emplace_back(argv[i]);
  if (which.empty()) for (const auto& [k, v] : gates) which.push_back(k);
  int rc = 0;
  for (const auto& w : which) {
    const auto it = gates.find(w);
    if (it == gates.end()) {
      std::cerr << "unknown criterion " << w << '\n';
      return 2;
    }
    try {
      rc |= it->second();
    } catch (const std::exception& e) {
      std::cout << "FAIL " << w << " (exception: " << e.what() << ")\n";
      rc = 1;
    }
  }
  return rc;
}
