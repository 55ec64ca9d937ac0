#include "mfbm/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "mfbm/covariance.hpp"

namespace mfbm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GaussRule {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

GaussRule gauss_legendre(int m) {
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(m));
  r.weights.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (m == 1) p0 = 1.0;
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.nodes[static_cast<std::size_t>(m - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(m - 1 - i)] = w;
  }
  return r;
}

// log of the prefactor Gamma(2H+1) sin(pi H) and its H-derivative.
double prefactor(double h) { return std::tgamma(2.0 * h + 1.0) * std::sin(kPi * h); }
double prefactor_log_derivative(double h) {
  return 2.0 * boost::math::digamma(2.0 * h + 1.0) + kPi * std::cos(kPi * h) / std::sin(kPi * h);
}

// Sum over |k| > K of |lambda + 2 pi k|^{-s} and its H-derivative, s = 2H + 1, from the
// midpoint integral comparison plus its first Euler-Maclaurin correction.
void lattice_tail(double h, double lambda, int big_k, double& tail0, double& tail1) {
  const double s = 2.0 * h + 1.0;
  tail0 = 0.0;
  tail1 = 0.0;
  for (double sign : {1.0, -1.0}) {
    const double x = kTwoPi * (big_k + 0.5) + sign * lambda;
    const double lx = std::log(x);
    const double xm2h = std::exp(-2.0 * h * lx);
    const double xs1 = std::exp(-(s + 1.0) * lx);
    // int_{K+1/2}^inf (2 pi u + sign lambda)^{-s} du = x^{-2H} / (2 pi 2H)
    tail0 += xm2h / (4.0 * kPi * h);
    tail1 += xm2h * (-2.0 * lx) / (4.0 * kPi * h) - xm2h / (4.0 * kPi * h * h);
    // + g'(K + 1/2) / 24 with g(u) = (2 pi u + sign lambda)^{-s}
    tail0 += -(kPi * s / 12.0) * xs1;
    tail1 += -(kPi / 12.0) * (2.0 * xs1 + s * (-2.0 * lx) * xs1);
  }
}

SpectralPair spectral_pair_impl(double h, double lambda, const SpectralEvalConfig& cfg, bool want_derivative) {
  if (!(h > 0.0 && h < 1.0)) throw DomainError("spectral density requires hurst in (0, 1)");
  if (!std::isfinite(lambda)) throw DomainError("spectral density: non-finite frequency");
  lambda = std::abs(lambda);
  if (lambda > kPi) lambda = std::abs(std::remainder(lambda, kTwoPi));
  if (lambda == 0.0) {
    if (h > 0.5) throw DomainError("spectral density has a pole at lambda = 0 for H > 1/2");
    if (h == 0.5) return {1.0, 0.0};
    return {0.0, 0.0};
  }
  const double s = 2.0 * h + 1.0;
  double sum0 = 0.0;
  double sum1 = 0.0;
  for (int k = cfg.truncation; k >= 1; --k) {
    for (double x : {lambda + kTwoPi * k, kTwoPi * k - lambda}) {
      const double lx = std::log(x);
      const double term = std::exp(-s * lx);
      sum0 += term;
      if (want_derivative) sum1 += -2.0 * lx * term;
    }
  }
  {
    const double lx = std::log(lambda);
    const double term = std::exp(-s * lx);
    sum0 += term;
    if (want_derivative) sum1 += -2.0 * lx * term;
  }
  if (cfg.tail_correction) {
    double t0 = 0.0, t1 = 0.0;
    lattice_tail(h, lambda, cfg.truncation, t0, t1);
    sum0 += t0;
    sum1 += t1;
  }
  const double half_sin = std::sin(0.5 * lambda);
  const double filter = 4.0 * half_sin * half_sin;  // 2 (1 - cos lambda)
  const double c = prefactor(h);
  SpectralPair out;
  out.value = c * filter * sum0;
  if (want_derivative) out.dh = filter * c * (prefactor_log_derivative(h) * sum0 + sum1);
  if (!std::isfinite(out.value) || !std::isfinite(out.dh)) {
    throw NumericalError("spectral density evaluation produced a non-finite value at lambda = " +
                         std::to_string(lambda));
  }
  return out;
}

double moment_or_zero(double p, int m, double eps) { return eps > 0.0 ? power_log_moment(p, m, eps) : 0.0; }

}  // namespace

void SpectralEvalConfig::validate() const {
  if (truncation < 1) throw ValidationError("spectral truncation must be >= 1");
  if (quadrature_points < 16) throw ValidationError("quadrature_points must be >= 16");
  if (endpoint_refinement_levels < 0) throw ValidationError("endpoint_refinement_levels must be >= 0");
  if (!(quadrature_rel_tol > 0.0)) throw ValidationError("quadrature_rel_tol must be positive");
}

double fgn_spectral_density(double hurst, double lambda, int order, const SpectralEvalConfig& cfg) {
  if (order != 0 && order != 1) throw ValidationError("spectral density order must be 0 or 1");
  const auto p = spectral_pair_impl(hurst, lambda, cfg, order == 1);
  return order == 0 ? p.value : p.dh;
}

SpectralPair fgn_spectral_pair(double hurst, double lambda, const SpectralEvalConfig& cfg) {
  return spectral_pair_impl(hurst, lambda, cfg, true);
}

double observation_spectral_density(double delta, double gamma, double fgn_value) {
  return delta * (1.0 + gamma * fgn_value);
}

double observation_spectral_density(const ModelParams& params, const SamplingScheme& scheme, double lambda,
                                    const SpectralEvalConfig& cfg) {
  return observation_spectral_density(scheme.delta(), scheme.gamma(),
                                      fgn_spectral_density(params.hurst(), lambda, 0, cfg));
}

double power_log_moment(double p, int m, double eps) {
  if (!(p > -1.0)) throw DomainError("power_log_moment requires p > -1");
  const double q = p + 1.0;
  const double le = std::log(eps);
  const double base = std::exp(q * le);
  switch (m) {
    case 0:
      return base / q;
    case 1:
      return base * (le / q - 1.0 / (q * q));
    case 2:
      return base * (le * le / q - 2.0 * le / (q * q) + 2.0 / (q * q * q));
    default:
      throw ValidationError("power_log_moment supports m in {0, 1, 2}");
  }
}

QuadratureResult integrate_zero_pi(const std::function<double(double)>& integrand, const SpectralEvalConfig& cfg,
                                   const std::function<double(double)>& endpoint) {
  cfg.validate();
  const GaussRule fine = gauss_legendre(cfg.quadrature_points);
  const GaussRule coarse = gauss_legendre(cfg.quadrature_points / 2);
  double total_fine = 0.0, total_coarse = 0.0, total_abs = 0.0;
  double hi = kPi;
  double last = 0.0, before_last = 0.0;
  for (int level = 0; level < cfg.endpoint_refinement_levels; ++level) {
    const double lo = 0.5 * hi;
    const double mid = 0.5 * (hi + lo), rad = 0.5 * (hi - lo);
    double pf = 0.0, pa = 0.0, pc = 0.0;
    for (std::size_t i = 0; i < fine.nodes.size(); ++i) {
      const double v = integrand(mid + rad * fine.nodes[i]);
      pf += fine.weights[i] * v;
      pa += fine.weights[i] * std::abs(v);
    }
    for (std::size_t i = 0; i < coarse.nodes.size(); ++i) pc += coarse.weights[i] * integrand(mid + rad * coarse.nodes[i]);
    total_fine += rad * pf;
    total_abs += rad * pa;
    total_coarse += rad * pc;
    before_last = last;
    last = rad * pf;
    hi = lo;
  }
  const double end = endpoint ? endpoint(hi) : 0.0;
  total_fine += end;
  total_coarse += end;
  total_abs += std::abs(end);
  QuadratureResult r{total_fine, std::abs(total_fine - total_coarse)};
  if (!endpoint) {
    // mass left in (0, hi], extrapolating the geometric decay of the last two panels
    const double ratio = before_last != 0.0 ? last / before_last : 0.0;
    r.error_estimate += (ratio > 0.0 && ratio < 1.0) ? std::abs(last) * ratio / (1.0 - ratio) : std::abs(last);
  }
  if (!std::isfinite(r.value)) throw NumericalError("quadrature produced a non-finite value");
  if (r.error_estimate > cfg.quadrature_rel_tol * total_abs) {
    throw NumericalError("quadrature did not reach relative tolerance " + std::to_string(cfg.quadrature_rel_tol) +
                         ": value = " + std::to_string(r.value) + ", error estimate = " +
                         std::to_string(r.error_estimate) + ", levels = " +
                         std::to_string(cfg.endpoint_refinement_levels) +
                         ", points = " + std::to_string(cfg.quadrature_points));
  }
  return r;
}

double spectral_autocovariance(double hurst, std::int64_t lag, const SpectralEvalConfig& cfg) {
  const double k = static_cast<double>(lag);
  const double c = prefactor(hurst);
  auto g = [&](double l) { return fgn_spectral_density(hurst, l, 0, cfg) * std::cos(k * l); };
  auto end = [&](double eps) { return c * moment_or_zero(1.0 - 2.0 * hurst, 0, eps); };
  return integrate_zero_pi(g, cfg, end).value / kPi;
}

PureFgnConstants pure_fgn_constants(double hurst, ConstantsMethod method, std::int64_t trace_n,
                                    const SpectralEvalConfig& cfg) {
  PureFgnConstants out;
  out.method = method;
  if (method == ConstantsMethod::Spectral) {
    if (!(hurst > 0.25)) throw DomainError("spectral fGn constants require H > 1/4 (use the trace method)");
    const double a = prefactor_log_derivative(hurst);  // fdot/f ~ a - 2 ln lambda near 0
    auto ratio = [&](double l) {
      const auto p = fgn_spectral_pair(hurst, l, cfg);
      return p.dh / p.value;
    };
    auto r1 = integrate_zero_pi(ratio, cfg, [&](double eps) {
      return a * power_log_moment(0.0, 0, eps) - 2.0 * power_log_moment(0.0, 1, eps);
    });
    auto r2 = integrate_zero_pi([&](double l) { const double r = ratio(l); return r * r; }, cfg, [&](double eps) {
      return a * a * power_log_moment(0.0, 0, eps) - 4.0 * a * power_log_moment(0.0, 1, eps) +
             4.0 * power_log_moment(0.0, 2, eps);
    });
    out.t1 = r1.value / kPi;
    out.t2 = r2.value / (2.0 * kPi);
  } else {
    if (trace_n < 64) throw ValidationError("trace method requires trace_n >= 64");
    const auto avg = fgn_trace_averages(hurst, trace_n);
    out.t1 = avg.first;
    out.t2 = avg.second;
    out.trace_n = trace_n;
  }
  return out;
}

PureFgnConstants pure_fgn_constants_extrapolated(double hurst, std::span<const std::int64_t> sizes) {
  if (sizes.empty()) throw ValidationError("extrapolation needs at least one size");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] != 2 * sizes[i - 1]) throw ValidationError("extrapolation sizes must double at each step");
  }
  std::vector<double> a1, a2;
  for (auto n : sizes) {
    const auto c = pure_fgn_constants(hurst, ConstantsMethod::Trace, n);
    a1.push_back(c.t1);
    a2.push_back(c.t2);
  }
  // Richardson table: level j removes the n^{-j} error term.
  for (std::size_t level = 1; level < sizes.size(); ++level) {
    const double w = std::ldexp(1.0, static_cast<int>(level));
    for (std::size_t i = sizes.size() - 1; i >= level; --i) {
      a1[i] = (w * a1[i] - a1[i - 1]) / (w - 1.0);
      a2[i] = (w * a2[i] - a2[i - 1]) / (w - 1.0);
    }
  }
  PureFgnConstants out;
  out.t1 = a1.back();
  out.t2 = a2.back();
  out.method = ConstantsMethod::Trace;
  out.trace_n = sizes.back();
  return out;
}

Fisher2x2 fisher_pure(const ModelParams& params, const PureFgnConstants& c) {
  const double s = params.sigma();
  return Fisher2x2(2.0 / (s * s), c.t1 / s, c.t2);
}

Fisher2x2 fisher_asymptotic(const ModelParams& params, const SpectralEvalConfig& cfg) {
  const double h = params.hurst();
  if (classify_regime(params) != Regime::NoiseDominated) {
    const auto c = h > 0.25 ? pure_fgn_constants(h, ConstantsMethod::Spectral, 0, cfg)
                            : pure_fgn_constants_extrapolated(h, kDefaultTraceSizes);
    return fisher_pure(params, c);
  }
  const double s = params.sigma();
  const double c = prefactor(h);
  const double dc = c * prefactor_log_derivative(h);
  const double p = 2.0 - 4.0 * h;  // f_H^2 ~ c^2 lambda^{2-4H}
  // Near 0: f ~ c l^{1-2H}, fdot ~ l^{1-2H} (dc - 2 c ln l).
  auto i_ff = integrate_zero_pi([&](double l) { const double f = fgn_spectral_density(h, l, 0, cfg); return f * f; },
                                cfg, [&](double eps) { return c * c * power_log_moment(p, 0, eps); });
  auto i_fd = integrate_zero_pi(
      [&](double l) { const auto v = fgn_spectral_pair(h, l, cfg); return v.value * v.dh; }, cfg,
      [&](double eps) { return c * dc * power_log_moment(p, 0, eps) - 2.0 * c * c * power_log_moment(p, 1, eps); });
  auto i_dd = integrate_zero_pi(
      [&](double l) { const double d = fgn_spectral_density(h, l, 1, cfg); return d * d; }, cfg, [&](double eps) {
        return dc * dc * power_log_moment(p, 0, eps) - 4.0 * c * dc * power_log_moment(p, 1, eps) +
               4.0 * c * c * power_log_moment(p, 2, eps);
      });
  Fisher2x2 j(2.0 * s * s / kPi * i_ff.value, s * s * s / kPi * i_fd.value,
              s * s * s * s / (2.0 * kPi) * i_dd.value);
  if (!j.positive_definite()) throw NumericalError("asymptotic Fisher matrix is not positive definite");
  return j;
}

}  // namespace mfbm
