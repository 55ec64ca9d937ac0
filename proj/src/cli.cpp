#include "mfbm/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfbm/experiments.hpp"
#include "mfbm/lan.hpp"
#include "mfbm/likelihood.hpp"
#include "mfbm/simulate.hpp"
#include "mfbm/spectral.hpp"
#include "mfbm/whittle.hpp"

namespace mfbm::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Raw flag values; unset optionals fall back to the config file, then to the defaults.
struct Flags {
  std::optional<double> sigma, hurst, alpha;
  std::optional<std::int64_t> n, m;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> score, sampler, out_dir, format, input, n_grid, u;
  std::optional<int> threads;
  std::optional<std::string> config;
};

struct Settings {
  std::string command;
  double sigma = 1.0;
  double hurst = 0.6;
  double alpha = 0.4;
  std::int64_t n = 100;
  std::int64_t m = 3000;
  std::uint64_t seed = 1;
  std::string score = "exact";
  std::string sampler = "auto";
  std::string out_dir = ".";
  std::string format = "csv";
  std::string input;
  std::vector<std::int64_t> n_grid{64, 128, 256, 512};
  Vec2 u = Vec2(1.0, 1.0);
  int threads = 0;
  bool n_given = false;
};

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  // a summary.json or study.json echo keeps the settings under "config"
  if (j.contains("config") && j["config"].is_object()) return j["config"];
  return j;
}

const json* lookup(const json& cfg, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (cfg.contains(k)) return &cfg[k];
  }
  return nullptr;
}

std::vector<std::int64_t> parse_int_list(const std::string& s, const char* what) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      throw ValidationError(std::string(what) + ": cannot parse '" + tok + "' as an integer");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(what) + " must not be empty");
  return out;
}

Vec2 parse_vec2(const std::string& s) {
  std::stringstream ss(s);
  std::string a, b, extra;
  if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || std::getline(ss, extra, ',')) {
    throw ValidationError("--u expects two comma-separated numbers, got '" + s + "'");
  }
  try {
    return {std::stod(a), std::stod(b)};
  } catch (const std::exception&) {
    throw ValidationError("--u expects two comma-separated numbers, got '" + s + "'");
  }
}

template <class T>
void merge(T& dst, const std::optional<T>& flag, const json& cfg, std::initializer_list<const char*> keys) {
  if (flag) {
    dst = *flag;
    return;
  }
  if (const json* v = lookup(cfg, keys)) {
    try {
      dst = v->get<T>();
    } catch (const json::exception&) {
      throw ValidationError(std::string("config key '") + *keys.begin() + "' has the wrong type");
    }
  }
}

Settings resolve(const Flags& f, const std::string& command) {
  Settings s;
  s.command = command;
  const json cfg = f.config ? load_config(*f.config) : json::object();
  merge(s.sigma, f.sigma, cfg, {"sigma"});
  merge(s.hurst, f.hurst, cfg, {"hurst"});
  merge(s.alpha, f.alpha, cfg, {"alpha"});
  s.n_given = f.n.has_value() || lookup(cfg, {"n"}) != nullptr;
  merge(s.n, f.n, cfg, {"n"});
  merge(s.m, f.m, cfg, {"m", "replications"});
  merge(s.seed, f.seed, cfg, {"seed"});
  merge(s.score, f.score, cfg, {"score", "score_source"});
  merge(s.sampler, f.sampler, cfg, {"sampler"});
  merge(s.out_dir, f.out_dir, cfg, {"out_dir", "out-dir"});
  merge(s.format, f.format, cfg, {"format"});
  merge(s.input, f.input, cfg, {"input"});
  merge(s.threads, f.threads, cfg, {"threads"});
  if (f.n_grid) {
    s.n_grid = parse_int_list(*f.n_grid, "--n-grid");
  } else if (const json* v = lookup(cfg, {"n_grid", "n-grid"})) {
    s.n_grid = v->is_string() ? parse_int_list(v->get<std::string>(), "n_grid") : v->get<std::vector<std::int64_t>>();
  }
  if (f.u) {
    s.u = parse_vec2(*f.u);
  } else if (const json* v = lookup(cfg, {"u"})) {
    if (v->is_string()) {
      s.u = parse_vec2(v->get<std::string>());
    } else {
      const auto a = v->get<std::vector<double>>();
      if (a.size() != 2) throw ValidationError("config key 'u' must hold two numbers");
      s.u = Vec2(a[0], a[1]);
    }
  }
  if (s.format != "csv" && s.format != "json") throw ValidationError("--format must be csv or json");
  if (s.m < 2) throw ValidationError("--m must be >= 2");
  return s;
}

Eigen::VectorXd read_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read input file " + path);
  std::vector<double> vals;
  std::string line;
  int col = 0;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (first) {
      first = false;
      double probe = 0.0;
      const auto [p, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), probe);
      if (ec != std::errc()) {
        // header row: use the "x" column when present
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i] == "x") col = static_cast<int>(i);
        }
        continue;
      }
    }
    if (static_cast<std::size_t>(col) >= cells.size()) throw ValidationError("input row has too few columns");
    double v = 0.0;
    const std::string& cell = cells[static_cast<std::size_t>(col)];
    const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc()) throw ValidationError("input: cannot parse '" + cell + "' as a number");
    vals.push_back(v);
  }
  if (vals.empty()) throw ValidationError("input file " + path + " holds no data");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string fmt(double v) { return format_double(v); }

std::string matrix_line(const Sym2x2& m) {
  return "[[" + fmt(m.a11) + ", " + fmt(m.a12) + "], [" + fmt(m.a12) + ", " + fmt(m.a22) + "]]";
}

fs::path prepare_out_dir(const Settings& s) {
  fs::path dir(s.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + s.out_dir + ": " + ec.message());
  return dir;
}

Eigen::VectorXd data_for(const Settings& s, const ModelParams& p, const SamplingScheme& sc) {
  if (!s.input.empty()) {
    Eigen::VectorXd x = read_input(s.input);
    if (x.size() != sc.n()) {
      if (s.n_given) {
        throw ValidationError("input holds " + std::to_string(x.size()) + " values but --n is " +
                              std::to_string(sc.n()));
      }
    }
    return x;
  }
  return sample_components(p, sc, s.seed, parse_sampler_method(s.sampler)).x;
}

// With --input and no explicit n, the scheme follows the data length.
SamplingScheme scheme_for(const Settings& s, const ModelParams& p) {
  if (!s.input.empty() && !s.n_given) return SamplingScheme(p, read_input(s.input).size(), s.alpha);
  return SamplingScheme(p, s.n, s.alpha);
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const ModelParams p(s.sigma, s.hurst);
  const SamplingScheme sc(p, s.n, s.alpha);
  const IncrementSample smp = sample_components(p, sc, s.seed, parse_sampler_method(s.sampler));
  const fs::path dir = prepare_out_dir(s);
  fs::path file;
  if (s.format == "csv") {
    file = dir / "sample.csv";
    std::ofstream f(file, std::ios::binary);
    f << "i,x,g,z\n";
    for (Eigen::Index i = 0; i < smp.x.size(); ++i) {
      f << (i + 1) << ',' << fmt(smp.x(i)) << ',' << fmt(smp.g(i)) << ',' << fmt(smp.z(i)) << '\n';
    }
  } else {
    file = dir / "sample.json";
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    write_json({{"x", vec(smp.x)},
                {"g", vec(smp.g)},
                {"z", vec(smp.z)},
                {"method", std::string(to_string(smp.method))},
                {"fell_back", smp.fell_back},
                {"config",
                 {{"command", "simulate"},
                  {"sigma", s.sigma},
                  {"hurst", s.hurst},
                  {"n", s.n},
                  {"alpha", s.alpha},
                  {"seed", s.seed},
                  {"sampler", s.sampler}}}},
               file);
  }
  out << "simulate: n=" << s.n << " method=" << to_string(smp.method) << (smp.fell_back ? " (fallback)" : "")
      << " wrote " << file.string() << '\n';
  return kExitOk;
}

int cmd_loglik(const Settings& s, std::ostream& out) {
  const ModelParams p(s.sigma, s.hurst);
  const SamplingScheme sc = scheme_for(s, p);
  const Eigen::VectorXd x = data_for(s, p, sc);
  const double l = loglik(x, p, sc);
  if (s.format == "json") {
    out << json{{"loglik", l}, {"n", sc.n()}}.dump() << '\n';
  } else {
    out << "loglik: n=" << sc.n() << " value=" << fmt(l) << '\n';
  }
  return kExitOk;
}

int cmd_score(const Settings& s, std::ostream& out) {
  const ModelParams p(s.sigma, s.hurst);
  const SamplingScheme sc = scheme_for(s, p);
  const Eigen::VectorXd x = data_for(s, p, sc);
  const ScoreSource src = parse_score_source(s.score);
  ScoreVector sv;
  std::optional<double> z;
  if (src == ScoreSource::Exact) {
    sv = score_exact(x, p, sc);
  } else {
    const auto [w, zz] = score_whittle(x, p, sc);
    sv = w;
    z = zz;
  }
  const Vec2 norm = rate_matrix(p, sc).transpose_apply(sv.vec());
  if (s.format == "json") {
    json j{{"score", s.score},
           {"d_sigma", sv.d_sigma},
           {"d_h", sv.d_h},
           {"normalized", {norm(0), norm(1)}},
           {"n", sc.n()}};
    if (z) j["z"] = *z;
    out << j.dump() << '\n';
  } else {
    out << "score(" << s.score << "): d_sigma=" << fmt(sv.d_sigma) << " d_h=" << fmt(sv.d_h)
        << " normalized=(" << fmt(norm(0)) << ", " << fmt(norm(1)) << ")";
    if (z) out << " z=" << fmt(*z);
    out << '\n';
  }
  return kExitOk;
}

int cmd_fisher(const Settings& s, std::ostream& out) {
  const ModelParams p(s.sigma, s.hurst);
  std::optional<Sym2x2> finite;
  if (s.n_given) {
    const SamplingScheme sc(p, s.n, s.alpha);
    finite = congruence(rate_matrix(p, sc), expected_fisher(p, sc));
  }
  const Fisher2x2 j = fisher_asymptotic(p);
  if (s.format == "json") {
    json o{{"regime", std::string(to_string(classify_regime(p)))}, {"fisher", sym_json(j)}};
    if (finite) o["normalized_expected_fisher"] = sym_json(*finite);
    out << o.dump() << '\n';
  } else {
    out << "fisher(" << to_string(classify_regime(p)) << "): " << matrix_line(j) << '\n';
    if (finite) out << "normalized expected fisher at n=" << s.n << ": " << matrix_line(*finite) << '\n';
  }
  return kExitOk;
}

int cmd_mc_score(const Settings& s, std::ostream& out) {
  const ModelParams p(s.sigma, s.hurst);
  const SamplingScheme sc(p, s.n, s.alpha);
  const MonteCarloConfig cfg{p, sc, s.m, s.seed, parse_score_source(s.score)};
  McOptions opt;
  opt.threads = s.threads;
  opt.sampler = parse_sampler_method(s.sampler);
  const SampleTable t = mc_normalized_scores(cfg, opt);
  const fs::path dir = prepare_out_dir(s);
  write_scores_csv(t, dir / "scores.csv");
  write_json(summary_json(t, cfg, opt), dir / "summary.json");
  out << "mc-score: M=" << t.rows.size() << " covariance=" << matrix_line(t.summary.covariance)
      << " target=" << matrix_line(t.target_fisher) << " max_rel_err=" << fmt(t.max_rel_err) << '\n';
  return kExitOk;
}

StudyConfig study_config(const Settings& s) {
  StudyConfig c{ModelParams(s.sigma, s.hurst), s.alpha, s.n_grid, s.m, s.seed};
  c.u = s.u;
  c.threads = s.threads;
  c.sampler = parse_sampler_method(s.sampler);
  return c;
}

int cmd_convergence(const Settings& s, std::ostream& out) {
  const StudyReport r = convergence_study(study_config(s));
  const fs::path dir = prepare_out_dir(s);
  write_json(study_json(r), dir / "study.json");
  out << "convergence: grid=" << r.grid.size() << " points";
  if (!r.metrics.empty()) {
    const auto& last = r.metrics.back();
    out << " last n=" << last.n << " var_gap=(" << fmt(last.var_exact_whittle_gap.a11) << ", "
        << fmt(last.var_exact_whittle_gap.a22) << ")";
  }
  out << " wrote " << (dir / "study.json").string() << '\n';
  return kExitOk;
}

int cmd_regime(const Settings& s, std::ostream& out) {
  const RegimeReport r = regime_study(study_config(s));
  const fs::path dir = prepare_out_dir(s);
  write_json(regime_json(r), dir / "study.json");
  out << "regime: grid=" << r.grid.size() << " points fisher_pure=" << matrix_line(r.fisher_pure);
  if (!r.points.empty()) out << " last max_rel_err_pure=" << fmt(r.points.back().max_rel_err_pure);
  out << " wrote " << (dir / "study.json").string() << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mixed fBm LAN laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--sigma", f.sigma, "volatility sigma > 0");
  app.add_option("--hurst", f.hurst, "Hurst index in (0, 3/4), not 1/2");
  app.add_option("--n", f.n, "number of increments");
  app.add_option("--alpha", f.alpha, "sampling exponent, delta = n^-alpha");
  app.add_option("--m", f.m, "Monte Carlo replications");
  app.add_option("--seed", f.seed, "64-bit seed");
  app.add_option("--score", f.score, "score source: exact or whittle");
  app.add_option("--sampler", f.sampler, "auto, cholesky or circulant_embedding");
  app.add_option("--out-dir", f.out_dir, "output directory");
  app.add_option("--format", f.format, "csv or json");
  app.add_option("--threads", f.threads, "worker threads (0: MFBM_THREADS or hardware)");
  app.add_option("--config", f.config, "JSON config file with the same keys");
  app.add_option("--n-grid", f.n_grid, "comma-separated n values for studies");
  app.add_option("--u", f.u, "local perturbation u as 'u1,u2'");
  app.add_option("--input", f.input, "CSV data file (column x or first column)");

  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const Settings&, std::ostream&);
  };
  const Cmd cmds[] = {
      {"simulate", "draw one increment sample", cmd_simulate},
      {"loglik", "exact log-likelihood", cmd_loglik},
      {"score", "exact or Whittle score", cmd_score},
      {"fisher", "asymptotic Fisher information", cmd_fisher},
      {"mc-score", "Monte Carlo normalized scores", cmd_mc_score},
      {"convergence", "exact vs Whittle convergence study", cmd_convergence},
      {"regime", "signal-dominated regime study", cmd_regime},
  };
  for (const auto& c : cmds) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (const auto& c : cmds) {
      if (app.got_subcommand(c.name)) return c.fn(resolve(f, c.name), out);
    }
    err << "no subcommand given\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("mfbm_cli");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mfbm::cli
