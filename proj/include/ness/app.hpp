#pragma once

// Batch commands behind the `ness` executable: sample, verify <kind>, ldp <task>.
// Every output file carries the config digest; numeric files never contain
// timestamps or worker counts, so re-runs are byte-identical.

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "ness/config.hpp"
#include "ness/core_model.hpp"
#include "ness/errors.hpp"
#include "ness/harness.hpp"
#include "ness/ldp.hpp"

namespace ness {

enum ExitCode : int { kExitPass = 0, kExitVerdictFailure = 1, kExitConfigError = 2, kExitNumericError = 3 };

struct RunOptions {
  std::filesystem::path out_dir = "ness-out";
  unsigned workers = 1;
  int verbosity = 0;
};

struct CommandOutcome {
  int exit_code = kExitPass;
  std::vector<std::string> files;
  std::vector<Verdict> verdicts;
};

/// Shortest round-trip decimal, independent of the locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

/// CSV writer: digest comment line, header row, then rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& digest, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write output file '" + path.string() + "'");
    out_ << "# manifest_digest=" << digest << '\n';
    for (std::size_t j = 0; j < header.size(); ++j) out_ << (j ? "," : "") << header[j];
    out_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... values) {
    std::size_t j = 0;
    ((out_ << (j++ ? "," : "") << format_number(values)), ...);
    out_ << '\n';
  }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

namespace detail {

inline Json verdicts_json(const std::vector<Verdict>& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) {
    arr.push_back({{"name", v.name},
                   {"passed", v.passed},
                   {"statistic", v.statistic},
                   {"standard_error", v.standard_error},
                   {"threshold", v.threshold},
                   {"note", v.note}});
  }
  return arr;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path.string() + "'");
  out << text;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects outputs of one command and writes summary.json and manifest.json.
class Run {
 public:
  Run(std::string command, const AppConfig& cfg, const RunOptions& opt)
      : command_(std::move(command)),
        cfg_(cfg),
        opt_(opt),
        digest_(config_digest(cfg)),
        start_(std::chrono::system_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(opt_.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + opt_.out_dir.string() + "': " + ec.message());
  }

  const std::string& digest() const noexcept { return digest_; }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
    files_.push_back(name);
    return CsvWriter(opt_.out_dir / name, digest_, header);
  }

  void log(const std::string& line) const {
    if (opt_.verbosity > 0) std::cerr << "[" << command_ << "] " << line << '\n';
  }

  CommandOutcome finish(Json results, std::vector<Verdict> verdicts) {
    const bool passed = all_passed(verdicts);
    Json summary = {{"command", command_},
                    {"manifest_digest", digest_},
                    {"seed", cfg_.seed},
                    {"config", to_json(cfg_)},
                    {"results", std::move(results)},
                    {"verdicts", verdicts_json(verdicts)},
                    {"passed", passed}};
    files_.push_back("summary.json");
    write_text(opt_.out_dir / "summary.json", summary.dump(2) + "\n");

    files_.push_back("manifest.json");
    Json manifest = {{"command", command_},
                     {"config_digest", digest_},
                     {"seed", cfg_.seed},
                     {"workers", opt_.workers},
                     {"start", utc_timestamp(start_)},
                     {"end", utc_timestamp(std::chrono::system_clock::now())},
                     {"outputs", files_}};
    write_text(opt_.out_dir / "manifest.json", manifest.dump(2) + "\n");
    for (const auto& v : verdicts) {
      log(std::string(v.passed ? "PASS " : "FAIL ") + v.name + ": " + format_number(v.statistic) +
          " (se " + format_number(v.standard_error) + ", threshold " + format_number(v.threshold) + ")");
    }
    return {passed ? kExitPass : kExitVerdictFailure, files_, std::move(verdicts)};
  }

 private:
  std::string command_;
  AppConfig cfg_;
  RunOptions opt_;
  std::string digest_;
  std::chrono::system_clock::time_point start_;
  std::vector<std::string> files_;
};

inline ExperimentConfig experiment(const AppConfig& cfg, const RunOptions& opt, std::vector<std::size_t> ladder,
                                   std::size_t replicas) {
  ExperimentConfig e;
  e.n_ladder = std::move(ladder);
  e.replicas = replicas;
  e.bounds = cfg.bounds();
  e.g = make_local_function(cfg.g);
  e.phi = make_test_function(cfg.phi);
  e.seed = RandomSeed{cfg.seed, 0};
  e.workers = opt.workers;
  e.quad = cfg.quadrature;
  return e;
}

inline Json variances_json(const CltVariances& v) {
  return {{"sigma_t_sq", v.sigma_t_sq}, {"sigma_e_sq", v.sigma_e_sq}, {"total", v.total()}};
}

}  // namespace detail

/// Profile and configuration draw; columns site, theta, eta.
inline CommandOutcome cmd_sample(const AppConfig& cfg, const RunOptions& opt) {
  detail::Run run("sample", cfg, opt);
  const auto draw = sample_ness(cfg.sample_n, cfg.bounds(), RandomSeed{cfg.seed, 0});
  auto csv = run.csv("sample.csv", {"site", "theta", "eta"});
  for (std::size_t i = 0; i < cfg.sample_n; ++i) {
    csv.row(i + 1, draw.profile[i], static_cast<std::size_t>(draw.configuration[i]));
  }
  return run.finish({{"n", cfg.sample_n}}, {});
}

inline CommandOutcome cmd_verify(const std::string& kind, const AppConfig& cfg, const RunOptions& opt) {
  detail::Run run("verify " + kind, cfg, opt);
  if (kind == "lln") {
    const auto r = run_lln(detail::experiment(cfg, opt, cfg.lln.n_ladder, cfg.lln.replicas));
    auto csv = run.csv("lln.csv", {"n", "mean_abs_deviation", "standard_error", "clt_band"});
    for (const auto& row : r.rows) csv.row(row.n, row.mean_abs_deviation, row.standard_error, row.clt_band);
    return run.finish({{"limit", r.limit}, {"variances", detail::variances_json(r.variances)}}, r.verdicts);
  }
  if (kind == "clt") {
    const auto r = run_clt(detail::experiment(cfg, opt, {cfg.clt.n}, cfg.clt.replicas));
    auto csv = run.csv("clt.csv", {"replica", "rescaled_fluctuation"});
    for (std::size_t i = 0; i < r.samples.size(); ++i) csv.row(i, r.samples[i]);
    return run.finish({{"n", r.n},
                       {"centering", r.centering},
                       {"variances", detail::variances_json(r.variances)},
                       {"sample_mean", r.moments.mean},
                       {"sample_variance", r.moments.variance},
                       {"variance_standard_error", r.moments.variance_se},
                       {"ks", r.ks},
                       {"ks_threshold", r.ks_threshold}},
                      r.verdicts);
  }
  if (kind == "bridge") {
    const auto r = run_bridge(detail::experiment(cfg, opt, {cfg.bridge.n}, cfg.bridge.replicas), cfg.bridge.grid);
    auto csv = run.csv("bridge.csv", {"s", "t", "empirical", "standard_error", "analytic", "finite_n"});
    for (const auto& e : r.entries) csv.row(e.s, e.t, e.empirical, e.standard_error, e.analytic, e.finite_n);
    return run.finish({{"n", r.n}}, r.verdicts);
  }
  if (kind == "le-scaling") {
    const auto& s = cfg.le_scaling;
    const auto r = run_le_scaling(s.x, s.p, s.n_ladder, cfg.bounds());
    auto csv = run.csv("le_scaling.csv", {"n", "deviation"});
    for (const auto& [n, d] : r.deviations) csv.row(n, d);
    Json results = {{"degenerate", r.degenerate}};
    if (r.fit) {
      results["slope"] = r.fit->slope;
      results["intercept"] = r.fit->intercept;
      results["r_squared"] = r.fit->r_squared;
    }
    return run.finish(results, r.verdicts);
  }
  if (kind == "concentration") {
    const auto& s = cfg.concentration;
    const double power = s.eps_exponent;
    const auto r = run_concentration(
        s.n_ladder, [power](std::size_t n) { return std::pow(static_cast<double>(n), -power); }, cfg.bounds(),
        s.replicas, RandomSeed{cfg.seed, 0}, opt.workers);
    auto csv = run.csv("concentration.csv",
                       {"n", "eps", "probability", "standard_error", "beta_union_bound", "printed_union_bound"});
    for (const auto& row : r.rows) {
      csv.row(row.n, row.eps, row.probability, row.standard_error, row.beta_union_bound, row.printed_union_bound);
    }
    return run.finish(Json::object(), r.verdicts);
  }
  throw ConfigError("verify: unknown kind '" + kind + "' (known: lln, clt, bridge, le-scaling, concentration)");
}

namespace detail {

inline MonotoneProfile make_profile(const ProfileSpec& p, const BoundaryParams& bounds) {
  if (p.cells < 1) throw ConfigError("ldp.profile.cells must be positive");
  if (p.kind == "linear") return MonotoneProfile::linear(bounds, p.cells);
  if (p.kind == "power") {
    if (!(p.exponent > 0.0)) throw ConfigError("ldp.profile.exponent must be positive");
    std::vector<double> u(p.cells + 1);
    for (std::size_t j = 0; j <= p.cells; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(p.cells);
      u[j] = bounds.left() + bounds.width() * std::pow(t, p.exponent);
    }
    u.back() = bounds.right();
    return MonotoneProfile::from_values(bounds, u);
  }
  throw ConfigError("ldp.profile.kind: unknown kind '" + p.kind + "' (known: linear, power)");
}

inline void write_profile(Run& run, const std::string& name, const MonotoneProfile& u) {
  auto csv = run.csv(name, {"x", "u"});
  const auto values = u.values();
  for (std::size_t j = 0; j < values.size(); ++j) {
    csv.row(static_cast<double>(j) / static_cast<double>(u.cells()), values[j]);
  }
}

inline Json optima_json(const std::vector<LocalOptimum>& optima) {
  Json arr = Json::array();
  for (const auto& o : optima) {
    arr.push_back({{"value", o.value},
                   {"start_value", o.start_value},
                   {"iterations", o.iterations},
                   {"stationarity", o.stationarity},
                   {"converged", o.converged}});
  }
  return arr;
}

}  // namespace detail

inline CommandOutcome cmd_ldp(const std::string& task, const AppConfig& cfg, const RunOptions& opt) {
  detail::Run run("ldp " + task, cfg, opt);
  const auto& l = cfg.ldp;
  const auto spec = make_free_energy_spec(l);
  SolverConfig solver = l.solver;
  solver.workers = opt.workers;

  if (task == "free-energy") {
    auto csv = run.csv("free_energy.csv", {"lambda", "free_energy"});
    std::vector<double> f;
    for (double lambda : l.lambda_grid) {
      f.push_back(free_energy(l.theta, lambda, spec));
      csv.row(lambda, f.back());
    }
    // Convexity on the (possibly uneven) grid via divided differences.
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < f.size(); ++j) {
      const double left = (f[j] - f[j - 1]) / (l.lambda_grid[j] - l.lambda_grid[j - 1]);
      const double right = (f[j + 1] - f[j]) / (l.lambda_grid[j + 1] - l.lambda_grid[j]);
      worst = std::min(worst, right - left);
    }
    return run.finish({{"theta", l.theta}}, {{"free energy convex in lambda", worst >= -1e-9, worst, 0.0, -1e-9,
                                              "smallest slope increment on the grid"}});
  }
  if (task == "rate") {
    auto csv = run.csv("rate.csv", {"x", "rate"});
    double worst = 0.0;
    for (double x : l.x_grid) {
      const double v = rate_function_I(l.theta, x, spec);
      worst = std::min(worst, v);
      csv.row(x, v);
    }
    return run.finish({{"theta", l.theta}},
                      {{"rate function non-negative", worst >= -1e-12, worst, 0.0, -1e-12, "smallest value"}});
  }
  const BoundaryParams bounds(l.theta_left, l.theta_right);
  if (task == "path-rate") {
    const auto u = detail::make_profile(l.profile, bounds);
    const double j = path_rate_J(u);
    detail::write_profile(run, "profile.csv", u);
    return run.finish({{"path_rate", j}}, {});
  }
  if (task == "annealed") {
    const auto phi = make_test_function(l.phi);
    const auto r = annealed_free_energy(phi, spec, bounds, solver);
    const double benchmark = inhom_free_energy(MonotoneProfile::linear(bounds, solver.grid_cells), phi, spec,
                                               QuadratureSpec{1, solver.nodes_per_cell});
    detail::write_profile(run, "argmax_profile.csv", r.argopt);
    return run.finish({{"value", r.value},
                       {"path_rate_at_argmax", path_rate_J(r.argopt)},
                       {"linear_profile_value", benchmark},
                       {"local_optima", detail::optima_json(r.local_optima)}},
                      {{"value not below the linear-profile benchmark", r.value >= benchmark - 1e-10,
                        r.value - benchmark, 0.0, -1e-10, "value minus benchmark"}});
  }
  if (task == "profile-rate") {
    const auto mu = make_target_density(l.mu, spec.g, bounds, cfg.quadrature);
    const auto r = profile_rate(mu, spec, bounds, solver);
    detail::write_profile(run, "argmin_profile.csv", r.argopt);
    return run.finish({{"value", r.value},
                       {"path_rate_at_argmin", path_rate_J(r.argopt)},
                       {"local_optima", detail::optima_json(r.local_optima)}},
                      {{"rate non-negative", r.value >= -1e-10, r.value, 0.0, -1e-10, ""}});
  }
  throw ConfigError("ldp: unknown task '" + task +
                    "' (known: free-energy, rate, path-rate, annealed, profile-rate)");
}

/// Maps exceptions to the documented exit codes.
template <class Fn>
int run_guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn().exit_code;
  } catch (const OptimizationError& e) {
    err << "error: " << e.what() << "\n" << e.diagnostics() << '\n';
    return kExitNumericError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumericError;
  } catch (const QuadratureError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumericError;
  } catch (const ContractError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace ness
