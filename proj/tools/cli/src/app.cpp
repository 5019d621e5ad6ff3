#include "nelcorr_cli/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>

#include <CLI11.hpp>

#include "nelcorr/bell.hpp"
#include "nelcorr/correlators.hpp"
#include "nelcorr/error.hpp"
#include "nelcorr/nelson_sde.hpp"
#include "nelcorr_cli/config.hpp"
#include "nelcorr_cli/io.hpp"

namespace nelcorr::cli {

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string format;
  std::string dump_paths;
  std::size_t cluster = 0;
};

struct Context {
  std::string command;
  Flags flags;
  RunConfig config;
  std::ostream& out;
  std::ostream& err;
  std::optional<std::uint64_t> seed_used;

  std::optional<std::string> out_path() const {
    if (!flags.out.empty()) return flags.out;
    return config.output_path;
  }
  OutputFormat format(OutputFormat fallback) const { return config.format.value_or(fallback); }

  // Data goes to the output file, or to `out` when no path is configured.
  void emit(const std::string& data) const {
    if (auto p = out_path()) {
      write_file(*p, data);
    } else {
      out << data;
    }
  }
  // Sidecar next to the data file: results.csv -> results.<tag>.json.  Without
  // a data file the sidecar goes to `err`.
  void sidecar(const std::string& tag, const ojson& j) const {
    if (auto p = out_path()) {
      std::filesystem::path path(*p);
      path.replace_extension("." + tag + ".json");
      write_file(path.string(), dump(j));
    } else {
      err << dump(j);
    }
  }
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_run_metadata(const Context& ctx, double elapsed) {
  if (!ctx.out_path()) return;
  ojson j;
  j["command"] = ctx.command;
  j["config"] = ctx.flags.config;
  j["output"] = *ctx.out_path();
  if (ctx.seed_used) j["seed"] = *ctx.seed_used;
  j["threads"] = ctx.flags.threads;
  j["timestamp"] = utc_timestamp();
  j["elapsed_seconds"] = elapsed;
  ctx.sidecar("run", j);
}

std::uint64_t resolve_seed(Context& ctx) {
  if (ctx.flags.seed) ctx.config.mc.seed = ctx.flags.seed;
  required(ctx.config, {Need::mc_seed});
  ctx.seed_used = *ctx.config.mc.seed;
  return *ctx.config.mc.seed;
}

McParams mc_params(Context& ctx) {
  return {ctx.config.mc.n_paths, ctx.config.mc.dt, resolve_seed(ctx), ctx.flags.threads};
}

void cmd_qm_corr(Context& ctx) {
  required(ctx.config, {Need::state, Need::observables, Need::lags});
  const auto state = build_state(ctx.config);
  const auto qm = qm_two_time_series(state, *ctx.config.f, *ctx.config.g, ctx.config.lags);
  if (ctx.format(OutputFormat::csv) == OutputFormat::json) {
    ojson j = to_json(qm.series);
    j["components"] = to_json(qm.components);
    ctx.emit(dump(j));
  } else {
    ctx.emit(series_csv(qm.series));
  }
}

void cmd_compare(Context& ctx) {
  required(ctx.config, {Need::state, Need::observables, Need::lags});
  const auto state = build_state(ctx.config);
  const auto c = compare_theories(state, *ctx.config.f, *ctx.config.g, ctx.config.lags);
  if (!c.nelson) ctx.err << "warning: nelson column omitted: " << c.nelson_unavailable << "\n";
  ctx.emit(ctx.format(OutputFormat::csv) == OutputFormat::json ? dump(comparison_to_json(c)) : comparison_csv(c));
  ctx.sidecar("summary", comparison_summary(c));
}

// Lags as whole step counts of dt; the ensemble records every gcd steps.
std::vector<std::size_t> lag_steps(const RunConfig& cfg) {
  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i < cfg.lags.size(); ++i) {
    const std::string where = "lags[" + std::to_string(i) + "]";
    const double lag = cfg.lags[i];
    if (lag < 0.0) throw ConfigError(where, "Monte Carlo lags must be non-negative");
    const double r = lag / cfg.mc.dt;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-6 * std::max(1.0, k)) throw ConfigError(where, "must be a multiple of mc.dt");
    steps.push_back(static_cast<std::size_t>(k));
  }
  return steps;
}

void cmd_nelson_mc(Context& ctx) {
  required(ctx.config, {Need::state, Need::observables, Need::lags});
  const auto params = mc_params(ctx);
  const auto steps = lag_steps(ctx.config);
  std::size_t every = 0;
  for (std::size_t k : steps) every = std::gcd(every, k);
  if (every == 0) every = 1;
  std::size_t horizon_steps = std::max(*std::max_element(steps.begin(), steps.end()), every);
  if (ctx.config.mc.horizon) {
    const auto h = static_cast<std::size_t>(std::ceil(*ctx.config.mc.horizon / params.dt / every - 1e-9)) * every;
    horizon_steps = std::max(horizon_steps, h);
  }
  const double dt = params.dt;
  const auto state = build_state(ctx.config);
  const auto e = run_nelson_mc(state, ctx.config.mc.epsilon, params, static_cast<double>(horizon_steps) * dt,
                               static_cast<double>(every) * dt);

  CorrelationSeries s;
  s.method = Method::nelson_mc;
  s.stderr_values.emplace();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double t = e.t_grid[e.time_index(static_cast<double>(steps[i]) * dt)];
    const auto est = estimate_two_time(e, *ctx.config.f, *ctx.config.g, t, 0.0);
    s.lags.push_back(ctx.config.lags[i]);
    s.values.push_back(est.value);
    s.stderr_values->push_back(est.stderr_value);
  }
  ctx.emit(ctx.format(OutputFormat::csv) == OutputFormat::json ? dump(to_json(s)) : series_csv(s));

  ojson ks = ojson::array();
  double worst = 0.0;
  for (double t : e.t_grid) {
    const auto d = stationarity_distance(e, state, t);
    worst = std::max(worst, *std::max_element(d.begin(), d.end()));
    ks.push_back({{"t", t}, {"ks", d}});
  }
  ojson diag;
  diag["n_paths"] = e.n_paths;
  diag["dt"] = e.dt;
  diag["epsilon"] = e.epsilon;
  diag["seed"] = e.seed;
  diag["ks_stats"] = std::move(ks);
  diag["ks_band_95"] = 1.36 / std::sqrt(static_cast<double>(e.n_paths));
  diag["ks_max"] = worst;
  diag["clamp_rate"] = e.clamp_rate;
  diag["sign_change_fraction"] = e.sign_change_fraction;
  ctx.sidecar("diagnostics", diag);

  if (!ctx.flags.dump_paths.empty()) write_file(ctx.flags.dump_paths, paths_dump(e));
}

void cmd_eps_study(Context& ctx) {
  required(ctx.config, {Need::state, Need::observables, Need::lags, Need::epsilons});
  if (ctx.config.lags.size() != 1) throw ConfigError("lags", "eps-study takes exactly one lag");
  const auto params = mc_params(ctx);
  lag_steps(ctx.config);
  const auto state = build_state(ctx.config);
  const auto rows = epsilon_convergence_study(state, *ctx.config.f, *ctx.config.g, ctx.config.lags[0],
                                              ctx.config.mc.epsilons, params);
  ctx.emit(ctx.format(OutputFormat::csv) == OutputFormat::json ? dump(to_json(rows)) : epsilon_csv(rows));
}

std::string verdict(const ChshReport& r) {
  char buf[96];
  const bool violates = std::abs(r.S) > 2.0 && !r.classical_feasible;
  std::snprintf(buf, sizeof buf, "%s: S = %.3f, classical %s", violates ? "VIOLATES" : "NO VIOLATION", r.S,
                r.classical_feasible ? "feasible" : "infeasible");
  return buf;
}

void cmd_chsh(Context& ctx) {
  auto& cfg = ctx.config;
  if (cfg.clusters.empty()) throw ConfigError("clusters", "missing required field");
  if (cfg.chsh.cluster >= cfg.clusters.size()) throw ConfigError("chsh.cluster", "no such cluster");
  const ClusterSpec& spec = cfg.clusters[cfg.chsh.cluster];
  const Observable f = cfg.chsh.observable.value_or(Observable::sign(cfg.chsh.cluster));

  std::vector<ChshReport> reports;
  if (cfg.chsh.barrier_sweep.empty()) {
    reports.push_back(chsh_report(build_cluster(spec), f, cfg.chsh.times));
  } else {
    const auto* dw = std::get_if<DoubleWell>(&spec.potential.kind());
    if (!dw) throw ConfigError("chsh.barrier_sweep", "needs a double_well cluster");
    for (double h : cfg.chsh.barrier_sweep) {
      ClusterSpec s = spec;
      s.potential = Potential::double_well(h, dw->well_separation);
      reports.push_back(chsh_report(build_cluster(s), f, cfg.chsh.times));
    }
  }

  if (ctx.format(OutputFormat::json) == OutputFormat::csv) {
    ctx.emit(chsh_csv(reports));
  } else if (reports.size() == 1) {
    ctx.emit(dump(to_json(reports[0])));
  } else {
    ojson a = ojson::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      ojson r = to_json(reports[i]);
      r["barrier_height"] = cfg.chsh.barrier_sweep[i];
      a.push_back(std::move(r));
    }
    ctx.emit(dump(ojson{{"reports", std::move(a)}}));
  }
  // The verdict shares stdout with the data only when no file is written.
  std::ostream& line = ctx.out_path() ? ctx.out : ctx.err;
  for (const auto& r : reports) line << verdict(r) << "\n";
}

void cmd_eigen(Context& ctx) {
  auto& cfg = ctx.config;
  if (cfg.clusters.empty()) throw ConfigError("clusters", "missing required field");
  if (ctx.flags.cluster >= cfg.clusters.size()) throw ConfigError("--cluster", "no such cluster");
  const auto es = build_cluster(cfg.clusters[ctx.flags.cluster]);
  if (ctx.format(OutputFormat::csv) == OutputFormat::json) {
    ctx.emit(dump(to_json(es)));
  } else {
    ctx.emit(eigen_csv(es));
    ojson j = to_json(es);
    j.erase("psi");
    ctx.sidecar("summary", j);
  }
}

int dispatch(Context& ctx, const std::function<void(Context&)>& body) {
  try {
    if (!ctx.flags.config.empty()) ctx.config = load_config(ctx.flags.config);
    if (ctx.flags.format == "csv") ctx.config.format = OutputFormat::csv;
    if (ctx.flags.format == "json") ctx.config.format = OutputFormat::json;
    const auto start = std::chrono::steady_clock::now();
    body(ctx);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    write_run_metadata(ctx, elapsed.count());
    return kOk;
  } catch (const ConfigError& e) {
    ctx.err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const StepSizeError& e) {
    ctx.err << "diagnostics threshold: " << e.what() << "\n"
            << "hint: reduce mc.dt or increase mc.epsilon\n";
    return kDiagnostics;
  } catch (const EnvelopeError& e) {
    ctx.err << "diagnostics threshold: " << e.what() << "\n"
            << "hint: widen or shrink the cluster grids so the density fills them\n";
    return kDiagnostics;
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << "\n";
    return kBackend;
  } catch (const std::exception& e) {
    ctx.err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-time correlations under quantum, Bohm and Nelson dynamics"};
  app.require_subcommand(1);
  Flags flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"qm-corr", "QM two-time correlation series"},
      {"compare", "QM, Bohm and Nelson spectral series side by side"},
      {"nelson-mc", "Monte Carlo estimate of the Nelson correlation"},
      {"chsh", "CHSH report for a two-level cluster"},
      {"eps-study", "Monte Carlo convergence in the regularization width"},
      {"eigen", "Eigenfunctions of one cluster"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "data file (stdout when absent)");
    sub->add_option("--format", flags.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    if (name == "nelson-mc" || name == "eps-study") {
      sub->add_option("--seed", flags.seed, "overrides mc.seed");
      sub->add_option("--threads", flags.threads, "worker threads (results do not depend on it)")
          ->check(CLI::PositiveNumber);
    }
    if (name == "nelson-mc") sub->add_option("--dump-paths", flags.dump_paths, "raw path file, one path per line");
    if (name == "eigen") sub->add_option("--cluster", flags.cluster, "cluster index");
  }

  std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "usage error: " << e.what() << "\n" << app.help();
    return kConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  static const std::map<std::string, void (*)(Context&)> table = {
      {"qm-corr", cmd_qm_corr}, {"compare", cmd_compare},     {"nelson-mc", cmd_nelson_mc},
      {"chsh", cmd_chsh},       {"eps-study", cmd_eps_study}, {"eigen", cmd_eigen},
  };
  Context ctx{name, flags, {}, out, err, std::nullopt};
  return dispatch(ctx, table.at(name));
}

}  // namespace nelcorr::cli
