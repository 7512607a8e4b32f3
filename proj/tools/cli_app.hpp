#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "eivreg/csv.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/riskbench.hpp"
#include "eivreg/selector.hpp"
#include "eivreg/simlab.hpp"
#include "eivreg/version.hpp"
#include "scenario_io.hpp"

namespace eivreg::cli {

enum exit_code : int
{
  exit_ok = 0,
  exit_usage = 2,
  exit_numeric = 3,
  exit_threshold = 4
};

//! Numeric failure tagged with the pipeline stage it happened in.
class stage_error : public std::runtime_error
{
public:
  stage_error(const std::string& stage, const std::string& what)
    : std::runtime_error("numeric failure in stage '" + stage + "': " + what)
  {
  }
};

//! Benchmark gate failure; the artifacts are written before it is raised.
class gate_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

template<class F>
auto
in_stage(const std::string& stage, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const numeric_error& e) {
    throw stage_error(stage, e.what());
  }
}

//! Fully resolved invocation; serialized as the run manifest.
struct Options
{
  std::string subcommand;
  std::string data_path;
  std::string scenario_path;
  std::string scenario_name;
  std::optional<Scenario> scenario;
  std::optional<std::string> noise_kind;
  std::optional<double> sigma;
  NoiseModel noise;
  EstimatorConfig cfg;
  std::uint64_t seed = 1;
  std::size_t reps = 50;
  std::vector<std::size_t> n_list;
  std::vector<double> kappa_grid;
  std::vector<double> kappa_prime_grid;
  bool gate = false;
  std::string out = "out";
};

inline EvalRegion
parse_grid(const std::string& text)
{
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':'))
    parts.push_back(item);
  if (parts.size() != 3)
    throw std::invalid_argument("--grid expects lo:hi:points, got '" + text + "'");
  EvalRegion r;
  r.lo = parse_double(parts[0]);
  r.hi = parse_double(parts[1]);
  const double pts = parse_double(parts[2]);
  if (!(pts >= 2.0) || pts != std::floor(pts))
    throw std::invalid_argument("--grid: points must be an integer >= 2");
  r.points = static_cast<std::size_t>(pts);
  return r;
}

inline json
manifest_json(const Options& o, const std::vector<std::string>& outputs, const json& results)
{
  json inputs = json::object();
  if (!o.data_path.empty())
    inputs["data"] = o.data_path;
  if (o.scenario) {
    inputs["scenario_path"] = o.scenario_path;
    inputs["scenario"] = scenario_to_json(*o.scenario, o.scenario_name);
  }
  json config = config_to_json(o.cfg);
  config["noise"] = noise_to_json(o.noise);
  json m = { { "subcommand", o.subcommand },
             { "library_version", library_version },
             { "seed", o.seed },
             { "reps", o.reps },
             { "n_list", o.n_list },
             { "kappa_grid", o.kappa_grid },
             { "kappa_prime_grid", o.kappa_prime_grid },
             { "gate", o.gate },
             { "inputs", inputs },
             { "config", config },
             { "out", o.out },
             { "outputs", outputs } };
  if (!results.is_null())
    m["results"] = results;
  return m;
}

inline Options
options_from_manifest(const json& m)
{
  Options o;
  o.subcommand = detail::required<std::string>(m, "subcommand", "manifest");
  o.seed = detail::required<std::uint64_t>(m, "seed", "manifest");
  o.reps = detail::required<std::size_t>(m, "reps", "manifest");
  o.n_list = detail::required<std::vector<std::size_t>>(m, "n_list", "manifest");
  o.kappa_grid = detail::required<std::vector<double>>(m, "kappa_grid", "manifest");
  o.kappa_prime_grid = detail::required<std::vector<double>>(m, "kappa_prime_grid", "manifest");
  o.gate = detail::required<bool>(m, "gate", "manifest");
  o.out = detail::required<std::string>(m, "out", "manifest");
  const auto& in = m.at("inputs");
  if (in.contains("data"))
    o.data_path = in.at("data").get<std::string>();
  if (in.contains("scenario")) {
    o.scenario_path = in.value("scenario_path", std::string());
    o.scenario = scenario_from_json(in.at("scenario"), &o.scenario_name);
  }
  json config = m.at("config");
  o.noise = noise_from_json(config.at("noise"));
  config.erase("noise");
  o.cfg = config_from_json(config);
  return o;
}

inline void
write_manifest(const Options& o, const std::vector<std::string>& outputs, const json& results = nullptr)
{
  write_text_atomic(std::filesystem::path(o.out) / "manifest.json",
                    manifest_json(o, outputs, results).dump(2) + "\n");
}

inline CsvTable
diagnostics_table(const std::vector<DiagnosticsRow>& rows)
{
  CsvTable t;
  t.header = { "m", "dim", "contrast", "penalty", "total", "selected" };
  for (const auto& r : rows)
    t.rows.push_back({ std::to_string(r.m), format_double(r.dim), format_double(r.contrast),
                       format_double(r.penalty), format_double(r.total), r.selected ? "1" : "0" });
  return t;
}

//! Reads a y,z data file; any other header is rejected.
inline Dataset
read_yz(const std::string& path)
{
  const auto t = read_csv(path);
  if (t.header != std::vector<std::string>{ "y", "z" })
    throw csv_error("header must be exactly 'y,z'", 1);
  Dataset d;
  d.y = numeric_column(t, "y");
  d.z = numeric_column(t, "z");
  if (d.z.empty())
    throw csv_error("no data rows", 2);
  return d;
}

inline int
cmd_estimate(const Options& o, std::ostream& out)
{
  const Dataset data = read_yz(o.data_path);
  const auto fit = in_stage("fit_regression", [&] { return fit_regression(data, o.noise, o.cfg); });
  const std::filesystem::path dir(o.out);
  write_csv(dir / "diagnostics_g.csv", diagnostics_table(fit.diagnostics_g));
  write_csv(dir / "diagnostics_ell.csv", diagnostics_table(fit.diagnostics_ell));
  CsvTable est;
  est.header = { "x", "g_tilde", "ell_tilde", "f_tilde" };
  for (std::size_t i = 0; i < fit.grid.size(); ++i)
    est.rows.push_back({ format_double(fit.grid[i]), format_double(fit.g_tilde[i]),
                         format_double(fit.ell_tilde[i]), format_double(fit.f_tilde[i]) });
  write_csv(dir / "estimates.csv", est);
  const json results = { { "n", data.n() },
                         { "m_hat_g", fit.m_hat_g.m },
                         { "m_hat_ell", fit.m_hat_ell.m },
                         { "k_n", fit.k_n },
                         { "a_n", fit.a_n },
                         { "forced_minimum_g", fit.g.collection.forced_minimum },
                         { "forced_minimum_ell", fit.ell.collection.forced_minimum },
                         { "warnings", fit.warnings } };
  write_manifest(o, { "diagnostics_g.csv", "diagnostics_ell.csv", "estimates.csv" }, results);
  for (const auto& w : fit.warnings)
    out << "warning: " << w << "\n";
  out << "m_hat_g = " << fit.m_hat_g.m << ", m_hat_ell = " << fit.m_hat_ell.m << "\n";
  return exit_ok;
}

inline int
cmd_simulate(const Options& o, std::ostream& out)
{
  const auto sim = in_stage("generate", [&] { return generate(*o.scenario, o.seed); });
  const std::filesystem::path dir(o.out);
  CsvTable data;
  data.header = { "y", "z" };
  CsvTable hidden;
  hidden.header = { "x" };
  for (std::size_t i = 0; i < sim.z.size(); ++i) {
    data.rows.push_back({ format_double(sim.y[i]), format_double(sim.z[i]) });
    hidden.rows.push_back({ format_double(sim.x_hidden[i]) });
  }
  write_csv(dir / "data.csv", data);
  write_csv(dir / "hidden_x.csv", hidden);
  write_manifest(o, { "data.csv", "hidden_x.csv" });
  out << "wrote " << sim.z.size() << " rows\n";
  return exit_ok;
}

inline json
rate_json(const RateDescriptor& r)
{
  return { { "implicit", r.implicit },
           { "n_exponent", r.n_exponent },
           { "log_exponent", r.log_exponent },
           { "formula", r.formula } };
}

inline int
cmd_benchmark(const Options& o, std::ostream& out)
{
  const std::vector<RateTarget> targets = { RateTarget::density_fit, RateTarget::ell_fit, RateTarget::regression };
  std::vector<std::vector<RiskReport>> reports(targets.size());
  for (std::size_t n : o.n_list) {
    Scenario s = *o.scenario;
    s.n = n;
    const auto b = in_stage("benchmark n=" + std::to_string(n), [&] { return run_benchmark(s, o.cfg, o.reps, o.seed); });
    for (std::size_t t = 0; t < targets.size(); ++t)
      reports[t].push_back(summarize(b, targets[t]));
  }

  CsvTable long_table;
  long_table.header = { "scenario", "target", "n", "m_or_adaptive", "mise", "se" };
  json summary = { { "scenario", o.scenario_name },
                   { "n_list", o.n_list },
                   { "reps", o.reps },
                   { "seed", o.seed },
                   { "targets", json::object() } };
  std::vector<std::string> gate_failures;
  std::vector<double> ns(o.n_list.begin(), o.n_list.end());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto tname = to_string(targets[t]);
    json per_n = json::array();
    for (const auto& rep : reports[t]) {
      for (const auto& row : rep.oracle)
        long_table.rows.push_back({ o.scenario_name, tname, std::to_string(rep.n), std::to_string(row.m),
                                    format_double(row.mise), format_double(row.se) });
      long_table.rows.push_back({ o.scenario_name, tname, std::to_string(rep.n), "adaptive",
                                  format_double(rep.mise), format_double(rep.se) });
      json entry = { { "n", rep.n }, { "mise", rep.mise }, { "se", rep.se }, { "failures", rep.failures } };
      if (!rep.oracle.empty())
        entry["oracle_min_mise"] = rep.oracle_min().mise;
      per_n.push_back(entry);
    }
    Scenario s = *o.scenario;
    const auto predicted = predicted_rate(s, targets[t]);
    json tj = { { "predicted_rate", rate_json(predicted) }, { "mise_by_n", per_n } };
    std::optional<double> fitted;
    if (o.n_list.size() < 3) {
      tj["slope_status"] = "insufficient n points";
    } else {
      fitted = rate_slope(reports[t]).slope;
      tj["slope_status"] = "ok";
      tj["fitted_slope"] = *fitted;
    }
    std::optional<double> predicted_slope;
    if (!predicted.implicit && ns.size() >= 2) {
      predicted_slope = predicted.effective_slope(ns);
      tj["predicted_slope"] = *predicted_slope;
    }
    if (o.gate) {
      for (std::size_t i = 1; i < reports[t].size(); ++i)
        if (!(reports[t][i].mise < reports[t][i - 1].mise))
          gate_failures.push_back(tname + ": MISE does not decrease from n=" + std::to_string(reports[t][i - 1].n) +
                                  " to n=" + std::to_string(reports[t][i].n));
      if (targets[t] == RateTarget::density_fit && fitted && predicted_slope &&
          !(*fitted < 0.0 && std::abs(*fitted - *predicted_slope) <= 0.5 * std::abs(*predicted_slope)))
        gate_failures.push_back(tname + ": fitted slope " + format_double(*fitted) + " is not within 50% of " +
                                format_double(*predicted_slope));
    }
    summary["targets"][tname] = tj;
  }
  if (o.gate)
    summary["gate_failures"] = gate_failures;

  const std::filesystem::path dir(o.out);
  write_csv(dir / "benchmark.csv", long_table);
  write_text_atomic(dir / "summary.json", summary.dump(2) + "\n");
  write_manifest(o, { "benchmark.csv", "summary.json" });
  out << "wrote " << long_table.rows.size() << " benchmark rows\n";
  if (!gate_failures.empty()) {
    std::string msg = "benchmark gate failed:";
    for (const auto& f : gate_failures)
      msg += "\n  " + f;
    throw gate_error(msg);
  }
  return exit_ok;
}

struct CalibrationPick
{
  double recommended = 0.0;
  bool flat = false;
};

//! Argmin of the MISE curve; flat when it varies by less than 10% across the grid.
inline CalibrationPick
pick_constant(const std::vector<double>& grid, const std::vector<double>& mise)
{
  CalibrationPick p;
  std::size_t best = 0;
  for (std::size_t i = 1; i < mise.size(); ++i)
    if (mise[i] < mise[best])
      best = i;
  p.recommended = grid[best];
  const double hi = *std::max_element(mise.begin(), mise.end());
  p.flat = grid.size() > 1 && (hi - mise[best]) < 0.1 * mise[best];
  return p;
}

inline int
cmd_calibrate(const Options& o, std::ostream& out, std::ostream& err)
{
  if (o.kappa_grid.empty())
    throw std::invalid_argument("calibrate: kappa grid must not be empty");
  for (double k : o.kappa_grid)
    if (!(k > 0.0))
      throw std::invalid_argument("calibrate: every kappa must be positive");
  for (double k : o.kappa_prime_grid)
    if (!(k > 0.0))
      throw std::invalid_argument("calibrate: every kappa_prime must be positive");

  std::vector<double> values = o.kappa_grid;
  values.insert(values.end(), o.kappa_prime_grid.begin(), o.kappa_prime_grid.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> mise_g(o.kappa_grid.size());
  std::vector<double> se_g(o.kappa_grid.size());
  std::vector<double> mise_ell(o.kappa_prime_grid.size());
  std::vector<double> se_ell(o.kappa_prime_grid.size());
  for (double v : values) {
    EstimatorConfig cfg = o.cfg;
    cfg.params.kappa = v;
    cfg.params.kappa_prime = v;
    // the density selection ignores kappa_prime and the ell selection ignores kappa
    const auto b = in_stage("calibrate kappa=" + format_double(v),
                            [&] { return run_benchmark(*o.scenario, cfg, o.reps, o.seed); });
    for (std::size_t i = 0; i < o.kappa_grid.size(); ++i)
      if (o.kappa_grid[i] == v) {
        const auto r = summarize(b, RateTarget::density_fit);
        mise_g[i] = r.mise;
        se_g[i] = r.se;
      }
    for (std::size_t i = 0; i < o.kappa_prime_grid.size(); ++i)
      if (o.kappa_prime_grid[i] == v) {
        const auto r = summarize(b, RateTarget::ell_fit);
        mise_ell[i] = r.mise;
        se_ell[i] = r.se;
      }
  }

  CsvTable t;
  t.header = { "parameter", "value", "target", "mise", "se" };
  for (std::size_t i = 0; i < o.kappa_grid.size(); ++i)
    t.rows.push_back({ "kappa", format_double(o.kappa_grid[i]), "density_fit", format_double(mise_g[i]),
                       format_double(se_g[i]) });
  for (std::size_t i = 0; i < o.kappa_prime_grid.size(); ++i)
    t.rows.push_back({ "kappa_prime", format_double(o.kappa_prime_grid[i]), "ell_fit", format_double(mise_ell[i]),
                       format_double(se_ell[i]) });

  json summary = json::object();
  auto report = [&](const std::string& name, const std::vector<double>& grid, const std::vector<double>& mise) {
    if (grid.empty())
      return;
    const auto p = pick_constant(grid, mise);
    summary[name] = { { "recommended", p.recommended }, { "flat", p.flat } };
    out << name << ": recommended " << format_double(p.recommended) << "\n";
    if (p.flat) {
      summary[name]["warning"] = "MISE varies by less than 10% across the grid";
      err << "warning: " << name << " MISE curve is flat (less than 10% variation); the choice is weakly identified\n";
    }
  };
  report("kappa", o.kappa_grid, mise_g);
  report("kappa_prime", o.kappa_prime_grid, mise_ell);

  const std::filesystem::path dir(o.out);
  write_csv(dir / "calibration.csv", t);
  write_text_atomic(dir / "calibration.json", summary.dump(2) + "\n");
  write_manifest(o, { "calibration.csv", "calibration.json" });
  return exit_ok;
}

inline int
dispatch(const Options& o, std::ostream& out, std::ostream& err)
{
  if (o.subcommand == "estimate")
    return cmd_estimate(o, out);
  if (o.subcommand == "simulate")
    return cmd_simulate(o, out);
  if (o.subcommand == "benchmark")
    return cmd_benchmark(o, out);
  if (o.subcommand == "calibrate")
    return cmd_calibrate(o, out, err);
  throw std::invalid_argument("unknown subcommand '" + o.subcommand + "'");
}

//! Materializes every default after parsing: noise, scenario, n list and grids.
inline void
resolve(Options& o)
{
  if (!o.data_path.empty())
    o.data_path = std::filesystem::absolute(o.data_path).string();
  if (!o.scenario_path.empty())
    o.scenario_path = std::filesystem::absolute(o.scenario_path).string();
  if (o.subcommand == "estimate") {
    if (!o.noise_kind)
      throw std::invalid_argument("estimate: --noise is required");
    const auto kind = parse_noise_kind(*o.noise_kind);
    if (kind != NoiseKind::none && !o.sigma)
      throw std::invalid_argument("estimate: --sigma is required for noise '" + *o.noise_kind + "'");
    o.noise = make_noise(kind, o.sigma.value_or(0.0));
  } else {
    const auto j = read_json_file(o.scenario_path);
    o.scenario_name = std::filesystem::path(o.scenario_path).stem().string();
    o.scenario = scenario_from_json(j, &o.scenario_name);
    if (o.noise_kind || o.sigma) {
      const auto kind = o.noise_kind ? parse_noise_kind(*o.noise_kind) : o.scenario->noise.kind;
      o.scenario->noise = make_noise(kind, o.sigma.value_or(o.scenario->noise.sigma));
    }
    if (!o.scenario->smoothness)
      o.scenario->smoothness = builtin_smoothness(o.scenario->f, o.scenario->g);
    o.noise = o.scenario->noise;
    if (o.n_list.empty())
      o.n_list = { o.scenario->n };
    if (o.subcommand == "calibrate") {
      if (o.kappa_grid.empty())
        o.kappa_grid = { o.cfg.params.kappa };
      if (o.kappa_prime_grid.empty())
        o.kappa_prime_grid = o.kappa_grid;
    }
  }
  validate(o.noise);
  validate(o.cfg);
  if (o.reps < 2 && (o.subcommand == "benchmark" || o.subcommand == "calibrate"))
    throw std::invalid_argument("--reps must be >= 2");
}

//! Entry point shared by the executable and the tests.
inline int
run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
  CLI::App app{ "Adaptive deconvolution estimators for errors-in-variables regression" };
  app.require_subcommand(1);
  app.set_version_flag("--version", library_version);

  Options o;
  std::optional<std::int64_t> kn;
  std::string grid;
  std::string manifest_path;
  std::string replay_out;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--noise", o.noise_kind, "Noise law: gaussian, laplace, cauchy or none");
    sub->add_option("--sigma", o.sigma, "Noise level sigma");
    sub->add_option("--kappa", o.cfg.params.kappa, "Density penalty constant")->capture_default_str();
    sub->add_option("--kappa-prime", o.cfg.params.kappa_prime, "Response penalty constant")->capture_default_str();
    sub->add_option("--kn", kn, "Coefficient truncation k_n (default: n, or ceil(n^1.5) for the regression)");
    sub->add_flag("--practical-kn", o.cfg.practical_kn, "Allow --kn below the theoretical minimum");
    sub->add_option("--trim-exponent", o.cfg.trim_exponent, "a_n = n^e")->capture_default_str();
    sub->add_option("--dim-step", o.cfg.dim_step, "D_m = m * step")->capture_default_str();
    sub->add_option("--max-dim", o.cfg.max_dim, "Largest fitted D_m")->capture_default_str();
    sub->add_option("--grid", grid, "Evaluation grid lo:hi:points (default -2:2:201)");
    sub->add_option("--seed", o.seed, "Base seed")->capture_default_str();
    sub->add_option("--reps", o.reps, "Monte Carlo replications")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  };

  auto* est = app.add_subcommand("estimate", "Fit g~, ell~ and f~ from a y,z CSV file");
  est->add_option("input", o.data_path, "CSV file with header y,z")->required();
  common(est);

  auto* sim = app.add_subcommand("simulate", "Draw one dataset from a scenario");
  sim->add_option("scenario", o.scenario_path, "Scenario JSON")->required();
  common(sim);

  auto* bench = app.add_subcommand("benchmark", "Monte Carlo MISE, fixed-model table and rate slope");
  bench->add_option("scenario", o.scenario_path, "Scenario JSON")->required();
  bench->add_option("--n", o.n_list, "Sample sizes (comma separated)")->delimiter(',');
  bench->add_flag("--gate", o.gate, "Exit with code 4 when MISE does not decrease or the slope misses");
  common(bench);

  auto* cal = app.add_subcommand("calibrate", "MISE against the penalty constants");
  cal->add_option("scenario", o.scenario_path, "Scenario JSON")->required();
  cal->add_option("--kappa-grid", o.kappa_grid, "kappa values (comma separated)")->delimiter(',');
  cal->add_option("--kappa-prime-grid", o.kappa_prime_grid, "kappa' values (default: the kappa grid)")
    ->delimiter(',');
  common(cal);

  auto* replay = app.add_subcommand("replay-from-manifest", "Re-run the invocation recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out", replay_out, "Output directory (default: the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (replay->parsed()) {
      o = options_from_manifest(read_json_file(manifest_path));
      if (!replay_out.empty())
        o.out = replay_out;
    } else {
      o.subcommand = app.get_subcommands().front()->get_name();
      if (kn)
        o.cfg.k_n = *kn;
      if (!grid.empty())
        o.cfg.eval_region = parse_grid(grid);
      resolve(o);
    }
    return dispatch(o, out, err);
  } catch (const gate_error& e) {
    err << e.what() << "\n";
    return exit_threshold;
  } catch (const stage_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_numeric;
  } catch (const numeric_error& e) {
    err << "error: numeric failure: " << e.what() << "\n";
    return exit_numeric;
  } catch (const csv_error& e) {
    err << "error: malformed CSV: " << e.what() << "\n";
    return exit_usage;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
}

} // namespace eivreg::cli
