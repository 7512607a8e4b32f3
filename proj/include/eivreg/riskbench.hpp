#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eivreg/deconv_core.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/penalties.hpp"
#include "eivreg/selector.hpp"
#include "eivreg/shannon_basis.hpp"
#include "eivreg/simlab.hpp"

namespace eivreg {

//! Trapezoid approximation of int (estimate - truth)^2 over the grid.
inline double
ise(const std::vector<double>& estimate, const std::vector<double>& truth, const std::vector<double>& grid)
{
  if (estimate.size() != grid.size() || truth.size() != grid.size())
    throw std::invalid_argument("ise: estimate, truth and grid must be aligned");
  if (grid.size() < 2)
    throw std::invalid_argument("ise: need at least 2 grid points");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    if (!(h > 0.0))
      throw std::invalid_argument("ise: grid must be strictly increasing");
    const double a = estimate[i] - truth[i];
    const double b = estimate[i + 1] - truth[i + 1];
    acc += 0.5 * h * (a * a + b * b);
  }
  return acc;
}

//! Exact L2(R) distance ||sum_{|j|<=k} c_j phi_{m,j} - psi||^2 for coefficients c
//! (possibly truncated) computed by `fit`, against psi given by its Fourier
//! transform and squared norm: sum c_j^2 - 2 sum c_j a_j + ||psi||^2.
//! Radius up to which oracle projection coefficients are integrated directly.
inline std::int64_t
oracle_explicit_radius(double D)
{
  return std::max<std::int64_t>(2000, 64 * static_cast<std::int64_t>(std::ceil(D)));
}

//! Supplies the projection coefficients a_j, |j| <= k, of the truth on a model.
using OracleProjector = std::function<CoeffVector(const ModelIndex&, std::int64_t)>;

inline double
coefficient_ise(const EmpiricalFit& fit,
                const CoeffVector& c,
                const FourierFn& psi_star,
                double psi_norm2,
                const OracleProjector& project = {})
{
  const double D = fit.model.dim;
  auto projection = [&](std::int64_t k) {
    return project ? project(fit.model, k) : project_oracle(psi_star, fit.model, k, 1e-11);
  };
  double cross = 0.0;
  if (!c.tail.empty() && c.k_n > c.core_radius() && !fit.h.empty()) {
    // sum over all j by Parseval on the quadrature nodes of the fit, minus |j| > k_n
    double full = 0.0;
    for (std::size_t q = 0; q < fit.h.size(); ++q)
      full += fit.nodes.w[q] * (fit.h[q] * std::conj(psi_star(-D * fit.nodes.v[q]))).real();
    full *= D / std::numbers::pi;
    const auto a_tail = oracle_tail(psi_star, fit.model, c.core_radius() + 1, c.tail.scale);
    cross = full - tail_inner(c.tail, a_tail, c.k_n + 1);
  } else {
    // projections by quadrature up to K0, by their expansion in 1/j beyond
    const std::int64_t Jc = std::min(c.core_radius(), c.k_n);
    const std::int64_t K0 = std::min(Jc, oracle_explicit_radius(D));
    const auto a = projection(K0);
    for (std::int64_t j = -K0; j <= K0; ++j)
      cross += c[j] * a[j];
    const bool has_tail = !c.tail.empty() && c.k_n > Jc;
    if (Jc > K0 || has_tail) {
      const auto a_tail = oracle_tail(psi_star, fit.model, K0 + 1, std::max(10.0, 4.0 * D));
      for (std::int64_t j = K0 + 1; j <= Jc; ++j)
        cross += c[j] * a_tail.value(j) + c[-j] * a_tail.value(-j);
      if (has_tail)
        cross += tail_inner(c.tail, a_tail, Jc + 1) - tail_inner(c.tail, a_tail, c.k_n + 1);
    }
  }
  return std::max(0.0, sum_squares(c) - 2.0 * cross + psi_norm2);
}

//! Ground truth of a scenario shared by all replications.
struct ScenarioTruth
{
  FourierOracle oracle;
  double g_norm2 = 0.0;
  double ell_norm2 = 0.0;
  std::vector<double> grid;
  std::vector<double> f_on_grid;
  // oracle projections keyed by (ell, D), shared across replications
  std::shared_ptr<std::map<std::pair<bool, double>, CoeffVector>> projections =
    std::make_shared<std::map<std::pair<bool, double>, CoeffVector>>();

  OracleProjector projector(bool ell) const
  {
    return [this, ell](const ModelIndex& idx, std::int64_t k) {
      auto& slot = (*projections)[{ ell, idx.dim }];
      if (slot.core.empty() || slot.k_n < k)
        slot = project_oracle(ell ? oracle.ell_star : oracle.g_star, idx, k, 1e-11);
      return truncated(slot, k);
    };
  }
};

inline ScenarioTruth
make_truth(const Scenario& s, const EvalRegion& region)
{
  ScenarioTruth t;
  t.oracle = fourier_oracle(s);
  t.g_norm2 = l2_norm_squared(t.oracle.g_star);
  t.ell_norm2 = l2_norm_squared(t.oracle.ell_star);
  t.grid = region.grid();
  t.f_on_grid = true_curves(s, t.grid).f;
  return t;
}

//! Everything measured on one simulated dataset.
struct ReplicationOutcome
{
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  //! Fixed-model risks at k_n for the density and ell fits.
  std::vector<ModelIndex> models_g;
  std::vector<double> fixed_g;
  std::vector<ModelIndex> models_ell;
  std::vector<double> fixed_ell;
  //! Adaptive density and ell estimates.
  int m_hat_g = 0;
  int m_hat_ell = 0;
  double ise_g = 0.0;
  double ise_ell = 0.0;
  //! Regression pipeline (k_n >= n^{3/2}, capped density collection).
  int m_hat_g_reg = 0;
  int m_hat_ell_reg = 0;
  double ise_g_reg = 0.0;
  double ise_ell_reg = 0.0;
  double ise_f = 0.0;
  double sup_f = 0.0;
  double a_n = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

struct ScoredSelection
{
  Selection selection;
  std::size_t index = 0; // position of the selected fit
};

template<class PenFn>
inline ScoredSelection
select_at(const std::vector<EmpiricalFit>& fits,
          std::int64_t k,
          double dim_limit,
          PenFn pen,
          std::vector<std::string>& warnings)
{
  std::vector<double> contrasts;
  std::vector<double> pens;
  std::vector<ModelIndex> models;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (fits[i].model.dim > dim_limit * (1.0 + 1e-12) && !(i == 0 && fits[i].model.m == 1))
      continue;
    try {
      pens.push_back(pen(fits[i].model));
    } catch (const model_error& e) {
      warnings.push_back(e.what());
      continue;
    }
    contrasts.push_back(contrast_value(truncated(fits[i].coeffs, k)));
    models.push_back(fits[i].model);
    where.push_back(i);
  }
  if (models.empty())
    throw numeric_error("no model available for selection");
  ScoredSelection out;
  out.selection = select_model(contrasts, pens, models);
  for (std::size_t i = 0; i < models.size(); ++i)
    if (models[i].m == out.selection.m_hat.m)
      out.index = where[i];
  return out;
}

} // namespace detail

//! Simulates one dataset and scores the fixed-model and adaptive estimators
//! of g and ell and the regression estimate on the evaluation region.
inline ReplicationOutcome
run_replication(const Scenario& s, const EstimatorConfig& cfg, const ScenarioTruth& truth, std::uint64_t seed)
{
  ReplicationOutcome out;
  out.seed = seed;
  const auto sim = generate(s, seed);
  const Dataset data = sim.observed();
  const std::size_t n = data.n();
  const NoiseModel& noise = s.noise;
  const auto k_small = resolve_kn(n, cfg, false);
  const auto k_big = resolve_kn(n, cfg, true);
  const auto params = detail::penalty_params(noise, cfg);
  const double m2 = m2y(data.y);

  ComponentFit g = detail::empty_component(n, noise, CollectionPurpose::density_only, cfg);
  ComponentFit ell = detail::empty_component(n, noise, CollectionPurpose::ell_only, cfg);
  detail::sweep_models(data, noise, std::max(k_small, k_big), cfg.quad, &g, &ell);
  out.warnings = g.warnings;
  out.warnings.insert(out.warnings.end(), ell.warnings.begin(), ell.warnings.end());
  if (g.fits.empty() || ell.fits.empty())
    throw numeric_error("no model could be fitted");

  const auto project_g = truth.projector(false);
  const auto project_ell = truth.projector(true);
  for (const auto& f : g.fits) {
    out.models_g.push_back(f.model);
    out.fixed_g.push_back(
      coefficient_ise(f, truncated(f.coeffs, k_small), truth.oracle.g_star, truth.g_norm2, project_g));
  }
  for (const auto& f : ell.fits) {
    out.models_ell.push_back(f.model);
    out.fixed_ell.push_back(
      coefficient_ise(f, truncated(f.coeffs, k_small), truth.oracle.ell_star, truth.ell_norm2, project_ell));
  }

  const double inf = std::numeric_limits<double>::infinity();
  auto pen_density = [&](const ModelIndex& idx) { return pen_g(idx, n, params); };
  auto pen_response = [&](const ModelIndex& idx) { return pen_ell(idx, n, params, m2); };
  const auto sg = detail::select_at(g.fits, k_small, inf, pen_density, out.warnings);
  const auto sl = detail::select_at(ell.fits, k_small, inf, pen_response, out.warnings);
  out.m_hat_g = sg.selection.m_hat.m;
  out.m_hat_ell = sl.selection.m_hat.m;
  out.ise_g = out.fixed_g[sg.index];
  out.ise_ell = out.fixed_ell[sl.index];

  const double cap = std::min(dimension_bound(n, noise, CollectionPurpose::density_for_regression), cfg.max_dim);
  const auto rg = detail::select_at(g.fits, k_big, cap, pen_density, out.warnings);
  const auto rl = detail::select_at(ell.fits, k_big, inf, pen_response, out.warnings);
  out.m_hat_g_reg = rg.selection.m_hat.m;
  out.m_hat_ell_reg = rl.selection.m_hat.m;
  const auto& fg = g.fits[rg.index];
  const auto& fl = ell.fits[rl.index];
  const auto cg = truncated(fg.coeffs, k_big);
  const auto cl = truncated(fl.coeffs, k_big);
  out.ise_g_reg = coefficient_ise(fg, cg, truth.oracle.g_star, truth.g_norm2, project_g);
  out.ise_ell_reg = coefficient_ise(fl, cl, truth.oracle.ell_star, truth.ell_norm2, project_ell);
  out.a_n = trim_level(n, cfg.trim_exponent);
  const auto f_tilde = regression_estimate(reconstruct(cl, truth.grid), reconstruct(cg, truth.grid), out.a_n);
  out.ise_f = ise(f_tilde, truth.f_on_grid, truth.grid);
  for (double v : f_tilde)
    out.sup_f = std::max(out.sup_f, std::abs(v));
  return out;
}

struct OracleRow
{
  int m = 0;
  double dim = 0.0;
  double mise = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

struct RiskReport
{
  RateTarget target = RateTarget::density_fit;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> ise;
  std::vector<int> selected;
  double mise = 0.0;
  double se = 0.0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  //! Fixed-model risks; empty for the regression target.
  std::vector<OracleRow> oracle;

  const OracleRow& oracle_min() const
  {
    if (oracle.empty())
      throw std::logic_error("risk report has no oracle table");
    return *std::min_element(oracle.begin(), oracle.end(),
                             [](const OracleRow& a, const OracleRow& b) { return a.mise < b.mise; });
  }
};

inline std::pair<double, double>
mean_and_se(const std::vector<double>& v)
{
  if (v.empty())
    return { std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN() };
  double m = 0.0;
  for (double x : v)
    m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2)
    return { m, std::numeric_limits<double>::quiet_NaN() };
  double ss = 0.0;
  for (double x : v)
    ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return { m, sd / std::sqrt(static_cast<double>(v.size())) };
}

//! Replications seed, seed + 1, ..., seed + R - 1 of one scenario.
struct Benchmark
{
  Scenario scenario;
  std::uint64_t seed = 0;
  std::vector<ReplicationOutcome> outcomes;

  std::size_t failures() const
  {
    return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const ReplicationOutcome& o) { return !o.ok; }));
  }
};

//! Runs R replications; failures are recorded, and more than 5% of them fail the run.
inline Benchmark
run_benchmark(const Scenario& s, const EstimatorConfig& cfg, std::size_t R, std::uint64_t seed)
{
  if (R < 2)
    throw std::invalid_argument("benchmark: need at least 2 replications");
  validate(s);
  validate(cfg);
  const auto truth = make_truth(s, cfg.eval_region);
  Benchmark b;
  b.scenario = s;
  b.seed = seed;
  for (std::size_t r = 0; r < R; ++r) {
    const std::uint64_t rs = seed + r;
    try {
      b.outcomes.push_back(run_replication(s, cfg, truth, rs));
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      ReplicationOutcome failed;
      failed.seed = rs;
      failed.ok = false;
      failed.error = e.what();
      b.outcomes.push_back(std::move(failed));
    }
  }
  if (static_cast<double>(b.failures()) > 0.05 * static_cast<double>(R))
    throw numeric_error("benchmark: " + std::to_string(b.failures()) + " of " + std::to_string(R) +
                        " replications failed (more than 5%)");
  return b;
}

//! Monte Carlo summary of one target: MISE, its standard error, and the fixed-model table.
inline RiskReport
summarize(const Benchmark& b, RateTarget target)
{
  RiskReport rep;
  rep.target = target;
  rep.n = b.scenario.n;
  rep.seed = b.seed;
  rep.replications = b.outcomes.size();
  std::vector<std::pair<ModelIndex, std::vector<double>>> table;
  for (const auto& o : b.outcomes) {
    if (!o.ok) {
      ++rep.failures;
      rep.failure_messages.push_back("seed " + std::to_string(o.seed) + ": " + o.error);
      continue;
    }
    rep.seeds.push_back(o.seed);
    switch (target) {
      case RateTarget::density_fit:
        rep.ise.push_back(o.ise_g);
        rep.selected.push_back(o.m_hat_g);
        break;
      case RateTarget::ell_fit:
        rep.ise.push_back(o.ise_ell);
        rep.selected.push_back(o.m_hat_ell);
        break;
      case RateTarget::regression:
        rep.ise.push_back(o.ise_f);
        rep.selected.push_back(o.m_hat_ell_reg);
        break;
    }
    if (target == RateTarget::regression)
      continue;
    const auto& models = target == RateTarget::density_fit ? o.models_g : o.models_ell;
    const auto& risks = target == RateTarget::density_fit ? o.fixed_g : o.fixed_ell;
    for (std::size_t i = 0; i < models.size(); ++i) {
      auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first.m == models[i].m; });
      if (it == table.end()) {
        table.push_back({ models[i], {} });
        it = table.end() - 1;
      }
      it->second.push_back(risks[i]);
    }
  }
  std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) { return a.first.m < b.first.m; });
  std::tie(rep.mise, rep.se) = mean_and_se(rep.ise);
  for (const auto& [idx, v] : table) {
    OracleRow row;
    row.m = idx.m;
    row.dim = idx.dim;
    row.count = v.size();
    std::tie(row.mise, row.se) = mean_and_se(v);
    rep.oracle.push_back(row);
  }
  return rep;
}

inline RiskReport
mise(const Scenario& s, const EstimatorConfig& cfg, RateTarget target, std::size_t R, std::uint64_t seed)
{
  return summarize(run_benchmark(s, cfg, R, seed), target);
}

inline std::vector<OracleRow>
oracle_curve(const Scenario& s, const EstimatorConfig& cfg, RateTarget target, std::size_t R, std::uint64_t seed)
{
  if (target == RateTarget::regression)
    throw std::invalid_argument("oracle_curve: fixed-model risks exist for the density and ell fits only");
  return mise(s, cfg, target, R, seed).oracle;
}

struct SlopeFit
{
  double slope = 0.0;
  double intercept = 0.0;
  //! Root mean square residual of the log-log fit.
  double residual = 0.0;
};

//! Least-squares fit of log(MISE) on log(n).
inline SlopeFit
rate_slope(const std::vector<std::pair<double, double>>& points)
{
  std::vector<double> ns;
  for (const auto& p : points) {
    if (!(p.first > 0.0) || !(p.second > 0.0))
      throw std::invalid_argument("rate_slope: n and MISE must be positive");
    if (std::find(ns.begin(), ns.end(), p.first) == ns.end())
      ns.push_back(p.first);
  }
  if (ns.size() < 3)
    throw std::invalid_argument("rate_slope: need at least 3 distinct sample sizes");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& p : points) {
    mx += std::log(p.first);
    my += std::log(p.second);
  }
  const double k = static_cast<double>(points.size());
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.first) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.second) - my);
  }
  SlopeFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rss = 0.0;
  for (const auto& p : points) {
    const double r = std::log(p.second) - (out.intercept + out.slope * std::log(p.first));
    rss += r * r;
  }
  out.residual = std::sqrt(rss / k);
  return out;
}

inline SlopeFit
rate_slope(const std::vector<RiskReport>& reports)
{
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : reports)
    pts.emplace_back(static_cast<double>(r.n), r.mise);
  return rate_slope(pts);
}

} // namespace eivreg
