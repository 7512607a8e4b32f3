#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eivreg/deconv_core.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/penalties.hpp"
#include "eivreg/shannon_basis.hpp"

namespace eivreg {

//! Evaluation set A = [lo, hi] sampled at `points` equally spaced values.
struct EvalRegion
{
  double lo = -2.0;
  double hi = 2.0;
  std::size_t points = 201;

  std::vector<double> grid() const
  {
    std::vector<double> out(points);
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
      out[i] = lo + h * static_cast<double>(i);
    out.back() = hi;
    return out;
  }
};

struct EstimatorConfig
{
  //! Coefficient truncation |j| <= k_n. Defaults to n for density and ell
  //! fits and to ceil(n^{3/2}) for the regression estimate.
  std::optional<std::int64_t> k_n;
  //! Accept an explicit k_n below those lower bounds.
  bool practical_kn = false;
  QuadratureSpec quad;
  //! Penalty constants; the noise model passed to the fit functions wins over params.noise.
  PenaltyParams params;
  //! a_n = n^{trim_exponent}.
  double trim_exponent = 1.0;
  //! D_m = m * dim_step.
  double dim_step = 1.0;
  //! Models with D_m above this value are not fitted.
  double max_dim = 64.0;
  EvalRegion eval_region;
};

inline void
validate(const EstimatorConfig& cfg)
{
  if (cfg.k_n && *cfg.k_n < 1)
    throw std::invalid_argument("k_n must be >= 1");
  validate(cfg.quad);
  if (!(cfg.params.kappa > 0.0) || !(cfg.params.kappa_prime > 0.0))
    throw std::invalid_argument("kappa and kappa_prime must be positive");
  if (!(cfg.trim_exponent > 0.0) || !std::isfinite(cfg.trim_exponent))
    throw std::invalid_argument("trim_exponent must be positive");
  if (!(cfg.dim_step > 0.0) || !std::isfinite(cfg.dim_step))
    throw std::invalid_argument("dim_step must be positive");
  if (!(cfg.max_dim >= cfg.dim_step))
    throw std::invalid_argument("max_dim must be >= dim_step");
  if (!(cfg.eval_region.lo < cfg.eval_region.hi))
    throw std::invalid_argument("evaluation region needs lo < hi");
  if (cfg.eval_region.points < 2)
    throw std::invalid_argument("evaluation region needs at least 2 points");
}

//! Lower bound on k_n: n, or ceil(n^{3/2}) for the regression estimate.
inline std::int64_t
minimal_kn(std::size_t n, bool regression)
{
  const double nn = static_cast<double>(n);
  return regression ? static_cast<std::int64_t>(std::ceil(nn * std::sqrt(nn)))
                    : static_cast<std::int64_t>(n);
}

inline std::int64_t
resolve_kn(std::size_t n, const EstimatorConfig& cfg, bool regression)
{
  const std::int64_t floor_kn = minimal_kn(n, regression);
  if (!cfg.k_n)
    return floor_kn;
  if (*cfg.k_n < floor_kn && !cfg.practical_kn)
    throw std::invalid_argument("k_n = " + std::to_string(*cfg.k_n) + " is below the required " +
                                std::to_string(floor_kn) +
                                " (set the practical k_n switch to allow it)");
  return *cfg.k_n;
}

//! a_n = n^{trim_exponent}.
inline double
trim_level(std::size_t n, double trim_exponent)
{
  return std::pow(static_cast<double>(n), trim_exponent);
}

struct DiagnosticsRow
{
  int m = 0;
  double dim = 0.0;
  double contrast = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  bool selected = false;
};

struct Selection
{
  ModelIndex m_hat;
  std::vector<DiagnosticsRow> rows;
};

//! argmin over the collection of contrast + penalty; ties go to the smallest m.
inline Selection
select_model(const std::vector<double>& contrasts,
             const std::vector<double>& pens,
             const std::vector<ModelIndex>& models)
{
  if (models.empty())
    throw std::invalid_argument("select_model: empty model collection");
  if (contrasts.size() != models.size() || pens.size() != models.size())
    throw std::invalid_argument("select_model: arrays not aligned with the models");
  Selection out;
  out.rows.resize(models.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (!std::isfinite(contrasts[i]) || !std::isfinite(pens[i]))
      throw std::invalid_argument("select_model: non-finite contrast or penalty at m=" +
                                  std::to_string(models[i].m));
    if (i > 0 && !(models[i].m > models[i - 1].m))
      throw std::invalid_argument("select_model: models must be strictly increasing in m");
    auto& row = out.rows[i];
    row.m = models[i].m;
    row.dim = models[i].dim;
    row.contrast = contrasts[i];
    row.penalty = pens[i];
    row.total = contrasts[i] + pens[i];
    if (row.total < out.rows[best].total)
      best = i;
  }
  out.rows[best].selected = true;
  out.m_hat = models[best];
  return out;
}

inline Selection
select_model(const std::vector<double>& contrasts,
             const std::vector<double>& pens,
             const ModelCollection& models)
{
  return select_model(contrasts, pens, models.models);
}

//! Outcome of fitting one target (g or ell) over its model collection.
struct ComponentFit
{
  ModelCollection collection;
  //! One fit per model that could be computed, in increasing m.
  std::vector<EmpiricalFit> fits;
  Selection selection;
  std::vector<std::string> warnings;

  const CoeffVector& selected() const
  {
    for (const auto& f : fits)
      if (f.model.m == selection.m_hat.m)
        return f.coeffs;
    throw std::logic_error("selected model has no fit");
  }
};

namespace detail {

inline bool
contains(const ModelCollection& c, int m)
{
  return std::any_of(c.models.begin(), c.models.end(), [m](const ModelIndex& i) { return i.m == m; });
}

//! Fits every model of the union of the g and ell collections once, sharing
//! the empirical characteristic function between both targets. Models whose
//! computation fails are skipped with a warning.
inline void
sweep_models(const Dataset& data,
             const NoiseModel& noise,
             std::int64_t k_n,
             const QuadratureSpec& quad,
             ComponentFit* g,
             ComponentFit* ell)
{
  std::vector<ModelIndex> all;
  if (g)
    all = g->collection.models;
  if (ell)
    for (const auto& idx : ell->collection.models)
      if (!g || !contains(g->collection, idx.m))
        all.push_back(idx);
  std::sort(all.begin(), all.end(), [](const ModelIndex& a, const ModelIndex& b) { return a.m < b.m; });
  for (const auto& idx : all) {
    const bool want_g = g && contains(g->collection, idx.m);
    const bool want_ell = ell && contains(ell->collection, idx.m);
    try {
      auto fits = estimate_model(data, noise, idx, k_n, quad, want_g, want_ell);
      if (want_g)
        g->fits.push_back(std::move(*fits.g));
      if (want_ell)
        ell->fits.push_back(std::move(*fits.ell));
    } catch (const model_error& e) {
      const std::string msg = "model m=" + std::to_string(idx.m) + " dropped: " + e.what();
      if (want_g)
        g->warnings.push_back(msg);
      if (want_ell)
        ell->warnings.push_back(msg);
    } catch (const numeric_error& e) {
      const std::string msg = "model m=" + std::to_string(idx.m) + " dropped: " + e.what();
      if (want_g)
        g->warnings.push_back(msg);
      if (want_ell)
        ell->warnings.push_back(msg);
    }
  }
}

template<class PenFn>
inline void
select_component(ComponentFit& fit, const char* target, PenFn pen)
{
  std::vector<double> contrasts;
  std::vector<double> pens;
  std::vector<ModelIndex> models;
  std::vector<EmpiricalFit> kept;
  for (auto& f : fit.fits) {
    try {
      const double p = pen(f.model);
      contrasts.push_back(contrast_value(f.coeffs));
      pens.push_back(p);
      models.push_back(f.model);
      kept.push_back(std::move(f));
    } catch (const model_error& e) {
      fit.warnings.push_back("model m=" + std::to_string(f.model.m) + " dropped: " + e.what());
    }
  }
  fit.fits = std::move(kept);
  if (models.empty())
    throw numeric_error(std::string("no model of the ") + target + " collection could be fitted");
  fit.selection = select_model(contrasts, pens, models);
}

inline ComponentFit
empty_component(std::size_t n, const NoiseModel& noise, CollectionPurpose purpose, const EstimatorConfig& cfg)
{
  ComponentFit out;
  out.collection = model_set(n, noise, purpose, cfg.dim_step, cfg.max_dim);
  if (out.collection.forced_minimum)
    out.warnings.push_back("no model meets the dimension bound " + std::to_string(out.collection.dim_bound) +
                           "; using the smallest model");
  return out;
}

inline PenaltyParams
penalty_params(const NoiseModel& noise, const EstimatorConfig& cfg)
{
  PenaltyParams p = cfg.params;
  p.noise = noise;
  return p;
}

} // namespace detail

//! Adaptive density estimate g~ = g_hat at the selected model.
inline ComponentFit
fit_density(const Dataset& data,
            const NoiseModel& noise,
            const EstimatorConfig& cfg,
            CollectionPurpose purpose = CollectionPurpose::density_only)
{
  validate(cfg);
  validate(noise);
  validate(data, false);
  const std::size_t n = data.n();
  const auto k_n = resolve_kn(n, cfg, purpose == CollectionPurpose::density_for_regression);
  const auto params = detail::penalty_params(noise, cfg);
  ComponentFit g = detail::empty_component(n, noise, purpose, cfg);
  detail::sweep_models(data, noise, k_n, cfg.quad, &g, nullptr);
  detail::select_component(g, "density", [&](const ModelIndex& idx) { return pen_g(idx, n, params); });
  return g;
}

//! Adaptive estimate ell~ of ell = f g at the selected model.
inline ComponentFit
fit_ell(const Dataset& data, const NoiseModel& noise, const EstimatorConfig& cfg)
{
  validate(cfg);
  validate(noise);
  validate(data, true);
  const std::size_t n = data.n();
  const auto k_n = resolve_kn(n, cfg, false);
  const auto params = detail::penalty_params(noise, cfg);
  const double m2 = m2y(data.y);
  ComponentFit ell = detail::empty_component(n, noise, CollectionPurpose::ell_only, cfg);
  detail::sweep_models(data, noise, k_n, cfg.quad, nullptr, &ell);
  detail::select_component(ell, "ell", [&](const ModelIndex& idx) { return pen_ell(idx, n, params, m2); });
  return ell;
}

//! sign(r) min(|r|, a_n) for r = num / den; den = 0 gives sign(num) a_n, 0/0 gives 0.
inline double
trimmed_ratio(double num, double den, double a_n)
{
  if (num == 0.0)
    return 0.0;
  if (den == 0.0)
    return std::copysign(a_n, num);
  const double r = num / den;
  return std::copysign(std::min(std::abs(r), a_n), r);
}

//! f~ = (ell~ / g~)^{(a_n)} on the evaluation grid.
inline std::vector<double>
regression_estimate(const std::vector<double>& ell_values, const std::vector<double>& g_values, double a_n)
{
  if (ell_values.size() != g_values.size())
    throw std::invalid_argument("regression_estimate: grids differ in size");
  std::vector<double> out(ell_values.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = trimmed_ratio(ell_values[i], g_values[i], a_n);
  return out;
}

inline std::vector<double>
regression_estimate(const CoeffVector& ell_c, const CoeffVector& g_c, const EstimatorConfig& cfg, std::size_t n)
{
  const auto grid = cfg.eval_region.grid();
  return regression_estimate(reconstruct(ell_c, grid), reconstruct(g_c, grid),
                             trim_level(n, cfg.trim_exponent));
}

struct FitResult
{
  ModelIndex m_hat_g;
  ModelIndex m_hat_ell;
  std::vector<DiagnosticsRow> diagnostics_g;
  std::vector<DiagnosticsRow> diagnostics_ell;
  std::vector<double> grid;
  std::vector<double> g_tilde;
  std::vector<double> ell_tilde;
  std::vector<double> f_tilde;
  double a_n = 0.0;
  std::int64_t k_n = 0;
  std::vector<std::string> warnings;
  ComponentFit g;
  ComponentFit ell;
};

//! Full pipeline: g~ over the regression-capped collection, ell~, and the
//! trimmed ratio on the evaluation region.
inline FitResult
fit_regression(const Dataset& data, const NoiseModel& noise, const EstimatorConfig& cfg)
{
  validate(cfg);
  validate(noise);
  validate(data, true);
  const std::size_t n = data.n();
  FitResult out;
  out.k_n = resolve_kn(n, cfg, true);
  const auto params = detail::penalty_params(noise, cfg);
  const double m2 = m2y(data.y);
  out.g = detail::empty_component(n, noise, CollectionPurpose::density_for_regression, cfg);
  out.ell = detail::empty_component(n, noise, CollectionPurpose::ell_only, cfg);
  detail::sweep_models(data, noise, out.k_n, cfg.quad, &out.g, &out.ell);
  detail::select_component(out.g, "density", [&](const ModelIndex& idx) { return pen_g(idx, n, params); });
  detail::select_component(out.ell, "ell", [&](const ModelIndex& idx) { return pen_ell(idx, n, params, m2); });

  out.m_hat_g = out.g.selection.m_hat;
  out.m_hat_ell = out.ell.selection.m_hat;
  out.diagnostics_g = out.g.selection.rows;
  out.diagnostics_ell = out.ell.selection.rows;
  out.grid = cfg.eval_region.grid();
  out.g_tilde = reconstruct(out.g.selected(), out.grid);
  out.ell_tilde = reconstruct(out.ell.selected(), out.grid);
  out.a_n = trim_level(n, cfg.trim_exponent);
  out.f_tilde = regression_estimate(out.ell_tilde, out.g_tilde, out.a_n);
  for (const auto& w : out.g.warnings)
    out.warnings.push_back("density: " + w);
  for (const auto& w : out.ell.warnings)
    out.warnings.push_back("ell: " + w);
  return out;
}

} // namespace eivreg
