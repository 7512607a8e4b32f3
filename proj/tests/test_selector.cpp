#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "eivreg/selector.hpp"

using namespace eivreg;

namespace {

Dataset
make_sample(std::size_t n, double sigma, NoiseKind kind, std::uint64_t seed, double (*f)(double))
{
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto noise = make_noise(kind, sigma);
  Engine noise_eng = make_engine(seed, 7);
  const auto eps = sample_noise(noise, n, noise_eng);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = normal(eng);
    d.y.push_back(f(x) + 0.2 * normal(eng));
    d.z.push_back(x + eps[i]);
  }
  return d;
}

double
sine(double x)
{
  return std::sin(std::numbers::pi * x);
}

std::vector<ModelIndex>
models_1_to(int k)
{
  std::vector<ModelIndex> out;
  for (int m = 1; m <= k; ++m)
    out.push_back(make_model(m, 1.0));
  return out;
}

// noise-free projection estimator coded from scratch: coefficients
// n^{-1} sum_i phi_{m,j}(Z_i) (weighted by Y_i for ell) over |j| <= k
std::vector<double>
direct_coeffs(const Dataset& d, double D, std::int64_t k, bool weighted)
{
  std::vector<double> c(static_cast<std::size_t>(2 * k + 1), 0.0);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double w = weighted ? d.y[i] : 1.0;
    const double u = D * d.z[i];
    const double s = std::sin(std::numbers::pi * u);
    for (std::int64_t j = -k; j <= k; ++j) {
      const double t = u - static_cast<double>(j);
      // sin(pi (u - j)) = (-1)^j sin(pi u)
      const double val = t == 0.0 ? 1.0 : ((j % 2 == 0) ? s : -s) / (std::numbers::pi * t);
      c[static_cast<std::size_t>(j + k)] += w * std::sqrt(D) * val;
    }
  }
  for (auto& v : c)
    v /= static_cast<double>(d.n());
  return c;
}

double
direct_sum_squares(const std::vector<double>& c)
{
  double acc = 0.0;
  for (double v : c)
    acc += v * v;
  return acc;
}

int
direct_select(const std::vector<double>& totals)
{
  int best = 0;
  for (int i = 1; i < static_cast<int>(totals.size()); ++i)
    if (totals[static_cast<std::size_t>(i)] < totals[static_cast<std::size_t>(best)])
      best = i;
  return best + 1;
}

} // namespace

TEST(SelectModel, PicksMinimumTotal)
{
  // totals [-0.8, -0.6] select m = 1
  const auto sel = select_model({ -1.0, -1.5 }, { 0.2, 0.9 }, models_1_to(2));
  EXPECT_EQ(sel.m_hat.m, 1);
  EXPECT_DOUBLE_EQ(sel.rows[0].total, -0.8);
  EXPECT_DOUBLE_EQ(sel.rows[1].total, -0.6);
  EXPECT_TRUE(sel.rows[0].selected);
  EXPECT_FALSE(sel.rows[1].selected);
}

TEST(SelectModel, DecreasingContrastsWithoutPenaltyPickLargest)
{
  const auto sel = select_model({ -1.0, -2.0, -3.0, -4.0 }, { 0.0, 0.0, 0.0, 0.0 }, models_1_to(4));
  EXPECT_EQ(sel.m_hat.m, 4);
}

TEST(SelectModel, TiesGoToSmallestModel)
{
  const auto sel = select_model({ -1.0, -1.5, -2.0 }, { 1.0, 1.5, 2.0 }, models_1_to(3));
  EXPECT_EQ(sel.m_hat.m, 1);
}

TEST(SelectModel, RejectsBadInput)
{
  EXPECT_THROW(select_model({}, {}, std::vector<ModelIndex>{}), std::invalid_argument);
  EXPECT_THROW(select_model({ 1.0 }, { 0.0, 1.0 }, models_1_to(2)), std::invalid_argument);
  EXPECT_THROW(select_model({ NAN, 1.0 }, { 0.0, 1.0 }, models_1_to(2)), std::invalid_argument);
}

TEST(SelectModel, AgreesWithExhaustiveScanAndShiftInvariant)
{
  std::mt19937_64 eng(42);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_int_distribution<int> level(-20, 20);
  for (int rep = 0; rep < 500; ++rep) {
    const int k = len(eng);
    std::vector<double> c(static_cast<std::size_t>(k));
    std::vector<double> p(static_cast<std::size_t>(k));
    std::vector<double> totals(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      // quarter-integer values keep sums exact so that ties really occur
      c[static_cast<std::size_t>(i)] = level(eng) / 4.0;
      p[static_cast<std::size_t>(i)] = std::abs(level(eng)) / 4.0;
      totals[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)] + p[static_cast<std::size_t>(i)];
    }
    const auto sel = select_model(c, p, models_1_to(k));
    EXPECT_EQ(sel.m_hat.m, direct_select(totals));
    auto shifted = c;
    for (auto& v : shifted)
      v += 7.25;
    EXPECT_EQ(select_model(shifted, p, models_1_to(k)).m_hat.m, sel.m_hat.m);
  }
}

TEST(Trim, Examples)
{
  EXPECT_DOUBLE_EQ(trimmed_ratio(2.0, 1.0, 10.0), 2.0);
  EXPECT_DOUBLE_EQ(trimmed_ratio(5.0, 0.1, 10.0), 10.0);
  EXPECT_DOUBLE_EQ(trimmed_ratio(-5.0, 0.1, 10.0), -10.0);
  EXPECT_DOUBLE_EQ(trimmed_ratio(3.0, 0.0, 10.0), 10.0);
  EXPECT_DOUBLE_EQ(trimmed_ratio(-3.0, 0.0, 10.0), -10.0);
  EXPECT_DOUBLE_EQ(trimmed_ratio(0.0, 0.0, 10.0), 0.0);
  EXPECT_DOUBLE_EQ(trimmed_ratio(1.0, -0.5, 10.0), -2.0);
}

TEST(KnBounds, DefaultsAndEnforcement)
{
  EstimatorConfig cfg;
  EXPECT_EQ(resolve_kn(400, cfg, false), 400);
  EXPECT_EQ(resolve_kn(400, cfg, true), 8000);
  cfg.k_n = 100;
  EXPECT_THROW(resolve_kn(400, cfg, false), std::invalid_argument);
  cfg.practical_kn = true;
  EXPECT_EQ(resolve_kn(400, cfg, false), 100);
}

TEST(FitDensity, NoiseFreeEqualsDirectProjection)
{
  const auto data = make_sample(300, 0.0, NoiseKind::none, 1, sine);
  const auto noise = make_noise(NoiseKind::none);
  EstimatorConfig cfg;
  cfg.dim_step = 0.5;
  cfg.max_dim = 6.0;
  const auto fit = fit_density(data, noise, cfg);
  const std::size_t n = data.n();
  ASSERT_EQ(fit.fits.size(), 12u);
  std::vector<double> totals;
  for (int m = 1; m <= 12; ++m) {
    const double D = 0.5 * m;
    const auto direct = direct_coeffs(data, D, static_cast<std::int64_t>(n), false);
    const auto dense = fit.fits[static_cast<std::size_t>(m - 1)].coeffs.dense();
    ASSERT_EQ(dense.size(), direct.size());
    for (std::size_t j = 0; j < dense.size(); ++j)
      ASSERT_NEAR(dense[j], direct[j], 1e-9 * std::max(1.0, std::abs(direct[j])));
    // lambda1 = 1, mu1 = 0, Gamma~ = D for sigma = 0
    const double pen = 2.0 * D / static_cast<double>(n);
    const double contrast = -direct_sum_squares(direct);
    EXPECT_NEAR(fit.selection.rows[static_cast<std::size_t>(m - 1)].contrast, contrast, 1e-9);
    EXPECT_NEAR(fit.selection.rows[static_cast<std::size_t>(m - 1)].penalty, pen, 1e-15);
    totals.push_back(contrast + pen);
  }
  EXPECT_EQ(fit.selection.m_hat.m, direct_select(totals));
}

TEST(FitDensity, LaplaceStructure)
{
  const auto data = make_sample(2000, 0.5, NoiseKind::laplace, 2, sine);
  const auto noise = make_noise(NoiseKind::laplace, 0.5);
  EstimatorConfig cfg;
  cfg.dim_step = 0.25;
  const auto fit = fit_density(data, noise, cfg);
  const auto set = model_set(2000, noise, CollectionPurpose::density_only, 0.25);
  ASSERT_EQ(fit.selection.rows.size(), set.models.size());
  EXPECT_TRUE(std::any_of(set.models.begin(), set.models.end(),
                          [&](const ModelIndex& i) { return i.m == fit.selection.m_hat.m; }));
  EXPECT_LE(fit.selection.m_hat.dim, set.dim_bound + 1e-12);
  int selected = 0;
  for (const auto& r : fit.selection.rows) {
    EXPECT_DOUBLE_EQ(r.total, r.contrast + r.penalty);
    selected += r.selected ? 1 : 0;
  }
  EXPECT_EQ(selected, 1);
  EXPECT_TRUE(fit.warnings.empty());
}

TEST(FitDensity, DuplicatedDataKeepsContrastsAndHalvesPenalties)
{
  const auto data = make_sample(600, 0.5, NoiseKind::laplace, 3, sine);
  Dataset twice = data;
  twice.z.insert(twice.z.end(), data.z.begin(), data.z.end());
  twice.y.insert(twice.y.end(), data.y.begin(), data.y.end());
  const auto noise = make_noise(NoiseKind::laplace, 0.5);
  EstimatorConfig cfg;
  cfg.dim_step = 0.25;
  cfg.k_n = 1200;
  const auto a = fit_density(data, noise, cfg);
  const auto b = fit_density(twice, noise, cfg);
  ASSERT_LE(a.selection.rows.size(), b.selection.rows.size());
  for (std::size_t i = 0; i < a.selection.rows.size(); ++i) {
    EXPECT_NEAR(b.selection.rows[i].contrast, a.selection.rows[i].contrast,
                1e-10 * std::abs(a.selection.rows[i].contrast));
    EXPECT_NEAR(b.selection.rows[i].penalty, 0.5 * a.selection.rows[i].penalty, 1e-15);
  }
  EXPECT_GE(b.selection.m_hat.m, a.selection.m_hat.m);
}

TEST(FitEll, ZeroResponse)
{
  auto data = make_sample(300, 0.5, NoiseKind::laplace, 4, sine);
  std::fill(data.y.begin(), data.y.end(), 0.0);
  const auto fit = fit_ell(data, make_noise(NoiseKind::laplace, 0.5), EstimatorConfig{});
  for (const auto& r : fit.selection.rows)
    EXPECT_EQ(r.contrast, 0.0);
  EXPECT_EQ(fit.selection.m_hat.m, 1);
  for (double v : reconstruct(fit.selected(), EvalRegion{}.grid()))
    EXPECT_EQ(v, 0.0);
}

TEST(FitEll, UnitResponseMatchesDensity)
{
  auto data = make_sample(400, 0.3, NoiseKind::gaussian, 5, sine);
  std::fill(data.y.begin(), data.y.end(), 1.0);
  const auto noise = make_noise(NoiseKind::gaussian, 0.3);
  EstimatorConfig cfg;
  cfg.dim_step = 0.5;
  const auto ell = fit_ell(data, noise, cfg);
  const auto g = fit_density(data, noise, cfg);
  const std::size_t common = std::min(ell.fits.size(), g.fits.size());
  ASSERT_GT(common, 0u);
  for (std::size_t i = 0; i < common; ++i) {
    const auto& a = ell.fits[i].coeffs;
    const auto& b = g.fits[i].coeffs;
    for (std::int64_t j = -a.k_n; j <= a.k_n; j += 7)
      ASSERT_NEAR(a[j], b[j], 1e-12);
    // pen_ell / pen_g = kappa' (lambda1 + mu2) 2 / (kappa (lambda1 + mu1))
    const double ratio = 2.0 * (lambda1(noise) + mu2(noise)) / (lambda1(noise) + mu1(noise));
    EXPECT_NEAR(ell.selection.rows[i].penalty / g.selection.rows[i].penalty, ratio, 1e-12);
  }
}

TEST(FitEll, ScalingResponse)
{
  const auto data = make_sample(400, 0.5, NoiseKind::laplace, 6, sine);
  Dataset scaled = data;
  const double c = 3.0;
  for (auto& v : scaled.y)
    v *= c;
  const auto noise = make_noise(NoiseKind::laplace, 0.5);
  EstimatorConfig cfg;
  cfg.dim_step = 0.25;
  const auto a = fit_ell(data, noise, cfg);
  const auto b = fit_ell(scaled, noise, cfg);
  ASSERT_EQ(a.selection.rows.size(), b.selection.rows.size());
  const double m2a = m2y(data.y);
  const double m2b = m2y(scaled.y);
  EXPECT_NEAR(m2b, c * c * m2a, 1e-12 * m2b);
  for (std::size_t i = 0; i < a.selection.rows.size(); ++i) {
    EXPECT_NEAR(b.selection.rows[i].contrast, c * c * a.selection.rows[i].contrast,
                1e-10 * std::abs(b.selection.rows[i].contrast));
    EXPECT_NEAR(b.selection.rows[i].penalty / a.selection.rows[i].penalty, (1.0 + m2b) / (1.0 + m2a), 1e-12);
  }
}

TEST(FitRegression, ConstantFunctionNoiseFree)
{
  const double c = 3.0;
  std::mt19937_64 eng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  for (int i = 0; i < 5000; ++i) {
    data.z.push_back(normal(eng));
    data.y.push_back(c);
  }
  EstimatorConfig cfg;
  const auto fit = fit_regression(data, make_noise(NoiseKind::none), cfg);
  double sup = 0.0;
  for (double v : fit.f_tilde)
    sup = std::max(sup, std::abs(v - c));
  EXPECT_LT(sup, 0.05);
}

TEST(FitRegression, TrimAndBookkeeping)
{
  const auto data = make_sample(500, 0.5, NoiseKind::laplace, 8, sine);
  EstimatorConfig cfg;
  cfg.dim_step = 0.25;
  cfg.trim_exponent = 0.1;
  const auto fit = fit_regression(data, make_noise(NoiseKind::laplace, 0.5), cfg);
  EXPECT_NEAR(fit.a_n, std::pow(500.0, 0.1), 1e-12);
  EXPECT_EQ(fit.k_n, 11181);
  for (double v : fit.f_tilde)
    EXPECT_LE(std::abs(v), fit.a_n);
  for (const auto* rows : { &fit.diagnostics_g, &fit.diagnostics_ell })
    for (const auto& r : *rows)
      EXPECT_EQ(r.total, r.contrast + r.penalty);
  EXPECT_LE(fit.m_hat_g.dim, std::pow(500.0 / std::log(500.0), 1.0 / 6.0) + 1e-12);
  ASSERT_EQ(fit.grid.size(), 201u);
  EXPECT_EQ(fit.grid.front(), -2.0);
  EXPECT_EQ(fit.grid.back(), 2.0);
}

TEST(FitRegression, NoiseFreePipelineMatchesDirect)
{
  const auto data = make_sample(200, 0.0, NoiseKind::none, 9, sine);
  EstimatorConfig cfg;
  cfg.max_dim = 20.0;
  const auto fit = fit_regression(data, make_noise(NoiseKind::none), cfg);
  const std::size_t n = data.n();
  const auto k = static_cast<std::int64_t>(std::ceil(std::pow(200.0, 1.5)));
  ASSERT_EQ(fit.k_n, k);
  const double m2 = m2y(data.y);
  const double cap = std::sqrt(200.0 / std::log(200.0));
  std::vector<double> tg;
  std::vector<double> tl;
  for (int m = 1; m <= 20; ++m) {
    const double D = m;
    const auto cl = direct_coeffs(data, D, k, true);
    tl.push_back(-direct_sum_squares(cl) + 2.0 * (1.0 + m2) * D / static_cast<double>(n));
    if (D <= cap) {
      const auto cg = direct_coeffs(data, D, k, false);
      tg.push_back(-direct_sum_squares(cg) + 2.0 * D / static_cast<double>(n));
    }
  }
  EXPECT_EQ(fit.m_hat_g.m, direct_select(tg));
  EXPECT_EQ(fit.m_hat_ell.m, direct_select(tl));
  ASSERT_EQ(fit.diagnostics_g.size(), tg.size());
  ASSERT_EQ(fit.diagnostics_ell.size(), tl.size());
  for (std::size_t i = 0; i < tg.size(); ++i)
    EXPECT_NEAR(fit.diagnostics_g[i].total, tg[i], 1e-9);
  for (std::size_t i = 0; i < tl.size(); ++i)
    EXPECT_NEAR(fit.diagnostics_ell[i].total, tl[i], 1e-9);
  const auto cg = direct_coeffs(data, fit.m_hat_g.dim, k, false);
  const auto dense = fit.g.selected().dense();
  for (std::size_t j = 0; j < dense.size(); ++j)
    ASSERT_NEAR(dense[j], cg[j], 1e-9 * std::max(1.0, std::abs(cg[j])));
}
