#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "eivreg/eivreg.hpp"

using namespace eivreg;

namespace {

Scenario
small_scenario(std::size_t n)
{
  Scenario s;
  s.f = RegressionFn::sine;
  s.g = DesignKind::normal;
  s.noise = make_noise(NoiseKind::laplace, 0.5);
  s.n = n;
  return s;
}

EstimatorConfig
fast_config()
{
  EstimatorConfig cfg;
  cfg.max_dim = 6;
  cfg.params.kappa = 1.0;
  cfg.params.kappa_prime = 0.5;
  return cfg;
}

EmpiricalFit
density_fit(const Scenario& s, int m, std::int64_t k, std::uint64_t seed)
{
  const auto data = generate(s, seed).observed();
  auto fits = estimate_model(data, s.noise, make_model(m), k, QuadratureSpec{}, true, false);
  return *fits.g;
}

} // namespace

TEST(Ise, TrapezoidOfLinearSquare)
{
  std::vector<double> grid;
  std::vector<double> est;
  for (int i = 0; i <= 1000; ++i) {
    grid.push_back(i / 1000.0);
    est.push_back(i / 1000.0);
  }
  const std::vector<double> zero(grid.size(), 0.0);
  // trapezoid of x^2 on [0, 1] with h = 1e-3: 1/3 + h^2/6
  EXPECT_NEAR(ise(est, zero, grid), 1.0 / 3.0 + 1e-6 / 6.0, 1e-13);
  EXPECT_DOUBLE_EQ(ise(est, est, grid), 0.0);
}

TEST(Ise, RejectsBadGrids)
{
  EXPECT_THROW(ise({ 1.0, 2.0 }, { 1.0 }, { 0.0, 1.0 }), std::invalid_argument);
  EXPECT_THROW(ise({ 1.0 }, { 1.0 }, { 0.0 }), std::invalid_argument);
  EXPECT_THROW(ise({ 1.0, 2.0 }, { 1.0, 2.0 }, { 1.0, 0.0 }), std::invalid_argument);
}

TEST(OracleTail, MatchesDirectProjectionFarOut)
{
  // Laplace density: psi^*(t) = 1 / (1 + t^2), coefficients decay like 1/j
  const FourierFn psi = [](double t) { return std::complex<double>(1.0 / (1.0 + t * t), 0.0); };
  for (int m : { 1, 3 }) {
    const auto idx = make_model(m);
    const std::int64_t k = 400;
    const auto a = project_oracle(psi, idx, k, 1e-13);
    const auto tail = oracle_tail(psi, idx, 200, 10.0);
    for (std::int64_t j : { 200, 201, 317, 400, -200, -201, -399 }) {
      EXPECT_NEAR(tail.value(j), a[j], 1e-6 * std::abs(a[j]) + 1e-13) << "m=" << m << " j=" << j;
    }
  }
}

TEST(Truncated, SlicesDenseCoefficients)
{
  const auto s = small_scenario(200);
  const auto fit = density_fit(s, 2, 200, 3);
  const auto full = fit.coeffs.dense();
  for (std::int64_t k : { std::int64_t{ 0 }, std::int64_t{ 5 }, fit.coeffs.core_radius() - 1,
                          fit.coeffs.core_radius() + 7, std::int64_t{ 200 } }) {
    const auto t = truncated(fit.coeffs, k);
    EXPECT_EQ(t.k_n, k);
    for (std::int64_t j = -k; j <= k; ++j)
      EXPECT_DOUBLE_EQ(t[j], full[static_cast<std::size_t>(j + 200)]);
  }
  EXPECT_THROW(truncated(fit.coeffs, 201), std::invalid_argument);
}

TEST(CoefficientIse, TailPathMatchesExplicitProjection)
{
  const auto s = small_scenario(300);
  const auto oracle = fourier_oracle(s);
  const double norm2 = l2_norm_squared(oracle.g_star);
  for (int m : { 1, 2, 4 }) {
    const auto fit = density_fit(s, m, 300, 11);
    ASSERT_FALSE(fit.coeffs.tail.empty());
    const double via_tail = coefficient_ise(fit, fit.coeffs, oracle.g_star, norm2);
    const auto dense = make_coeffs(fit.model, fit.coeffs.dense());
    const double via_dense = coefficient_ise(fit, dense, oracle.g_star, norm2);
    EXPECT_NEAR(via_tail, via_dense, 1e-7 * via_dense + 1e-10) << "m=" << m;
  }
}

TEST(CoefficientIse, LargeRadiusMatchesFullProjection)
{
  const auto s = small_scenario(300);
  const auto oracle = fourier_oracle(s);
  const double norm2 = l2_norm_squared(oracle.g_star);
  const std::int64_t k = 5000;
  for (int m : { 1, 8 }) {
    const auto fit = density_fit(s, m, k, 13);
    const auto dense = make_coeffs(fit.model, fit.coeffs.dense());
    ASSERT_GT(dense.core_radius(), oracle_explicit_radius(fit.model.dim));
    const auto a = project_oracle(oracle.g_star, fit.model, k, 1e-11);
    double cross = 0.0;
    for (std::int64_t j = -k; j <= k; ++j)
      cross += dense[j] * a[j];
    const double direct = sum_squares(dense) - 2.0 * cross + norm2;
    EXPECT_NEAR(coefficient_ise(fit, dense, oracle.g_star, norm2), direct, 1e-9 * direct) << "m=" << m;
  }
}

TEST(CoefficientIse, MatchesWideGridTrapezoid)
{
  const auto s = small_scenario(300);
  const auto oracle = fourier_oracle(s);
  const double norm2 = l2_norm_squared(oracle.g_star);
  const auto fit = density_fit(s, 2, 300, 5);
  const auto c = truncated(fit.coeffs, 60);
  const double exact = coefficient_ise(fit, c, oracle.g_star, norm2);

  std::vector<double> grid;
  for (int i = 0; i <= 24000; ++i)
    grid.push_back(-120.0 + i * 0.01);
  const auto est = reconstruct(c, grid);
  const auto truth = true_curves(s, grid).g;
  const double approx = ise(est, truth, grid);
  EXPECT_NEAR(approx, exact, 0.02 * exact);
}

TEST(CoefficientIse, ZeroForExactProjection)
{
  const auto s = small_scenario(300);
  const auto oracle = fourier_oracle(s);
  const double norm2 = l2_norm_squared(oracle.g_star);
  const auto fit = density_fit(s, 3, 40, 5);
  const auto a = project_oracle(oracle.g_star, fit.model, 40);
  // the risk of the projection is the projection bias
  const double risk = coefficient_ise(fit, a, oracle.g_star, norm2);
  EXPECT_NEAR(risk, projection_bias(oracle.g_star, fit.model), 1e-9);
}

TEST(RateSlope, RecoversPowerLaws)
{
  std::vector<std::pair<double, double>> pts;
  for (double n : { 500.0, 2000.0, 8000.0 })
    pts.emplace_back(n, 3.0 / n);
  const auto fit = rate_slope(pts);
  EXPECT_NEAR(fit.slope, -1.0, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 3.0, 1e-10);
  EXPECT_NEAR(fit.residual, 0.0, 1e-12);

  pts.clear();
  for (double n : { 100.0, 400.0, 1600.0, 6400.0 })
    pts.emplace_back(n, std::pow(n, -2.0 / 7.0));
  EXPECT_NEAR(rate_slope(pts).slope, -2.0 / 7.0, 1e-12);
}

TEST(RateSlope, NeedsThreeDistinctSizes)
{
  EXPECT_THROW(rate_slope(std::vector<std::pair<double, double>>{ { 100, 1 }, { 100, 2 }, { 200, 1 } }),
               std::invalid_argument);
  EXPECT_THROW(rate_slope(std::vector<std::pair<double, double>>{ { 100, 1 }, { 200, 0 }, { 300, 1 } }),
               std::invalid_argument);
}

TEST(MeanAndSe, SampleFormula)
{
  const auto [m, se] = mean_and_se({ 1.0, 2.0, 3.0, 4.0 });
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

TEST(Benchmark, DeterministicForFixedSeed)
{
  const auto s = small_scenario(200);
  const auto cfg = fast_config();
  const auto a = run_benchmark(s, cfg, 3, 42);
  const auto b = run_benchmark(s, cfg, 3, 42);
  ASSERT_EQ(a.outcomes.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(a.outcomes[r].seed, 42u + r);
    EXPECT_EQ(a.outcomes[r].ise_g, b.outcomes[r].ise_g);
    EXPECT_EQ(a.outcomes[r].ise_ell, b.outcomes[r].ise_ell);
    EXPECT_EQ(a.outcomes[r].ise_f, b.outcomes[r].ise_f);
  }
}

TEST(Benchmark, ReportStructure)
{
  const auto s = small_scenario(200);
  const auto cfg = fast_config();
  const auto b = run_benchmark(s, cfg, 4, 7);
  const auto coll = model_set(200, s.noise, CollectionPurpose::density_only, cfg.dim_step, cfg.max_dim);
  const auto rep = summarize(b, RateTarget::density_fit);
  EXPECT_EQ(rep.failures, 0u);
  ASSERT_EQ(rep.oracle.size(), coll.models.size());
  for (std::size_t i = 0; i < coll.models.size(); ++i) {
    EXPECT_EQ(rep.oracle[i].m, coll.models[i].m);
    EXPECT_EQ(rep.oracle[i].count, 4u);
  }
  // the adaptive risk of each replication is one of its fixed-model risks
  for (const auto& o : b.outcomes) {
    bool found = false;
    for (std::size_t i = 0; i < o.models_g.size(); ++i)
      found = found || (o.models_g[i].m == o.m_hat_g && o.fixed_g[i] == o.ise_g);
    EXPECT_TRUE(found);
    EXPECT_LE(o.sup_f, o.a_n);
  }
  EXPECT_TRUE(summarize(b, RateTarget::regression).oracle.empty());
}

TEST(Benchmark, StandardErrorShrinksWithReplications)
{
  const auto s = small_scenario(150);
  const auto cfg = fast_config();
  const auto few = mise(s, cfg, RateTarget::ell_fit, 8, 100);
  const auto many = mise(s, cfg, RateTarget::ell_fit, 32, 100);
  ASSERT_GT(few.se, 0.0);
  const double ratio = few.se / many.se;
  EXPECT_GT(ratio, 1.2);
  EXPECT_LT(ratio, 4.0);
}

TEST(Benchmark, RejectsSingleReplication)
{
  EXPECT_THROW(run_benchmark(small_scenario(100), fast_config(), 1, 0), std::invalid_argument);
}
