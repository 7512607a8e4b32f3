#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "eivreg/deconv_core.hpp"

using namespace eivreg;

namespace {

const double pi = std::numbers::pi;

// second derivative of sinc(u) = sin(pi u)/(pi u)
double
sinc_dd(double u)
{
  const double a = pi * u;
  if (std::abs(a) < 1e-3)
    return pi * pi * (-1.0 / 3.0 + a * a / 10.0);
  return pi * pi * (-std::sin(a) / a - 2.0 * std::cos(a) / (a * a) + 2.0 * std::sin(a) / (a * a * a));
}

Dataset
make_sample(std::size_t n, double sigma, NoiseKind kind, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const NoiseModel noise = make_noise(kind, sigma);
  const auto eps = sample_noise(noise, n, seed + 1000);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = nd(rng);
    d.z.push_back(x + eps[i]);
    d.y.push_back(std::sin(pi * x) + 0.2 * nd(rng));
  }
  return d;
}

double
max_abs(const std::vector<double>& v)
{
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

} // namespace

TEST(DeconvKernel, NoiseFreeReducesToBasis)
{
  const NoiseModel none = make_noise(NoiseKind::none);
  EXPECT_NEAR(deconv_kernel(none, make_model(1), 0, 0.0), 1.0, 1e-13);
  for (double D : { 0.5, 1.0, 3.0 }) {
    const ModelIndex idx{ 1, D };
    EXPECT_NEAR(deconv_kernel(none, idx, 4, 4.0 / D), std::sqrt(D), 1e-12);
    for (int j : { -7, 0, 2, 15 })
      for (double z : { -2.3, 0.1, 0.9, 5.0 })
        EXPECT_NEAR(deconv_kernel(none, idx, j, z), phi(idx, j, z), 1e-12);
  }
  // a Gaussian law at sigma = 0 is also the identity
  EXPECT_NEAR(deconv_kernel(make_noise(NoiseKind::gaussian, 0.0), make_model(2), 1, 0.3),
              phi(make_model(2), 1, 0.3), 1e-12);
}

TEST(DeconvKernel, LaplaceClosedForm)
{
  const ModelIndex idx = make_model(2);
  const double s = 0.5;
  const double z = 0.3;
  const double D = 2.0;
  const double closed = phi(idx, 1, z) - s * s * std::pow(D, 2.5) * sinc_dd(D * z - 1.0);
  const double k = deconv_kernel(make_noise(NoiseKind::laplace, s), idx, 1, z);
  EXPECT_NEAR(k, closed, 1e-6);
  EXPECT_NEAR(k, 3.71766405, 1e-7);
}

TEST(DeconvKernel, UnderflowGuardNamesModel)
{
  const NoiseModel g = make_noise(NoiseKind::gaussian, 1.0);
  try {
    deconv_kernel(g, make_model(12), 0, 0.0);
    FAIL() << "expected model_error";
  } catch (const model_error& e) {
    EXPECT_EQ(e.model(), 12);
    EXPECT_NE(std::string(e.what()).find("m=12"), std::string::npos);
  }
}

TEST(DeconvCoeffs, SingleObservationNoiseFree)
{
  Dataset d;
  d.z = { 0.0 };
  const auto c = estimate_coeffs_g(d, make_noise(NoiseKind::none), make_model(1), 3);
  EXPECT_NEAR(c[0], 1.0, 1e-13);
  for (int j : { -3, -1, 1, 2 })
    EXPECT_NEAR(c[j], 0.0, 1e-13);
}

TEST(DeconvCoeffs, NoiseFreeEqualsDirectProjection)
{
  const Dataset d = make_sample(300, 0.0, NoiseKind::none, 3);
  for (int m = 1; m <= 6; ++m) {
    const ModelIndex idx = make_model(m, 0.5);
    const auto c = estimate_coeffs_g(d, make_noise(NoiseKind::none), idx, 40);
    for (std::int64_t j = -40; j <= 40; ++j) {
      double direct = 0.0;
      for (double z : d.z)
        direct += phi(idx, j, z);
      direct /= static_cast<double>(d.n());
      EXPECT_NEAR(c[j], direct, 1e-11) << "m=" << m << " j=" << j;
    }
  }
}

TEST(DeconvCoeffs, FactorizedMatchesNaive)
{
  struct Case
  {
    NoiseKind kind;
    double sigma;
    double D;
  };
  for (const Case& cs : { Case{ NoiseKind::laplace, 0.5, 1.5 }, Case{ NoiseKind::gaussian, 0.3, 2.0 },
                          Case{ NoiseKind::cauchy, 0.4, 1.0 }, Case{ NoiseKind::none, 0.0, 0.75 } }) {
    const Dataset d = make_sample(120, cs.sigma, cs.kind, 17);
    const NoiseModel noise = make_noise(cs.kind, cs.sigma);
    const ModelIndex idx{ 1, cs.D };
    const std::int64_t k = 12;
    const auto fast = estimate_model(d, noise, idx, k, {}, true, true);
    const auto ng = estimate_coeffs_naive(d, noise, idx, k, false);
    const auto nl = estimate_coeffs_naive(d, noise, idx, k, true);
    const double sg = max_abs(ng.dense());
    const double sl = max_abs(nl.dense());
    for (std::int64_t j = -k; j <= k; ++j) {
      EXPECT_NEAR(fast.g->coeffs[j], ng[j], 1e-9 * sg) << to_string(cs.kind) << " j=" << j;
      EXPECT_NEAR(fast.ell->coeffs[j], nl[j], 1e-9 * sl) << to_string(cs.kind) << " j=" << j;
    }
  }
}

TEST(DeconvCoeffs, TailExpansionMatchesDirectIntegration)
{
  for (NoiseKind kind : { NoiseKind::laplace, NoiseKind::gaussian, NoiseKind::cauchy }) {
    const double sigma = kind == NoiseKind::gaussian ? 0.3 : 0.5;
    const Dataset d = make_sample(60, sigma, kind, 23);
    const NoiseModel noise = make_noise(kind, sigma);
    const ModelIndex idx{ 1, 1.25 };
    const std::int64_t k = 5000;
    const auto fit = estimate_model(d, noise, idx, k, {}, true, true);
    const auto& cg = fit.g->coeffs;
    const auto& cl = fit.ell->coeffs;
    ASSERT_LT(cg.core_radius(), k);
    ASSERT_FALSE(cg.tail.empty());
    const double scale = max_abs(cg.core);
    for (std::int64_t j : { cg.core_radius() + 1, -cg.core_radius() - 7, std::int64_t{ 1001 },
                            std::int64_t{ -2500 }, std::int64_t{ 4999 } }) {
      double g = 0.0;
      double l = 0.0;
      for (std::size_t i = 0; i < d.n(); ++i) {
        const double u = deconv_kernel(noise, idx, j, d.z[i]);
        g += u;
        l += d.y[i] * u;
      }
      g /= d.n();
      l /= d.n();
      EXPECT_NEAR(cg[j], g, 1e-10 * scale) << to_string(kind) << " j=" << j;
      EXPECT_NEAR(cl[j], l, 1e-10 * scale) << to_string(kind) << " j=" << j;
    }
  }
}

TEST(DeconvCoeffs, ClosedKernelMatchesQuadrature)
{
  for (NoiseKind kind : { NoiseKind::none, NoiseKind::laplace, NoiseKind::cauchy }) {
    const double sigma = kind == NoiseKind::none ? 0.0 : 0.4;
    const NoiseModel noise = make_noise(kind, sigma);
    const double D = 1.75;
    // points with D z close to an integer exercise the small |t| branch
    const std::vector<double> z = { 0.0, 1.0 / D, (3.0 + 1e-9) / D, -0.3, 2.2, 7.9 };
    const std::vector<double> w = { 1.0, -0.5, 2.0, 0.25, 1.5, -1.0 };
    const std::int64_t J = 30;
    const auto c = detail::kernel_coefficients(z, &w, noise, D, -J, J);
    for (std::int64_t j = -J; j <= J; ++j) {
      double ref = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i)
        ref += w[i] * deconv_kernel(noise, ModelIndex{ 1, D }, j, z[i]);
      ref /= static_cast<double>(z.size());
      EXPECT_NEAR(c[static_cast<std::size_t>(j + J)], ref, 1e-12 * (1.0 + std::abs(ref)))
        << to_string(kind) << " j=" << j;
    }
  }
}

TEST(DeconvCoeffs, HeavyOutliersMatchKernel)
{
  Dataset d = make_sample(400, 0.2, NoiseKind::cauchy, 31);
  d.z[7] = 400.0;
  d.z[11] = -250.0;
  const NoiseModel noise = make_noise(NoiseKind::cauchy, 0.2);
  const ModelIndex idx{ 1, 16.0 };
  const auto fit = estimate_model(d, noise, idx, 400, {}, true, true);
  for (std::int64_t j : { std::int64_t{ 0 }, std::int64_t{ 17 }, std::int64_t{ -399 } }) {
    double g = 0.0;
    for (double zi : d.z)
      g += deconv_kernel(noise, idx, j, zi);
    g /= static_cast<double>(d.n());
    EXPECT_NEAR(fit.g->coeffs[j], g, 1e-9 * (1.0 + std::abs(g))) << "j=" << j;
  }
}

TEST(DeconvCoeffs, HeavyOutliersStayCheap)
{
  Dataset d = make_sample(1000, 0.2, NoiseKind::cauchy, 37);
  d.z[3] = 4000.0;
  const NoiseModel noise = make_noise(NoiseKind::cauchy, 0.2);
  const auto start = std::chrono::steady_clock::now();
  for (double D : { 1.0, 8.0, 32.0 })
    estimate_model(d, noise, ModelIndex{ 1, D }, 1000, {}, true, true);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 5.0);
}

TEST(DeconvCoeffs, TailSumsMatchDenseSums)
{
  const Dataset d = make_sample(200, 0.5, NoiseKind::laplace, 29);
  const NoiseModel noise = make_noise(NoiseKind::laplace, 0.5);
  const ModelIndex idx{ 1, 1.0 };
  const auto c = estimate_coeffs_g(d, noise, idx, 20000);
  ASSERT_FALSE(c.tail.empty());
  const auto dense = c.dense();
  long double ss = 0.0L;
  for (double v : dense)
    ss += static_cast<long double>(v) * v;
  EXPECT_NEAR(sum_squares(c), static_cast<double>(ss), 1e-13 * static_cast<double>(ss));
  EXPECT_NEAR(contrast_value(c), -static_cast<double>(ss), 1e-13 * static_cast<double>(ss));

  const auto full = make_coeffs(idx, dense);
  const std::vector<double> grid = { -2.0, -0.4, 0.0, 1.3, 40.0 };
  const auto r_tail = reconstruct(c, grid);
  const auto r_dense = reconstruct(full, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_NEAR(r_tail[i], r_dense[i], 1e-12) << "x=" << grid[i];
}

TEST(DeconvCoeffs, EllSpecialCases)
{
  Dataset d = make_sample(150, 0.5, NoiseKind::laplace, 31);
  const NoiseModel noise = make_noise(NoiseKind::laplace, 0.5);
  const ModelIndex idx = make_model(2);
  Dataset zero = d;
  std::fill(zero.y.begin(), zero.y.end(), 0.0);
  for (double v : estimate_coeffs_ell(zero, noise, idx, 30).dense())
    EXPECT_EQ(v, 0.0);
  Dataset ones = d;
  std::fill(ones.y.begin(), ones.y.end(), 1.0);
  const auto l = estimate_coeffs_ell(ones, noise, idx, 30).dense();
  const auto g = estimate_coeffs_g(ones, noise, idx, 30).dense();
  for (std::size_t i = 0; i < l.size(); ++i)
    EXPECT_NEAR(l[i], g[i], 1e-15);
  Dataset no_y = d;
  no_y.y.clear();
  EXPECT_THROW(estimate_coeffs_ell(no_y, noise, idx, 30), std::invalid_argument);
}

TEST(DeconvCoeffs, LinearInY)
{
  const Dataset d = make_sample(150, 0.3, NoiseKind::gaussian, 37);
  const NoiseModel noise = make_noise(NoiseKind::gaussian, 0.3);
  const ModelIndex idx = make_model(3, 0.5);
  Dataset d2 = d;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (auto& y : d2.y)
    y = nd(rng);
  Dataset comb = d;
  for (std::size_t i = 0; i < d.n(); ++i)
    comb.y[i] = 2.5 * d.y[i] - 0.75 * d2.y[i];
  const auto a = estimate_coeffs_ell(d, noise, idx, 500);
  const auto b = estimate_coeffs_ell(d2, noise, idx, 500);
  const auto c = estimate_coeffs_ell(comb, noise, idx, 500);
  for (std::int64_t j : { -500, -3, 0, 7, 120, 499 })
    EXPECT_NEAR(c[j], 2.5 * a[j] - 0.75 * b[j], 1e-12);
}

TEST(DeconvCoeffs, RealnessOfKernels)
{
  for (NoiseKind kind : { NoiseKind::laplace, NoiseKind::gaussian, NoiseKind::cauchy }) {
    const NoiseModel noise = make_noise(kind, 0.5);
    for (int j = -20; j <= 20; j += 5)
      EXPECT_NO_THROW(deconv_kernel(noise, make_model(2), j, 0.37 * j));
  }
}

TEST(Contrast, Arithmetic)
{
  EXPECT_EQ(contrast_value(make_coeffs(make_model(1), { 0.0, 0.0, 0.0 })), 0.0);
  EXPECT_EQ(contrast_value(make_coeffs(make_model(1), { 3.0 })), -9.0);
}

TEST(Contrast, MatchesDefinition)
{
  // gamma_n(t) = ||t||^2 - 2 n^{-1} sum_i u_t^*(Z_i) with t = sum_j c_j phi_j
  const Dataset d = make_sample(80, 0.5, NoiseKind::laplace, 41);
  const NoiseModel noise = make_noise(NoiseKind::laplace, 0.5);
  const ModelIndex idx = make_model(2, 0.5);
  const std::int64_t k = 10;
  const auto c = estimate_coeffs_g(d, noise, idx, k);
  double norm2 = 0.0;
  double cross = 0.0;
  for (std::int64_t j = -k; j <= k; ++j) {
    norm2 += c[j] * c[j];
    for (double z : d.z)
      cross += c[j] * deconv_kernel(noise, idx, j, z);
  }
  const double def = norm2 - 2.0 * cross / d.n();
  EXPECT_NEAR(contrast_value(c), def, 1e-9 * std::abs(def));
}

TEST(DeconvCoeffs, MonteCarloUnbiased)
{
  // mean of a_hat over seeds against the Fourier-domain oracle
  const NoiseModel noise = make_noise(NoiseKind::laplace, 0.5);
  const ModelIndex idx = make_model(2);
  const auto oracle = project_oracle([](double t) { return std::exp(-0.5 * t * t); }, idx, 2);
  const int reps = 20;
  std::vector<double> est;
  for (int r = 0; r < reps; ++r) {
    const Dataset d = make_sample(20000, 0.5, NoiseKind::laplace, 500 + r);
    est.push_back(estimate_coeffs_g(d, noise, idx, 2)[0]);
  }
  double mean = 0.0;
  for (double v : est)
    mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : est)
    var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (reps - 1) / reps);
  EXPECT_LT(std::abs(mean - oracle[0]), 3.0 * se + 1e-12);
}

TEST(DeconvCoeffs, TrapezoidRuleAgreesLoosely)
{
  const Dataset d = make_sample(100, 0.5, NoiseKind::laplace, 43);
  const NoiseModel noise = make_noise(NoiseKind::laplace, 0.5);
  QuadratureSpec trap{ 1024, QuadRule::uniform_trapezoid };
  const auto a = estimate_coeffs_g(d, noise, make_model(2), 20);
  const auto b = estimate_coeffs_g(d, noise, make_model(2), 20, trap);
  for (std::int64_t j = -20; j <= 20; ++j)
    EXPECT_NEAR(a[j], b[j], 1e-4);
  EXPECT_THROW(validate(QuadratureSpec{ 100, QuadRule::uniform_trapezoid }), std::invalid_argument);
  EXPECT_THROW(validate(QuadratureSpec{ 32, QuadRule::gauss_legendre }), std::invalid_argument);
}
