#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "eivreg/errors.hpp"

namespace eivreg {

//! Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule
compute_gauss_legendre(std::size_t order)
{
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const std::size_t half = (order + 1) / 2;
  const double n = static_cast<double>(order);
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= order; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= order; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1)
    rule.nodes[order / 2] = 0.0;
  return rule;
}

} // namespace detail

//! Cached Gauss-Legendre rule of the given order (thread safe).
inline std::shared_ptr<const GaussLegendreRule>
gauss_legendre(std::size_t order)
{
  if (order == 0)
    throw std::invalid_argument("gauss_legendre: order must be positive");
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const GaussLegendreRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end())
    return it->second;
  auto rule = std::make_shared<const GaussLegendreRule>(
    detail::compute_gauss_legendre(order));
  cache.emplace(order, rule);
  return rule;
}

//! Nodes and weights of a Gauss-Legendre rule mapped to [a, b].
inline void
mapped_gauss_legendre(std::size_t order,
                      double a,
                      double b,
                      std::vector<double>& nodes,
                      std::vector<double>& weights)
{
  const auto rule = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  nodes.resize(order);
  weights.resize(order);
  for (std::size_t k = 0; k < order; ++k) {
    nodes[k] = mid + half * rule->nodes[k];
    weights[k] = half * rule->weights[k];
  }
}

//! Result of an adaptive integration.
struct IntegrationResult
{
  double value = 0.0;
  double error = 0.0;
};

//! Adaptive Gauss-Kronrod integration of a real function; the bounds may be
//! infinite. Throws quadrature_error when the requested relative tolerance is
//! not met.
template<class F>
IntegrationResult
integrate_adaptive(F&& f,
                   double a,
                   double b,
                   double rel_tol = 1e-12,
                   const char* what = "integrate_adaptive",
                   double abs_floor = 0.0)
{
  using boost::math::quadrature::gauss_kronrod;
  IntegrationResult out;
  double l1 = 0.0;
  out.value =
    gauss_kronrod<double, 61>::integrate(f, a, b, 30, rel_tol, &out.error, &l1);
  if (!std::isfinite(out.value))
    throw quadrature_error(std::string(what) + ": non-finite integral", out.error);
  const double scale = std::max(std::abs(out.value), abs_floor);
  if (out.error > 100.0 * rel_tol * scale + abs_floor)
    throw quadrature_error(std::string(what) + ": quadrature did not converge",
                           out.error);
  return out;
}

//! Fixed-order Gauss-Legendre integration of a complex function on [a, b].
template<class F>
std::complex<double>
integrate_gl_complex(F&& f, double a, double b, std::size_t order)
{
  std::vector<double> x;
  std::vector<double> w;
  mapped_gauss_legendre(order, a, b, x, w);
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < order; ++k)
    acc += w[k] * f(x[k]);
  return acc;
}

} // namespace eivreg
