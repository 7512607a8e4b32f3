#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "eivreg/errors.hpp"
#include "eivreg/noise_models.hpp"
#include "eivreg/quadrature.hpp"
#include "eivreg/shannon_basis.hpp"

namespace eivreg {

//! Penalty constants: kappa multiplies pen_g, kappa_prime multiplies pen_ell.
struct PenaltyParams
{
  NoiseModel noise;
  double kappa = 2.0;
  double kappa_prime = 2.0;
};

inline void
validate(const PenaltyParams& p)
{
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa))
    throw std::invalid_argument("kappa must be positive");
  if (!(p.kappa_prime > 0.0) || !std::isfinite(p.kappa_prime))
    throw std::invalid_argument("kappa_prime must be positive");
  validate(p.noise);
}

namespace detail {

// log of D^{e} exp(2 beta sigma^rho (pi D)^rho)
inline double
log_dimension_weight(const ModelIndex& idx, const NoiseModel& noise, double exponent)
{
  const double D = idx.dim;
  double out = exponent * std::log(D);
  if (noise.beta > 0.0)
    out += 2.0 * noise.beta * std::pow(noise.sigma, noise.rho) *
           std::pow(std::numbers::pi * D, noise.rho);
  return out;
}

inline double
checked_exp(double log_value, const ModelIndex& idx, const char* what)
{
  if (log_value > std::log(std::numeric_limits<double>::max()))
    throw model_error(std::string(what) + " overflows", idx.m);
  return std::exp(log_value);
}

inline double
gamma_exponent(const NoiseModel& n)
{
  return 2.0 * n.alpha + 1.0 - n.rho;
}

inline double
gamma_tilde_exponent(const NoiseModel& n)
{
  return 2.0 * n.alpha + std::max(1.0 - n.rho, std::min((1.0 + n.rho) / 2.0, 1.0));
}

inline double
gamma2_exponent(const NoiseModel& n)
{
  return 2.0 * n.alpha + std::min(0.5 - n.rho / 2.0, 1.0 - n.rho);
}

} // namespace detail

inline double
log_gamma_cap(const ModelIndex& idx, const NoiseModel& noise)
{
  return detail::log_dimension_weight(idx, noise, detail::gamma_exponent(noise));
}

inline double
log_gamma_tilde(const ModelIndex& idx, const NoiseModel& noise)
{
  return detail::log_dimension_weight(idx, noise, detail::gamma_tilde_exponent(noise));
}

inline double
log_gamma2(const ModelIndex& idx, const NoiseModel& noise)
{
  return detail::log_dimension_weight(idx, noise, detail::gamma2_exponent(noise));
}

//! Gamma(m) = D^{2 alpha + 1 - rho} exp(2 beta sigma^rho (pi D)^rho).
inline double
gamma_cap(const ModelIndex& idx, const NoiseModel& noise)
{
  return detail::checked_exp(log_gamma_cap(idx, noise), idx, "Gamma(m)");
}

//! Gamma~(m) = D^{2 alpha + max(1 - rho, min((1 + rho)/2, 1))} exp(2 beta sigma^rho (pi D)^rho).
inline double
gamma_tilde(const ModelIndex& idx, const NoiseModel& noise)
{
  return detail::checked_exp(log_gamma_tilde(idx, noise), idx, "Gamma~(m)");
}

//! Gamma_2(m) = D^{2 alpha + min(1/2 - rho/2, 1 - rho)} exp(2 beta sigma^rho (pi D)^rho).
inline double
gamma2(const ModelIndex& idx, const NoiseModel& noise)
{
  return detail::checked_exp(log_gamma2(idx, noise), idx, "Gamma_2(m)");
}

//! lambda_1 = (sigma^2 pi^2 + 1)^alpha / (pi^rho kappa0^2 R(beta, sigma, rho)).
inline double
lambda1(const NoiseModel& noise)
{
  const double s = noise.sigma;
  const double pi = std::numbers::pi;
  double R = 0.0;
  if (noise.rho == 0.0)
    R = 1.0;
  else if (noise.rho <= 1.0)
    R = 2.0 * noise.beta * noise.rho * std::pow(s, noise.rho);
  else
    R = 2.0 * noise.beta * std::pow(s, noise.rho);
  if (!(R > 0.0))
    throw std::invalid_argument("lambda1: R(beta, sigma, rho) must be positive");
  return std::pow(s * s * pi * pi + 1.0, noise.alpha) /
         (std::pow(pi, noise.rho) * noise.kappa0 * noise.kappa0 * R);
}

inline double
mu1(const NoiseModel& noise)
{
  const double rho = noise.rho;
  if (rho < 1.0 / 3.0)
    return 0.0;
  const double pi = std::numbers::pi;
  const double lead = noise.beta * std::pow(noise.sigma * pi, rho);
  if (rho <= 1.0)
    return lead * std::sqrt(lambda1(noise)) *
           std::pow(1.0 + noise.sigma * noise.sigma * pi * pi, noise.alpha / 2.0) /
           noise.kappa0 / std::sqrt(2.0 * pi);
  return lead * lambda1(noise);
}

inline double
mu2(const NoiseModel& noise)
{
  const double rho = noise.rho;
  if (rho >= 1.0 / 3.0 && rho <= 1.0)
    return mu1(noise) * l2_norm_density(noise);
  return mu1(noise);
}

//! log Delta(m), Delta(m) = pi^{-1} int_0^{pi D} |f_eps^*(sigma u)|^{-2} du.
inline double
log_delta(const ModelIndex& idx, const NoiseModel& noise)
{
  const double top = std::numbers::pi * idx.dim;
  // the integrand peaks at the upper end for the built-in laws; scan for custom ones
  double peak = -2.0 * log_abs_noise_char_fn(noise, top);
  if (noise.kind == NoiseKind::custom)
    for (int k = 0; k <= 1024; ++k)
      peak = std::max(peak, -2.0 * log_abs_noise_char_fn(noise, top * k / 1024.0));
  if (!std::isfinite(peak))
    throw model_error("Delta(m): characteristic function vanishes on the band", idx.m);
  auto f = [&](double u) { return std::exp(-2.0 * log_abs_noise_char_fn(noise, u) - peak); };
  const auto r = integrate_adaptive(f, 0.0, top, 1e-12, "Delta(m)");
  return peak + std::log(r.value / std::numbers::pi);
}

inline double
delta(const ModelIndex& idx, const NoiseModel& noise)
{
  return detail::checked_exp(log_delta(idx, noise), idx, "Delta(m)");
}

//! Empirical second moment n^{-1} sum Y_i^2.
inline double
m2y(const std::vector<double>& y)
{
  if (y.empty())
    throw std::invalid_argument("m2y: empty response vector");
  double acc = 0.0;
  for (double v : y)
    acc += v * v;
  return acc / static_cast<double>(y.size());
}

//! pen_g(m) = kappa (lambda_1 + mu_1) Gamma~(m) / n.
inline double
pen_g(const ModelIndex& idx, std::size_t n, const PenaltyParams& p)
{
  if (n < 1)
    throw std::invalid_argument("pen_g: n must be >= 1");
  return p.kappa * (lambda1(p.noise) + mu1(p.noise)) * gamma_tilde(idx, p.noise) /
         static_cast<double>(n);
}

//! pen_ell(m) = kappa' (lambda_1 + mu_2) [1 + m2(Y)] Gamma~(m) / n.
inline double
pen_ell(const ModelIndex& idx, std::size_t n, const PenaltyParams& p, double m2)
{
  if (n < 1)
    throw std::invalid_argument("pen_ell: n must be >= 1");
  if (!(m2 >= 0.0))
    throw std::invalid_argument("pen_ell: m2y must be >= 0");
  return p.kappa_prime * (lambda1(p.noise) + mu2(p.noise)) * (1.0 + m2) *
         gamma_tilde(idx, p.noise) / static_cast<double>(n);
}

enum class CollectionPurpose
{
  density_only,
  ell_only,
  density_for_regression
};

struct ModelCollection
{
  std::vector<ModelIndex> models;
  CollectionPurpose purpose = CollectionPurpose::density_only;
  //! Largest admissible dimension from the bounds.
  double dim_bound = 0.0;
  //! True when no model met the bounds and the smallest one was admitted anyway.
  bool forced_minimum = false;
};

//! Upper bound on D_m for the collection: the variance bound, its
//! log-corrected version when rho > 0, and the (n / ln n)^{1/(2 alpha + 2)}
//! cap for a density estimated as the denominator of the regression.
inline double
dimension_bound(std::size_t n, const NoiseModel& noise, CollectionPurpose purpose)
{
  if (n < 2)
    throw std::invalid_argument("model_set: n must be >= 2");
  const double nn = static_cast<double>(n);
  const double pi = std::numbers::pi;
  const double a = noise.alpha;
  const double rho = noise.rho;
  double bound = 0.0;
  if (rho == 0.0) {
    bound = std::pow(nn, 1.0 / (2.0 * a + 1.0)) / pi;
  } else {
    const double bs = 2.0 * noise.beta * std::pow(noise.sigma, rho);
    const double L = std::log(nn) / bs;
    auto branch = [&](double e) {
      const double inner = L + e / (rho * bs) * std::log(L);
      return inner > 0.0 ? std::pow(inner, 1.0 / rho) / pi : 0.0;
    };
    bound = std::min(branch(2.0 * a + 1.0 - rho),
                     branch(2.0 * a + std::min(0.5 + rho / 2.0, 1.0)));
  }
  if (purpose == CollectionPurpose::density_for_regression)
    bound = std::min(bound, std::pow(nn / std::log(nn), 1.0 / (2.0 * a + 2.0)));
  return bound;
}

//! Models m = 1, 2, ... with D_m = m * step within the bound (ties included)
//! and not above max_dim. Never empty: m = 1 is admitted when nothing else is.
inline ModelCollection
model_set(std::size_t n,
          const NoiseModel& noise,
          CollectionPurpose purpose,
          double step = 1.0,
          double max_dim = std::numeric_limits<double>::infinity())
{
  if (!(step > 0.0))
    throw std::invalid_argument("model_set: dimension step must be positive");
  ModelCollection out;
  out.purpose = purpose;
  out.dim_bound = dimension_bound(n, noise, purpose);
  const double limit = std::min(out.dim_bound, max_dim) * (1.0 + 1e-12);
  for (int m = 1; m * step <= limit; ++m)
    out.models.push_back(make_model(m, step));
  if (out.models.empty()) {
    out.models.push_back(make_model(1, step));
    out.forced_minimum = true;
  }
  return out;
}

} // namespace eivreg
