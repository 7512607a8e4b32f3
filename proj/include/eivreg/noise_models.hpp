#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "eivreg/quadrature.hpp"
#include "eivreg/random.hpp"

namespace eivreg {

enum class NoiseKind
{
  none,
  gaussian,
  laplace,
  cauchy,
  custom
};

inline std::string
to_string(NoiseKind kind)
{
  switch (kind) {
    case NoiseKind::none:
      return "none";
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::laplace:
      return "laplace";
    case NoiseKind::cauchy:
      return "cauchy";
    case NoiseKind::custom:
      return "custom";
  }
  return "unknown";
}

inline NoiseKind
parse_noise_kind(const std::string& name)
{
  if (name == "none")
    return NoiseKind::none;
  if (name == "gaussian")
    return NoiseKind::gaussian;
  if (name == "laplace")
    return NoiseKind::laplace;
  if (name == "cauchy")
    return NoiseKind::cauchy;
  throw std::invalid_argument("unknown noise kind '" + name +
                              "' (expected gaussian, laplace, cauchy or none)");
}

//! Smoothness parameters of an error law: kappa0 (x^2+1)^(-alpha/2)
//! exp(-beta |x|^rho) bounds |f_eps^*(x)| from below, kappa0_prime times the
//! same envelope bounds it from above.
struct SmoothnessParams
{
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double kappa0 = 1.0;
  double kappa0_prime = 1.0;
};

//! User-supplied error law. The characteristic function must be Hermitian
//! (it is for every real random variable); the declared smoothness parameters
//! are trusted.
struct CustomNoise
{
  std::function<std::complex<double>(double)> char_fn;
  //! Optional sampler of the unscaled error; sample_noise throws without it.
  std::function<double(Engine&)> sampler;
  std::string name = "custom";
};

//! Known error law f_eps together with the noise level sigma of Z = X + sigma eps.
struct NoiseModel
{
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double kappa0 = 1.0;
  double kappa0_prime = 1.0;
  std::shared_ptr<const CustomNoise> custom;

  SmoothnessParams smoothness() const
  {
    return { alpha, beta, rho, kappa0, kappa0_prime };
  }
};

//! (alpha, beta, rho, kappa0, kappa0') of a built-in law at noise level sigma.
//! With sigma = 0 the observation is noise free and every parameter collapses
//! to the Dirac convention alpha = beta = rho = 0.
inline SmoothnessParams
smoothness_params(NoiseKind kind, double sigma)
{
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("noise level sigma must be finite and >= 0");
  switch (kind) {
    case NoiseKind::none:
      return { 0.0, 0.0, 0.0, 1.0, 1.0 };
    case NoiseKind::gaussian:
      if (sigma == 0.0)
        return { 0.0, 0.0, 0.0, 1.0, 1.0 };
      return { 0.0, 0.5, 2.0, 1.0, 1.0 };
    case NoiseKind::cauchy:
      if (sigma == 0.0)
        return { 0.0, 0.0, 0.0, 1.0, 1.0 };
      return { 0.0, 1.0, 1.0, 1.0, 1.0 };
    case NoiseKind::laplace:
      if (sigma == 0.0)
        return { 0.0, 0.0, 0.0, 1.0, 1.0 };
      return { 2.0, 0.0, 0.0, 1.0, 1.0 };
    case NoiseKind::custom:
      break;
  }
  throw std::invalid_argument("smoothness_params: no parameters registered for kind " +
                              to_string(kind));
}

inline void
validate(const NoiseModel& model)
{
  if (!(model.sigma >= 0.0) || !std::isfinite(model.sigma))
    throw std::invalid_argument("noise level sigma must be finite and >= 0");
  if (model.kind == NoiseKind::none && model.sigma != 0.0)
    throw std::invalid_argument("noise kind 'none' requires sigma = 0");
  if (model.alpha < 0.0 || model.beta < 0.0 || model.rho < 0.0)
    throw std::invalid_argument("alpha, beta and rho must be nonnegative");
  if ((model.beta == 0.0) != (model.rho == 0.0))
    throw std::invalid_argument("beta = 0 must go together with rho = 0");
  if (model.rho == 0.0 && model.sigma > 0.0 && model.kind != NoiseKind::none &&
      !(model.alpha > 0.5))
    throw std::invalid_argument("ordinary smooth noise needs alpha > 1/2");
  if (!(model.kappa0 > 0.0) || !(model.kappa0_prime >= model.kappa0))
    throw std::invalid_argument("need 0 < kappa0 <= kappa0_prime");
  if (model.kind == NoiseKind::custom && (!model.custom || !model.custom->char_fn))
    throw std::invalid_argument("custom noise needs a characteristic function");
}

inline NoiseModel
make_noise(NoiseKind kind, double sigma = 0.0)
{
  NoiseModel model;
  model.kind = kind;
  model.sigma = sigma;
  const SmoothnessParams p = smoothness_params(kind, sigma);
  model.alpha = p.alpha;
  model.beta = p.beta;
  model.rho = p.rho;
  model.kappa0 = p.kappa0;
  model.kappa0_prime = p.kappa0_prime;
  validate(model);
  return model;
}

inline NoiseModel
make_custom_noise(CustomNoise custom, double sigma, SmoothnessParams params)
{
  NoiseModel model;
  model.kind = NoiseKind::custom;
  model.sigma = sigma;
  model.alpha = params.alpha;
  model.beta = params.beta;
  model.rho = params.rho;
  model.kappa0 = params.kappa0;
  model.kappa0_prime = params.kappa0_prime;
  model.custom = std::make_shared<const CustomNoise>(std::move(custom));
  validate(model);
  return model;
}

//! Characteristic function f_eps^*(x) of the unscaled error.
inline std::complex<double>
char_fn(const NoiseModel& model, double x)
{
  switch (model.kind) {
    case NoiseKind::none:
      return 1.0;
    case NoiseKind::gaussian:
      return std::exp(-0.5 * x * x);
    case NoiseKind::laplace:
      return 1.0 / (1.0 + x * x);
    case NoiseKind::cauchy:
      return std::exp(-std::abs(x));
    case NoiseKind::custom:
      if (model.custom && model.custom->char_fn)
        return model.custom->char_fn(x);
      break;
  }
  throw std::invalid_argument("char_fn: no closed form registered for this noise kind");
}

//! Characteristic function of sigma * eps, i.e. f_eps^*(sigma x).
inline std::complex<double>
noise_char_fn(const NoiseModel& model, double x)
{
  if (model.sigma == 0.0)
    return 1.0;
  return char_fn(model, model.sigma * x);
}

//! log |f_eps^*(sigma x)|, finite even where the characteristic function
//! itself underflows.
inline double
log_abs_noise_char_fn(const NoiseModel& model, double x)
{
  if (model.sigma == 0.0)
    return 0.0;
  const double t = model.sigma * x;
  switch (model.kind) {
    case NoiseKind::none:
      return 0.0;
    case NoiseKind::gaussian:
      return -0.5 * t * t;
    case NoiseKind::laplace:
      return -std::log1p(t * t);
    case NoiseKind::cauchy:
      return -std::abs(t);
    case NoiseKind::custom:
      return std::log(std::abs(char_fn(model, t)));
  }
  return 0.0;
}

//! Derivatives w^(p)(v), p = 0..order, of w(v) = 1 / f_eps^*(scale v) at v >= 0
//! (right derivatives at v = 0). Available for the built-in even laws only.
inline std::optional<std::vector<double>>
reciprocal_derivatives(const NoiseModel& model, double scale, double v, int order)
{
  std::vector<double> d(static_cast<std::size_t>(order) + 1, 0.0);
  const double c = model.sigma * scale;
  if (model.sigma == 0.0 || model.kind == NoiseKind::none) {
    d[0] = 1.0;
    return d;
  }
  switch (model.kind) {
    case NoiseKind::gaussian: {
      const double a = 0.5 * c * c;
      d[0] = std::exp(a * v * v);
      if (order >= 1)
        d[1] = 2.0 * a * v * d[0];
      for (int p = 1; p < order; ++p)
        d[p + 1] = 2.0 * a * (v * d[p] + p * d[p - 1]);
      return d;
    }
    case NoiseKind::laplace:
      d[0] = 1.0 + c * c * v * v;
      if (order >= 1)
        d[1] = 2.0 * c * c * v;
      if (order >= 2)
        d[2] = 2.0 * c * c;
      return d;
    case NoiseKind::cauchy: {
      double term = std::exp(c * v);
      for (int p = 0; p <= order; ++p) {
        d[p] = term;
        term *= c;
      }
      return d;
    }
    default:
      return std::nullopt;
  }
}

//! Rough growth rate L of the derivatives of 1 / f_eps^*(scale v) on [0, pi]:
//! |w^(p)| is of order L^p |w| for the orders used by the tail expansion.
inline double
reciprocal_growth(const NoiseModel& model, double scale, int order)
{
  const double c = model.sigma * scale;
  switch (model.kind) {
    case NoiseKind::gaussian:
      return c * c * std::numbers::pi + c * std::sqrt(static_cast<double>(order)) + 1.0;
    case NoiseKind::laplace:
    case NoiseKind::cauchy:
      return c + 1.0;
    default:
      return 1.0;
  }
}

//! One draw of the unscaled error eps.
inline double
draw_error(const NoiseModel& model, Engine& eng)
{
  switch (model.kind) {
    case NoiseKind::none:
      return 0.0;
    case NoiseKind::gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return normal(eng);
    }
    case NoiseKind::laplace: {
      const double u = uniform_open01(eng) - 0.5;
      return u < 0.0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
    }
    case NoiseKind::cauchy:
      return std::tan(std::numbers::pi * (uniform_open01(eng) - 0.5));
    case NoiseKind::custom:
      if (model.custom && model.custom->sampler)
        return model.custom->sampler(eng);
      throw std::invalid_argument("custom noise has no sampler");
  }
  return 0.0;
}

//! n draws of sigma * eps from an existing engine.
inline std::vector<double>
sample_noise(const NoiseModel& model, std::size_t n, Engine& eng)
{
  if (n == 0)
    throw std::invalid_argument("sample_noise: n must be >= 1");
  std::vector<double> out(n, 0.0);
  if (model.sigma == 0.0)
    return out;
  for (auto& v : out)
    v = model.sigma * draw_error(model, eng);
  return out;
}

//! n draws of sigma * eps; deterministic given the seed.
inline std::vector<double>
sample_noise(const NoiseModel& model, std::size_t n, std::uint64_t seed)
{
  Engine eng = make_engine(seed);
  return sample_noise(model, n, eng);
}

//! L2 norm of the error density f_eps.
inline double
l2_norm_density(const NoiseModel& model)
{
  switch (model.kind) {
    case NoiseKind::none:
      throw std::domain_error("l2_norm_density: the Dirac law has no density");
    case NoiseKind::gaussian:
      return 1.0 / std::sqrt(2.0 * std::sqrt(std::numbers::pi));
    case NoiseKind::laplace:
      return 0.5;
    case NoiseKind::cauchy:
      return 1.0 / std::sqrt(2.0 * std::numbers::pi);
    case NoiseKind::custom: {
      // Plancherel: ||f||^2 = pi^{-1} int_0^inf |f^*|^2.
      auto sq = [&](double x) { return std::norm(char_fn(model, x)); };
      const double I = integrate_adaptive(sq, 0.0, std::numeric_limits<double>::infinity(),
                                          1e-11, "l2_norm_density")
                         .value;
      return std::sqrt(I / std::numbers::pi);
    }
  }
  return 0.0;
}

} // namespace eivreg
