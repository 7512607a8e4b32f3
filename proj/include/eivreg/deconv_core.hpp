#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/math/special_functions/cos_pi.hpp>

#include "eivreg/errors.hpp"
#include "eivreg/noise_models.hpp"
#include "eivreg/quadrature.hpp"
#include "eivreg/shannon_basis.hpp"

namespace eivreg {

//! Observations (Y_i, Z_i); y may be empty for density-only use.
struct Dataset
{
  std::vector<double> y;
  std::vector<double> z;

  std::size_t n() const { return z.size(); }
  bool has_y() const { return !y.empty(); }
};

inline void
validate(const Dataset& data, bool need_y)
{
  if (data.z.empty())
    throw std::invalid_argument("dataset has no observations");
  if (need_y && !data.has_y())
    throw std::invalid_argument("responses y are required");
  if (data.has_y() && data.y.size() != data.z.size())
    throw std::invalid_argument("y and z must have equal length");
  for (double v : data.z)
    if (!std::isfinite(v))
      throw std::invalid_argument("non-finite z value");
  for (double v : data.y)
    if (!std::isfinite(v))
      throw std::invalid_argument("non-finite y value");
}

enum class QuadRule
{
  gauss_legendre,
  uniform_trapezoid
};

inline std::string
to_string(QuadRule rule)
{
  return rule == QuadRule::gauss_legendre ? "gauss_legendre" : "uniform_trapezoid";
}

inline QuadRule
parse_quad_rule(const std::string& name)
{
  if (name == "gauss_legendre")
    return QuadRule::gauss_legendre;
  if (name == "uniform_trapezoid")
    return QuadRule::uniform_trapezoid;
  throw std::invalid_argument("unknown quadrature rule '" + name + "'");
}

//! Quadrature for the integrals over v in [0, pi]. `nodes` is a floor: the
//! node count is raised automatically to resolve the oscillation of each
//! integrand. The trapezoid rule is second order only and kept for cross
//! validation; Gauss-Legendre is the accurate default.
struct QuadratureSpec
{
  std::size_t nodes = 64;
  QuadRule rule = QuadRule::gauss_legendre;
};

inline void
validate(const QuadratureSpec& quad)
{
  if (quad.nodes < 64)
    throw std::invalid_argument("quadrature needs at least 64 nodes");
  if (quad.rule == QuadRule::uniform_trapezoid && (quad.nodes & (quad.nodes - 1)) != 0)
    throw std::invalid_argument("trapezoid node count must be a power of two");
}

//! Nodes and weights on [0, pi].
struct NodeSet
{
  std::vector<double> v;
  std::vector<double> w;
};

inline NodeSet
make_nodes(const QuadratureSpec& quad, double omega)
{
  NodeSet ns;
  const std::size_t need = detail::nodes_for_frequency(omega);
  if (quad.rule == QuadRule::gauss_legendre) {
    mapped_gauss_legendre(std::max(quad.nodes, need), 0.0, std::numbers::pi, ns.v, ns.w);
    return ns;
  }
  std::size_t Q = quad.nodes;
  while (Q < 4 * need)
    Q *= 2;
  const double h = std::numbers::pi / static_cast<double>(Q);
  ns.v.resize(Q + 1);
  ns.w.assign(Q + 1, h);
  for (std::size_t k = 0; k <= Q; ++k)
    ns.v[k] = h * static_cast<double>(k);
  ns.w.front() *= 0.5;
  ns.w.back() *= 0.5;
  return ns;
}

//! Throws model_error when |f_eps^*(sigma D v)| drops below 1e-300 on [0, pi].
inline void
check_band(const NoiseModel& noise, const ModelIndex& idx)
{
  if (noise.sigma == 0.0)
    return;
  const double floor = std::log(1e-300);
  double worst = log_abs_noise_char_fn(noise, idx.dim * std::numbers::pi);
  if (noise.kind == NoiseKind::custom) {
    for (int k = 0; k <= 512; ++k)
      worst = std::min(worst, log_abs_noise_char_fn(noise, idx.dim * std::numbers::pi * k / 512.0));
  }
  if (!(worst >= floor))
    throw model_error("characteristic function underflows on the model band", idx.m);
}

namespace detail {

inline std::complex<double>
reciprocal_cf(const NoiseModel& noise, double D, double v)
{
  return 1.0 / noise_char_fn(noise, D * v);
}

} // namespace detail

//! Deconvolution kernel u^*_{phi_{m,j}}(z) =
//! sqrt(D)/(2 pi) int_{-pi}^{pi} e^{iv(j - D z)} / f_eps^*(sigma D v) dv.
inline double
deconv_kernel(const NoiseModel& noise,
              const ModelIndex& idx,
              std::int64_t j,
              double z,
              const QuadratureSpec& quad = {})
{
  check_band(noise, idx);
  const double D = idx.dim;
  const double s = static_cast<double>(j) - D * z;
  const double L = reciprocal_growth(noise, D, 8);
  const NodeSet ns = make_nodes(quad, std::abs(s) + 2.0 * L);
  std::complex<double> acc = 0.0;
  double mag = 0.0;
  for (std::size_t q = 0; q < ns.v.size(); ++q) {
    const double v = ns.v[q];
    const std::complex<double> plus = std::polar(1.0, s * v) * detail::reciprocal_cf(noise, D, v);
    const std::complex<double> minus =
      std::polar(1.0, -s * v) * detail::reciprocal_cf(noise, D, -v);
    acc += ns.w[q] * (plus + minus);
    mag += ns.w[q] * (std::abs(plus) + std::abs(minus));
  }
  const double pref = std::sqrt(D) / (2.0 * std::numbers::pi);
  if (std::abs(acc.imag()) > 1e-8 * std::max(std::abs(acc.real()), 1e-3 * mag))
    throw numeric_error("deconv_kernel: integrand is not Hermitian (imaginary part " +
                        std::to_string(pref * acc.imag()) + ")");
  return pref * acc.real();
}

//! Order of the integration-by-parts series used for the coefficient tail.
constexpr int tail_order = 40;

//! Everything computed for one model from one weighted sample: the Fourier
//! side h(v) = S(v) / f_eps^*(sigma D v) on the quadrature nodes (with
//! S(v) = n^{-1} sum_i w_i e^{-i D Z_i v}) and the resulting coefficients.
struct EmpiricalFit
{
  ModelIndex model;
  NodeSet nodes;
  std::vector<std::complex<double>> h;
  CoeffVector coeffs;
};

//! Fits for one model: density (weights 1) and/or ell (weights Y_i).
struct ModelFits
{
  std::optional<EmpiricalFit> g;
  std::optional<EmpiricalFit> ell;
};

namespace detail {

struct SampleScale
{
  double y_max = 0.0; // D max |Z_i|
  double growth = 1.0;
  double R = 1.0;
};

inline SampleScale
sample_scale(const Dataset& data, const NoiseModel& noise, double D)
{
  SampleScale sc;
  double zmax = 0.0;
  for (double z : data.z)
    zmax = std::max(zmax, std::abs(z));
  sc.y_max = D * zmax;
  sc.growth = reciprocal_growth(noise, D, tail_order);
  sc.R = sc.y_max + sc.growth + 1.0;
  return sc;
}

// Builds the tail expansion of the coefficients of sqrt(D)/pi Re int_0^pi
// e^{ijv} S(v) w(v) dv from endpoint derivatives. Returns false when the
// derivatives of w are not available in closed form.
inline bool
build_tail(const std::vector<double>& z,
           const std::vector<double>* weights,
           const NoiseModel& noise,
           double D,
           double R,
           std::int64_t start,
           TailExpansion& out)
{
  const int P = tail_order;
  const double ends[2] = { std::numbers::pi, 0.0 };
  std::vector<std::complex<double>> Hhat[2];
  for (int e = 0; e < 2; ++e) {
    const auto wd = reciprocal_derivatives(noise, D, ends[e], P);
    if (!wd)
      return false;
    std::vector<double> what(P + 1);
    double rp = 1.0;
    for (int r = 0; r <= P; ++r) {
      what[r] = (*wd)[r] / rp;
      rp *= R;
      if (!std::isfinite(what[r]))
        throw numeric_error("tail expansion: derivative overflow");
    }
    // scaled derivatives of S: n^{-1} sum w_i (-i D Z_i / R)^q e^{-i D Z_i v0}
    std::vector<std::complex<double>> Shat(P + 1, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double wi = weights ? (*weights)[i] : 1.0;
      if (wi == 0.0)
        continue;
      std::complex<double> term = wi * std::polar(1.0, -D * z[i] * ends[e]);
      const std::complex<double> step(0.0, -D * z[i] / R);
      for (int q = 0; q <= P; ++q) {
        Shat[q] += term;
        term *= step;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(z.size());
    for (auto& s : Shat)
      s *= inv_n;
    Hhat[e].assign(P + 1, 0.0);
    for (int p = 0; p <= P; ++p) {
      double binom = 1.0;
      std::complex<double> acc = 0.0;
      for (int q = 0; q <= p; ++q) {
        acc += binom * Shat[q] * what[p - q];
        binom = binom * (p - q) / (q + 1);
      }
      Hhat[e][p] = acc;
    }
  }
  out = tail_from_derivatives(Hhat[0], Hhat[1], D, R, start);
  return true;
}

inline std::vector<double>
core_coefficients(const NodeSet& ns,
                  const std::vector<std::complex<double>>& h,
                  double D,
                  std::int64_t J)
{
  const double pref = std::sqrt(D) / std::numbers::pi;
  std::vector<double> c(static_cast<std::size_t>(2 * J + 1));
  std::vector<std::complex<double>> hw(h.size());
  for (std::size_t q = 0; q < h.size(); ++q)
    hw[q] = ns.w[q] * h[q];
  for (std::int64_t j = 0; j <= J; ++j) {
    std::complex<double> acc_p = 0.0;
    std::complex<double> acc_m = 0.0;
    const double jd = static_cast<double>(j);
    for (std::size_t q = 0; q < h.size(); ++q) {
      const std::complex<double> e = std::polar(1.0, jd * ns.v[q]);
      acc_p += e * hw[q];
      acc_m += std::conj(e) * hw[q];
    }
    c[static_cast<std::size_t>(J + j)] = pref * acc_p.real();
    c[static_cast<std::size_t>(J - j)] = pref * acc_m.real();
  }
  return c;
}

//! True when Re int_0^pi e^{itv} / f_eps^*(sigma D v) dv has a closed form.
inline bool
has_closed_kernel(const NoiseModel& noise)
{
  return noise.sigma == 0.0 || noise.kind == NoiseKind::none ||
         noise.kind == NoiseKind::laplace || noise.kind == NoiseKind::cauchy;
}

//! Re int_0^pi e^{itv} / f_eps^*(s v / sigma) dv for the laws accepted by
//! `has_closed_kernel`, with s = sigma D, given sp = sin(pi t), cp = cos(pi t).
struct ClosedKernel
{
  NoiseKind kind = NoiseKind::none;
  double s = 0.0;
  double e = 1.0;  // e^{s pi}
  double em1 = 0.0; // e^{s pi} - 1

  ClosedKernel(NoiseKind k, double s_)
    : kind(s_ == 0.0 ? NoiseKind::none : k)
    , s(s_)
    , e(std::exp(s_ * std::numbers::pi))
    , em1(std::expm1(s_ * std::numbers::pi))
  {
  }

  double operator()(double t, double sp, double cp) const
  {
    constexpr double pi = std::numbers::pi;
    if (kind == NoiseKind::cauchy) {
      // Re (e^{(s + it) pi} - 1) / (s + it)
      const double nr = em1 * cp + (cp - 1.0);
      return (s * nr + t * e * sp) / (s * s + t * t);
    }
    const double base = t == 0.0 ? pi : sp / t;
    if (kind == NoiseKind::none)
      return base;
    // Laplace: int_0^pi v^2 cos(tv) dv
    double v2 = 0.0;
    if (std::abs(t) < 1.0) {
      const double x = pi * t;
      double term = pi * pi * pi;
      for (int m = 0; m < 40; ++m) {
        v2 += term / (2.0 * m + 3.0);
        term *= -x * x / ((2.0 * m + 1.0) * (2.0 * m + 2.0));
      }
    } else {
      const double r = 1.0 / t;
      v2 = r * (pi * pi * sp + r * (2.0 * pi * cp - r * 2.0 * sp));
    }
    return base + s * s * v2;
  }
};

//! Coefficients j = lo..hi as exact sample averages of the closed-form kernel,
//! for weights 1 into `g` and weights y into `ell` (either may be null).
inline void
kernel_coefficients(const std::vector<double>& z,
                    const std::vector<double>& y,
                    const NoiseModel& noise,
                    double D,
                    std::int64_t lo,
                    std::int64_t hi,
                    std::vector<double>* g,
                    std::vector<double>* ell)
{
  const ClosedKernel kernel(noise.kind, noise.sigma * D);
  const auto len = static_cast<std::size_t>(hi - lo + 1);
  if (g)
    g->assign(len, 0.0);
  if (ell)
    ell->assign(len, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double yD = D * z[i];
    const double wi = ell ? y[i] : 0.0;
    // sin(pi (j - yD)) = -(-1)^j sin(pi yD), cos(pi (j - yD)) = (-1)^j cos(pi yD)
    const double sy = boost::math::sin_pi(yD);
    const double cy = boost::math::cos_pi(yD);
    double sign = (lo % 2 == 0) ? 1.0 : -1.0;
    for (std::int64_t j = lo; j <= hi; ++j, sign = -sign) {
      const double u = kernel(static_cast<double>(j) - yD, -sign * sy, sign * cy);
      const auto at = static_cast<std::size_t>(j - lo);
      if (g)
        (*g)[at] += u;
      if (ell)
        (*ell)[at] += wi * u;
    }
  }
  const double scale = std::sqrt(D) / std::numbers::pi / static_cast<double>(z.size());
  for (auto* c : { g, ell })
    if (c)
      for (double& x : *c)
        x *= scale;
}

//! Single-weight form: weights 1 when `weights` is null.
inline std::vector<double>
kernel_coefficients(const std::vector<double>& z,
                    const std::vector<double>* weights,
                    const NoiseModel& noise,
                    double D,
                    std::int64_t lo,
                    std::int64_t hi)
{
  std::vector<double> c;
  if (weights)
    kernel_coefficients(z, *weights, noise, D, lo, hi, nullptr, &c);
  else
    kernel_coefficients(z, z, noise, D, lo, hi, &c, nullptr);
  return c;
}

inline double
single_coefficient(const NodeSet& ns, const std::vector<std::complex<double>>& h, double D, std::int64_t j)
{
  std::complex<double> acc = 0.0;
  const double jd = static_cast<double>(j);
  for (std::size_t q = 0; q < h.size(); ++q)
    acc += ns.w[q] * std::polar(1.0, jd * ns.v[q]) * h[q];
  return std::sqrt(D) / std::numbers::pi * acc.real();
}

} // namespace detail

//! Coefficient estimates of g (weights 1) and/or ell (weights Y_i) for one
//! model, through the empirical characteristic function. Coefficients up to a
//! radius J of order 4 D max|Z| are integrated numerically; larger |j| up to
//! k_n come from the integration-by-parts tail expansion.
inline ModelFits
estimate_model(const Dataset& data,
               const NoiseModel& noise,
               const ModelIndex& idx,
               std::int64_t k_n,
               const QuadratureSpec& quad,
               bool want_g,
               bool want_ell)
{
  validate(data, want_ell);
  validate(quad);
  if (k_n < 1)
    throw std::invalid_argument("k_n must be >= 1");
  check_band(noise, idx);
  const double D = idx.dim;
  const auto sc = detail::sample_scale(data, noise, D);
  const bool closed_form_tail =
    reciprocal_derivatives(noise, D, std::numbers::pi, 1).has_value();
  std::int64_t J_core = static_cast<std::int64_t>(std::ceil(4.0 * sc.R)) + 64;

  ModelFits out;
  for (int attempt = 0; attempt < 4; ++attempt, J_core *= 2) {
    const std::int64_t J = (closed_form_tail && k_n > J_core) ? J_core : k_n;
    const double omega = static_cast<double>(J + 1) + sc.y_max + 2.0 * sc.growth;
    const double n_d = static_cast<double>(data.n());
    const double quad_cost =
      static_cast<double>(detail::nodes_for_frequency(omega)) * (n_d + 2.0 * static_cast<double>(J));
    // kernel term cost taken as 0.1 complex exponential
    if (quad.rule == QuadRule::gauss_legendre && detail::has_closed_kernel(noise) &&
        0.1 * n_d * static_cast<double>(2 * J + 1) < quad_cost) {
      std::vector<double> cg;
      std::vector<double> cl;
      detail::kernel_coefficients(data.z, data.y, noise, D, -J, J, want_g ? &cg : nullptr,
                                  want_ell ? &cl : nullptr);
      bool ok = true;
      auto finish = [&](std::vector<double>& core, const std::vector<double>* weights) -> EmpiricalFit {
        EmpiricalFit fit;
        fit.model = idx;
        fit.coeffs.model = idx;
        fit.coeffs.k_n = k_n;
        fit.coeffs.core = std::move(core);
        if (J < k_n) {
          detail::build_tail(data.z, weights, noise, D, sc.R, J + 1, fit.coeffs.tail);
          const auto edge = detail::kernel_coefficients(data.z, weights, noise, D, J + 1, J + 1);
          const auto edge_m = detail::kernel_coefficients(data.z, weights, noise, D, -J - 1, -J - 1);
          double scale = 0.0;
          for (double c : fit.coeffs.core)
            scale = std::max(scale, std::abs(c));
          const double d1 = edge[0] - fit.coeffs.tail.value(J + 1);
          const double d2 = edge_m[0] - fit.coeffs.tail.value(-(J + 1));
          if (std::max(std::abs(d1), std::abs(d2)) > 1e-9 * std::max(scale, 1e-300))
            ok = false;
        }
        return fit;
      };
      if (want_g)
        out.g = finish(cg, nullptr);
      if (want_ell)
        out.ell = finish(cl, &data.y);
      if (ok)
        return out;
      continue;
    }
    const NodeSet ns = make_nodes(quad, omega);
    const std::size_t Q = ns.v.size();
    std::vector<std::complex<double>> Sg(want_g ? Q : 0, 0.0);
    std::vector<std::complex<double>> Sl(want_ell ? Q : 0, 0.0);
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double a = -D * data.z[i];
      const double yi = want_ell ? data.y[i] : 0.0;
      for (std::size_t q = 0; q < Q; ++q) {
        const std::complex<double> e = std::polar(1.0, a * ns.v[q]);
        if (want_g)
          Sg[q] += e;
        if (want_ell)
          Sl[q] += yi * e;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(data.n());
    std::vector<std::complex<double>> wv(Q);
    for (std::size_t q = 0; q < Q; ++q) {
      wv[q] = detail::reciprocal_cf(noise, D, ns.v[q]);
      if (!std::isfinite(wv[q].real()) || !std::isfinite(wv[q].imag()))
        throw model_error("reciprocal characteristic function overflows", idx.m);
    }

    bool ok = true;
    auto finish = [&](std::vector<std::complex<double>>& S,
                      const std::vector<double>* weights) -> EmpiricalFit {
      EmpiricalFit fit;
      fit.model = idx;
      fit.nodes = ns;
      fit.h.resize(Q);
      for (std::size_t q = 0; q < Q; ++q)
        fit.h[q] = S[q] * inv_n * wv[q];
      fit.coeffs.model = idx;
      fit.coeffs.k_n = k_n;
      fit.coeffs.core = detail::core_coefficients(ns, fit.h, D, J);
      if (J < k_n) {
        detail::build_tail(data.z, weights, noise, D, sc.R, J + 1, fit.coeffs.tail);
        // consistency of the expansion with direct integration at j = J + 1
        double scale = 0.0;
        for (double c : fit.coeffs.core)
          scale = std::max(scale, std::abs(c));
        const double d1 = detail::single_coefficient(ns, fit.h, D, J + 1) - fit.coeffs.tail.value(J + 1);
        const double d2 = detail::single_coefficient(ns, fit.h, D, -(J + 1)) - fit.coeffs.tail.value(-(J + 1));
        // the trapezoid rule is too coarse for this comparison
        if (quad.rule == QuadRule::gauss_legendre &&
            std::max(std::abs(d1), std::abs(d2)) > 1e-9 * std::max(scale, 1e-300))
          ok = false;
      }
      return fit;
    };
    if (want_g)
      out.g = finish(Sg, nullptr);
    if (want_ell)
      out.ell = finish(Sl, &data.y);
    if (ok)
      return out;
  }
  throw numeric_error("coefficient tail expansion failed to converge for model m=" +
                      std::to_string(idx.m));
}

//! a_hat_{m,j}(g) = n^{-1} sum_i u^*_{phi_{m,j}}(Z_i), |j| <= k_n.
inline CoeffVector
estimate_coeffs_g(const Dataset& data,
                  const NoiseModel& noise,
                  const ModelIndex& idx,
                  std::int64_t k_n,
                  const QuadratureSpec& quad = {})
{
  return estimate_model(data, noise, idx, k_n, quad, true, false).g->coeffs;
}

//! a_hat_{m,j}(ell) = n^{-1} sum_i Y_i u^*_{phi_{m,j}}(Z_i), |j| <= k_n.
inline CoeffVector
estimate_coeffs_ell(const Dataset& data,
                    const NoiseModel& noise,
                    const ModelIndex& idx,
                    std::int64_t k_n,
                    const QuadratureSpec& quad = {})
{
  return estimate_model(data, noise, idx, k_n, quad, false, true).ell->coeffs;
}

//! Reference path: the double loop over observations and j, one kernel
//! integral per (i, j). Cost O(n k_n Q); meant for validation.
inline CoeffVector
estimate_coeffs_naive(const Dataset& data,
                      const NoiseModel& noise,
                      const ModelIndex& idx,
                      std::int64_t k_n,
                      bool weighted_by_y,
                      const QuadratureSpec& quad = {})
{
  validate(data, weighted_by_y);
  std::vector<double> c(static_cast<std::size_t>(2 * k_n + 1), 0.0);
  for (std::int64_t j = -k_n; j <= k_n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double wi = weighted_by_y ? data.y[i] : 1.0;
      acc += wi * deconv_kernel(noise, idx, j, data.z[i], quad);
    }
    c[static_cast<std::size_t>(j + k_n)] = acc / static_cast<double>(data.n());
  }
  return make_coeffs(idx, std::move(c));
}

//! gamma_n(t_hat_m) = -sum_j c_j^2 at the minimizer of the contrast on S_m^{(n)}.
inline double
contrast_value(const CoeffVector& c)
{
  return -sum_squares(c);
}

} // namespace eivreg
