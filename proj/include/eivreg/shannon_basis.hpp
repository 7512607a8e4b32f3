#pragma once

#include <algorithm>
#include <bit>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "eivreg/errors.hpp"
#include "eivreg/power_sums.hpp"
#include "eivreg/quadrature.hpp"

namespace eivreg {

//! Model m of the nested collection, with dimension D_m = m * step.
struct ModelIndex
{
  int m = 1;
  double dim = 1.0;
};

inline ModelIndex
make_model(int m, double step = 1.0)
{
  if (m < 1)
    throw std::invalid_argument("model index m must be >= 1");
  if (!(step > 0.0) || !std::isfinite(step))
    throw std::invalid_argument("dimension step must be positive");
  return { m, m * step };
}

//! sin(pi u) / (pi u), with a series branch near the removable singularity.
inline double
sinc(double u)
{
  if (std::abs(u) < 1e-4) {
    const double a = std::numbers::pi * u;
    const double a2 = a * a;
    return 1.0 - a2 / 6.0 + a2 * a2 / 120.0;
  }
  return std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
}

//! phi_{m,j}(x) = sqrt(D_m) sinc(D_m x - j).
inline double
phi(const ModelIndex& idx, std::int64_t j, double x)
{
  return std::sqrt(idx.dim) * sinc(idx.dim * x - static_cast<double>(j));
}

//! Closed-form representation of coefficients c_j for large |j|:
//!   c_{+-m} = sum_p [ (-1)^m alt[+-][p] + flat[+-][p] ] (R/m)^{p+1},   m >= start.
//! It comes from integrating the coefficient integral by parts and is exact up
//! to the truncation of the series in p.
struct TailExpansion
{
  std::int64_t start = 0;
  double scale = 1.0;
  std::array<std::vector<double>, 2> alt;  // [0]: j > 0, [1]: j < 0
  std::array<std::vector<double>, 2> flat;

  bool empty() const { return start == 0; }

  double value(std::int64_t j) const
  {
    const int side = j > 0 ? 0 : 1;
    const double m = static_cast<double>(j > 0 ? j : -j);
    const double sgn = ((j > 0 ? j : -j) % 2 == 0) ? 1.0 : -1.0;
    const double r = scale / m;
    double acc = 0.0;
    double rp = r;
    const auto& A = alt[side];
    const auto& B = flat[side];
    for (std::size_t p = 0; p < A.size(); ++p) {
      acc += (sgn * A[p] + B[p]) * rp;
      rp *= r;
    }
    return acc;
  }

  //! Same expansion written with a larger scale R' >= R.
  TailExpansion rescaled(double new_scale) const
  {
    TailExpansion out = *this;
    out.scale = new_scale;
    const double q = scale / new_scale;
    for (int side = 0; side < 2; ++side) {
      double f = q;
      for (std::size_t p = 0; p < alt[side].size(); ++p) {
        out.alt[side][p] *= f;
        out.flat[side][p] *= f;
        f *= q;
      }
    }
    return out;
  }
};

namespace detail {

struct PowerSumTable
{
  std::vector<double> flat; // index s: sum_{m >= a} (R/m)^s
  std::vector<double> alt;  // index s: sum_{m >= a} (-1)^m (R/m)^s
};

inline PowerSumTable
power_sums(double R, std::int64_t a, int s_max)
{
  PowerSumTable t;
  t.flat.assign(static_cast<std::size_t>(s_max) + 1, 0.0);
  t.alt.assign(static_cast<std::size_t>(s_max) + 1, 0.0);
  for (int s = 2; s <= s_max; ++s) {
    t.flat[s] = scaled_zeta_tail(s, R, a);
    t.alt[s] = scaled_alternating_tail(s, R, a);
  }
  return t;
}

} // namespace detail

//! Expansion of c_j = sqrt(D)/pi Re int_0^pi e^{ijv} H(v) dv for |j| >= start
//! from the scaled endpoint derivatives at_pi[p] = H^(p)(pi) / R^p and
//! at_zero[p] = H^(p)(0) / R^p.
inline TailExpansion
tail_from_derivatives(const std::vector<std::complex<double>>& at_pi,
                      const std::vector<std::complex<double>>& at_zero,
                      double D,
                      double R,
                      std::int64_t start)
{
  if (at_pi.size() != at_zero.size() || at_pi.empty())
    throw std::invalid_argument("tail_from_derivatives: derivative arrays must match");
  const std::size_t P = at_pi.size();
  const double pref = std::sqrt(D) / std::numbers::pi / R;
  TailExpansion out;
  out.start = start;
  out.scale = R;
  for (int side = 0; side < 2; ++side) {
    out.alt[side].assign(P, 0.0);
    out.flat[side].assign(P, 0.0);
    // u_p = 1 / (+-i)^{p+1}
    const std::complex<double> base = side == 0 ? std::complex<double>(0.0, -1.0)
                                                : std::complex<double>(0.0, 1.0);
    std::complex<double> u = base;
    double sign = 1.0; // (-1)^p
    for (std::size_t p = 0; p < P; ++p) {
      out.alt[side][p] = pref * sign * (at_pi[p] * u).real();
      out.flat[side][p] = -pref * sign * (at_zero[p] * u).real();
      u *= base;
      sign = -sign;
    }
  }
  return out;
}

//! sum over |j| >= a of c_j d_j for two tail expansions (a >= both starts).
inline double
tail_inner(const TailExpansion& c, const TailExpansion& d, std::int64_t a)
{
  if (c.empty() || d.empty())
    return 0.0;
  if (a < c.start || a < d.start)
    throw std::invalid_argument("tail_inner: range starts before the expansions");
  const double R = std::max(c.scale, d.scale);
  const TailExpansion cc = c.rescaled(R);
  const TailExpansion dd = d.rescaled(R);
  const int P = static_cast<int>(cc.alt[0].size());
  const int Q = static_cast<int>(dd.alt[0].size());
  const auto t = detail::power_sums(R, a, P + Q);
  double acc = 0.0;
  for (int side = 0; side < 2; ++side) {
    for (int p = 0; p < P; ++p) {
      for (int q = 0; q < Q; ++q) {
        const int s = p + q + 2;
        acc += (cc.alt[side][p] * dd.alt[side][q] + cc.flat[side][p] * dd.flat[side][q]) *
                 t.flat[s] +
               (cc.alt[side][p] * dd.flat[side][q] + cc.flat[side][p] * dd.alt[side][q]) *
                 t.alt[s];
      }
    }
  }
  return acc;
}

//! sum over |j| >= a of c_j phi_{m,j}(x); needs |D x| <= a / 2.
inline double
tail_reconstruct(const TailExpansion& c, double dim, std::int64_t a, double x)
{
  if (c.empty())
    return 0.0;
  const double y = dim * x;
  const double ad = static_cast<double>(a);
  if (std::abs(y) > 0.5 * ad)
    throw std::invalid_argument("tail_reconstruct: point outside the expansion radius");
  const TailExpansion cc = c.rescaled(std::max(c.scale, ad));
  const double R = cc.scale;
  const double ratio = std::abs(y) / R;
  int K = 1;
  if (ratio > 0.0) {
    K = static_cast<int>(std::ceil(std::log(1e-18) / std::log(ratio))) + 1;
    K = std::clamp(K, 1, 200);
  }
  const int P = static_cast<int>(cc.alt[0].size());
  const auto t = detail::power_sums(R, a, P + K + 1);
  // T_k^{+-} = R^{-(k+1)} sum_p [alt_p Z(p+k+2) + flat_p Zalt(p+k+2)].
  // Sum = -sum_k y^k T_k^+ + sum_k (-y)^k T_k^-.
  double acc = 0.0;
  double yk = 1.0 / R; // (y/R)^k / R
  double myk = 1.0 / R;
  for (int k = 0; k < K; ++k) {
    double Tp = 0.0;
    double Tm = 0.0;
    for (int p = 0; p < P; ++p) {
      const int s = p + k + 2;
      Tp += cc.alt[0][p] * t.flat[s] + cc.flat[0][p] * t.alt[s];
      Tm += cc.alt[1][p] * t.flat[s] + cc.flat[1][p] * t.alt[s];
    }
    acc += -yk * Tp + myk * Tm;
    yk *= y / R;
    myk *= -y / R;
  }
  return std::sqrt(dim) * std::sin(std::numbers::pi * y) / std::numbers::pi * acc;
}

//! Coefficients {c_j}, |j| <= k_n, of a function in S_m^{(n)}. Coefficients with
//! |j| <= core_radius() are stored; beyond that (when k_n is larger) they are
//! represented by a TailExpansion.
struct CoeffVector
{
  ModelIndex model;
  std::int64_t k_n = 0;
  std::vector<double> core; // j = -J..J, J = (core.size() - 1) / 2
  TailExpansion tail;

  std::int64_t core_radius() const
  {
    return static_cast<std::int64_t>((core.size() - 1) / 2);
  }

  std::size_t size() const { return static_cast<std::size_t>(2 * k_n + 1); }

  double operator[](std::int64_t j) const
  {
    const std::int64_t J = core_radius();
    if (j < -k_n || j > k_n)
      throw std::out_of_range("coefficient index outside [-k_n, k_n]");
    if (j >= -J && j <= J)
      return core[static_cast<std::size_t>(j + J)];
    return tail.value(j);
  }

  //! All 2 k_n + 1 coefficients, j = -k_n..k_n.
  std::vector<double> dense() const
  {
    std::vector<double> out(size());
    for (std::int64_t j = -k_n; j <= k_n; ++j)
      out[static_cast<std::size_t>(j + k_n)] = (*this)[j];
    return out;
  }
};

//! Builds a fully stored coefficient vector from j = -k..k values.
inline CoeffVector
make_coeffs(const ModelIndex& model, std::vector<double> values)
{
  if (values.size() % 2 != 1)
    throw std::invalid_argument("coefficient array must have odd length 2k+1");
  CoeffVector c;
  c.model = model;
  c.k_n = static_cast<std::int64_t>((values.size() - 1) / 2);
  c.core = std::move(values);
  return c;
}

//! sum_{|j| <= k_n} c_j d_j; both vectors must share model and k_n.
inline double
inner_product(const CoeffVector& c, const CoeffVector& d)
{
  if (c.k_n != d.k_n || c.model.dim != d.model.dim)
    throw std::invalid_argument("inner_product: vectors live in different spaces");
  const std::int64_t J = std::min({ c.core_radius(), d.core_radius(), c.k_n });
  double acc = 0.0;
  for (std::int64_t j = -J; j <= J; ++j)
    acc += c[j] * d[j];
  if (J == c.k_n)
    return acc;
  // middle band where only one side is stored
  const std::int64_t J2 = std::min(std::max(c.core_radius(), d.core_radius()), c.k_n);
  for (std::int64_t j = J + 1; j <= J2; ++j)
    acc += c[j] * d[j] + c[-j] * d[-j];
  if (J2 == c.k_n)
    return acc;
  return acc + tail_inner(c.tail, d.tail, J2 + 1) - tail_inner(c.tail, d.tail, c.k_n + 1);
}

//! sum_{|j| <= k_n} c_j^2, the squared L2 norm of the represented function.
inline double
sum_squares(const CoeffVector& c)
{
  return inner_product(c, c);
}

//! sum_{|j| <= k_n} c_j phi_{m,j}(x) at every grid point.
inline std::vector<double>
reconstruct(const CoeffVector& c, const std::vector<double>& grid)
{
  std::vector<double> out(grid.size(), 0.0);
  const std::int64_t J = std::min(c.core_radius(), c.k_n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    double acc = 0.0;
    for (std::int64_t j = -J; j <= J; ++j) {
      const double cj = c.core[static_cast<std::size_t>(j + c.core_radius())];
      if (cj != 0.0)
        acc += cj * phi(c.model, j, x);
    }
    if (J < c.k_n) {
      const double y = c.model.dim * x;
      if (std::abs(y) <= 0.5 * static_cast<double>(J + 1)) {
        acc += tail_reconstruct(c.tail, c.model.dim, J + 1, x) -
               tail_reconstruct(c.tail, c.model.dim, c.k_n + 1, x);
      } else {
        for (std::int64_t j = J + 1; j <= c.k_n; ++j)
          acc += c.tail.value(j) * phi(c.model, j, x) +
                 c.tail.value(-j) * phi(c.model, -j, x);
      }
    }
    out[i] = acc;
  }
  return out;
}

//! Fourier transform psi^*(t) = int e^{itx} psi(x) dx of a real function.
using FourierFn = std::function<std::complex<double>(double)>;

namespace detail {

// Number of Gauss-Legendre nodes resolving e^{i omega v} on an interval of
// length pi.
inline std::size_t
nodes_for_frequency(double omega)
{
  const double lambda = 0.5 * std::numbers::pi * std::max(omega, 0.0);
  return static_cast<std::size_t>(std::ceil(0.5 * lambda + 8.0 * std::cbrt(lambda) + 32.0));
}

} // namespace detail

//! Exact projection coefficients a_{m,j} = <phi_{m,j}, psi> from the Fourier
//! transform: a_j = sqrt(D)/pi Re int_0^pi e^{ijv} psi^*(-D v) dv.
//! The node count doubles until two successive rules agree to rel_tol.
inline CoeffVector
project_oracle(const FourierFn& fstar,
               const ModelIndex& idx,
               std::int64_t k_n,
               double rel_tol = 1e-12)
{
  if (k_n < 0)
    throw std::invalid_argument("project_oracle: k_n must be >= 0");
  const double D = idx.dim;
  const double pref = std::sqrt(D) / std::numbers::pi;
  auto evaluate = [&](std::size_t Q) {
    std::vector<double> v;
    std::vector<double> w;
    mapped_gauss_legendre(Q, 0.0, std::numbers::pi, v, w);
    std::vector<std::complex<double>> h(Q);
    for (std::size_t q = 0; q < Q; ++q)
      h[q] = w[q] * fstar(-D * v[q]);
    std::vector<double> a(static_cast<std::size_t>(2 * k_n + 1));
    for (std::int64_t j = -k_n; j <= k_n; ++j) {
      std::complex<double> acc = 0.0;
      for (std::size_t q = 0; q < Q; ++q)
        acc += std::polar(1.0, static_cast<double>(j) * v[q]) * h[q];
      a[static_cast<std::size_t>(j + k_n)] = pref * acc.real();
    }
    return a;
  };
  std::size_t Q = detail::nodes_for_frequency(static_cast<double>(k_n) + 4.0 * D) + 32;
  // order grid with eight steps per octave
  if (Q > 512) {
    const std::size_t step = std::bit_floor(Q) / 8;
    Q = (Q + step - 1) / step * step;
  }
  std::vector<double> prev = evaluate(Q);
  double err = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 8; ++round) {
    Q *= 2;
    std::vector<double> next = evaluate(Q);
    double scale = 0.0;
    err = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      scale = std::max(scale, std::abs(next[i]));
      err = std::max(err, std::abs(next[i] - prev[i]));
    }
    prev = std::move(next);
    if (err <= rel_tol * std::max(scale, 1e-300))
      return make_coeffs(idx, std::move(prev));
  }
  throw quadrature_error("project_oracle: coefficients did not converge", err);
}

//! Tail expansion of the projection coefficients of project_oracle for
//! |j| >= start, to fourth order, with endpoint derivatives of psi^*(-D v)
//! taken by central differences.
inline TailExpansion
oracle_tail(const FourierFn& fstar, const ModelIndex& idx, std::int64_t start, double R)
{
  const double D = idx.dim;
  const double h = 1e-3;
  const double hc = 1e-2;
  auto H = [&](double v) { return fstar(-D * v); };
  std::vector<std::complex<double>> ends[2];
  const double at[2] = { std::numbers::pi, 0.0 };
  for (int e = 0; e < 2; ++e) {
    const double v = at[e];
    const auto f2m = H(v - 2 * h);
    const auto f1m = H(v - h);
    const auto f0 = H(v);
    const auto f1p = H(v + h);
    const auto f2p = H(v + 2 * h);
    const auto d1 = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
    const auto d2 = (-f2p + 16.0 * f1p - 30.0 * f0 + 16.0 * f1m - f2m) / (12.0 * h * h);
    const auto g2m = H(v - 2 * hc);
    const auto g1m = H(v - hc);
    const auto g1p = H(v + hc);
    const auto g2p = H(v + 2 * hc);
    const auto d3 = (g2p - 2.0 * g1p + 2.0 * g1m - g2m) / (2.0 * hc * hc * hc);
    const auto d4 = (g2p - 4.0 * g1p + 6.0 * f0 - 4.0 * g1m + g2m) / (hc * hc * hc * hc);
    ends[e] = { f0, d1 / R, d2 / (R * R), d3 / (R * R * R), d4 / (R * R * R * R) };
  }
  return tail_from_derivatives(ends[0], ends[1], D, R, start);
}

//! The same coefficients restricted to |j| <= k (k <= c.k_n).
inline CoeffVector
truncated(const CoeffVector& c, std::int64_t k)
{
  if (k < 0 || k > c.k_n)
    throw std::invalid_argument("truncated: k outside [0, k_n]");
  CoeffVector out = c;
  out.k_n = k;
  const std::int64_t J = c.core_radius();
  if (k < J) {
    out.core.assign(c.core.begin() + (J - k), c.core.begin() + (J + k + 1));
    out.tail = TailExpansion{};
  }
  return out;
}

//! Squared L2 distance between psi and its projection on S_m:
//! pi^{-1} int_{pi D}^{inf} |psi^*(t)|^2 dt (psi real, so |psi^*| is even).
inline double
projection_bias(const FourierFn& fstar, const ModelIndex& idx)
{
  auto sq = [&](double t) { return std::norm(fstar(t)); };
  const double lo = std::numbers::pi * idx.dim;
  const auto r = integrate_adaptive(sq, lo, std::numeric_limits<double>::infinity(), 1e-10,
                                    "projection_bias", 1e-300);
  return r.value / std::numbers::pi;
}

//! Squared L2 norm (2 pi)^{-1} int |psi^*|^2 of a real function.
inline double
l2_norm_squared(const FourierFn& fstar)
{
  auto sq = [&](double t) { return std::norm(fstar(t)); };
  const auto r = integrate_adaptive(sq, 0.0, std::numeric_limits<double>::infinity(), 1e-12,
                                    "l2_norm_squared", 1e-300);
  return r.value / std::numbers::pi;
}

} // namespace eivreg
