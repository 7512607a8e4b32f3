#pragma once

#include <boost/math/special_functions/bernoulli.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace eivreg {

namespace detail {

// m^{-s} scaled as (R/m)^s to stay inside the double range.
inline double
scaled_power(double R, double m, double s)
{
  return std::exp(s * std::log(R / m));
}

constexpr long direct_terms = 64;

} // namespace detail

//! sum_{m >= a} (R/m)^s for s > 1 and a >= 1, by direct summation of the first
//! terms followed by Euler-Maclaurin.
inline double
scaled_zeta_tail(double s, double R, long a)
{
  if (!(s > 1.0))
    throw std::invalid_argument("scaled_zeta_tail: need s > 1");
  if (a < 1)
    throw std::invalid_argument("scaled_zeta_tail: need a >= 1");
  double acc = 0.0;
  long m = a;
  for (; m < detail::direct_terms; ++m)
    acc += detail::scaled_power(R, static_cast<double>(m), s);
  const double am = static_cast<double>(m);
  const double t0 = detail::scaled_power(R, am, s);
  if (t0 == 0.0)
    return acc;
  double sum = am * t0 / (s - 1.0) + 0.5 * t0;
  // sum_k B_{2k}/(2k)! (s)_{2k-1} a^{1-2k} t0, with (s)_q the rising factorial.
  double rising = s;      // (s)_1
  double inv_fact = 0.5;  // 1/2!
  double apow = am;       // a^{2k-1}
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 12; ++k) {
    const double term =
      boost::math::bernoulli_b2n<double>(k) * inv_fact * rising / apow * t0;
    if (std::abs(term) > last)
      break; // asymptotic series started to diverge
    sum += term;
    last = std::abs(term);
    if (last <= 1e-18 * std::abs(sum))
      break;
    rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
    inv_fact /= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    apow *= am * am;
  }
  return acc + sum;
}

//! sum_{m >= a} (-1)^m (R/m)^s for s > 0 and a >= 1, by direct summation of the
//! first terms followed by the Euler-Boole formula.
inline double
scaled_alternating_tail(double s, double R, long a)
{
  if (!(s > 0.0))
    throw std::invalid_argument("scaled_alternating_tail: need s > 0");
  if (a < 1)
    throw std::invalid_argument("scaled_alternating_tail: need a >= 1");
  double acc = 0.0;
  long m = a;
  for (; m < detail::direct_terms; ++m)
    acc += (m % 2 == 0 ? 1.0 : -1.0) * detail::scaled_power(R, static_cast<double>(m), s);
  const double am = static_cast<double>(m);
  const double t0 = detail::scaled_power(R, am, s);
  if (t0 == 0.0)
    return acc;
  // sum_{i>=0} (-1)^i f(a+i) = 1/2 [f(a) + sum_{odd k} E_k(0)/k! f^(k)(a)],
  // E_k(0) = -2 (2^{k+1} - 1) B_{k+1} / (k+1), f^(k)(a) = -(s)_k a^{-k} t0.
  double bracket = 1.0;
  double rising = s;    // (s)_k
  double inv_fact = 1.0; // 1/k!
  double apow = am;     // a^k
  double two_pow = 4.0; // 2^{k+1}
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 25; k += 2) {
    const double ek = -2.0 * (two_pow - 1.0) *
                      boost::math::bernoulli_b2n<double>((k + 1) / 2) / (k + 1.0);
    const double term = -ek * inv_fact * rising / apow;
    if (std::abs(term) > last)
      break;
    bracket += term;
    last = std::abs(term);
    if (last <= 1e-18)
      break;
    rising *= (s + k) * (s + k + 1.0);
    inv_fact /= (k + 1.0) * (k + 2.0);
    apow *= am * am;
    two_pow *= 4.0;
  }
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return acc + sign * 0.5 * t0 * bracket;
}

} // namespace eivreg
