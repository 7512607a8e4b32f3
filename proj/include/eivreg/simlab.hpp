#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "eivreg/deconv_core.hpp"
#include "eivreg/noise_models.hpp"
#include "eivreg/random.hpp"
#include "eivreg/shannon_basis.hpp"

namespace eivreg {

//! Regression functions: f = c, f(x) = x, f(x) = sin(pi x), f(x) = exp(-x^2).
enum class RegressionFn
{
  constant,
  linear,
  sine,
  bump
};

//! Designs: N(0, 1); 0.5 N(-1, 0.5^2) + 0.5 N(1, 0.5^2); density exp(-|x|)/2.
enum class DesignKind
{
  normal,
  normal_mixture,
  laplace
};

enum class XiLaw
{
  normal,
  student_t
};

inline std::string
to_string(RegressionFn f)
{
  switch (f) {
    case RegressionFn::constant:
      return "constant";
    case RegressionFn::linear:
      return "linear";
    case RegressionFn::sine:
      return "sine";
    case RegressionFn::bump:
      return "bump";
  }
  return "unknown";
}

inline std::string
to_string(DesignKind g)
{
  switch (g) {
    case DesignKind::normal:
      return "normal";
    case DesignKind::normal_mixture:
      return "normal_mixture";
    case DesignKind::laplace:
      return "laplace";
  }
  return "unknown";
}

inline std::string
to_string(XiLaw law)
{
  return law == XiLaw::normal ? "normal" : "student_t";
}

inline RegressionFn
parse_regression_fn(const std::string& s)
{
  if (s == "constant")
    return RegressionFn::constant;
  if (s == "linear")
    return RegressionFn::linear;
  if (s == "sine")
    return RegressionFn::sine;
  if (s == "bump")
    return RegressionFn::bump;
  throw std::invalid_argument("unknown regression function '" + s +
                              "' (expected constant, linear, sine or bump)");
}

inline DesignKind
parse_design(const std::string& s)
{
  if (s == "normal")
    return DesignKind::normal;
  if (s == "normal_mixture")
    return DesignKind::normal_mixture;
  if (s == "laplace")
    return DesignKind::laplace;
  throw std::invalid_argument("unknown design '" + s + "' (expected normal, normal_mixture or laplace)");
}

inline XiLaw
parse_xi_law(const std::string& s)
{
  if (s == "normal")
    return XiLaw::normal;
  if (s == "student_t")
    return XiLaw::student_t;
  throw std::invalid_argument("unknown xi law '" + s + "' (expected normal or student_t)");
}

//! Smoothness classes of ell and g: integral of |psi^*(x)|^2 (x^2+1)^a exp(2B|x|^r) finite.
struct ScenarioSmoothness
{
  double a_ell = 0.0;
  double r_ell = 0.0;
  double B_ell = 0.0;
  double a_g = 0.0;
  double r_g = 0.0;
  double B_g = 0.0;
};

struct Scenario
{
  RegressionFn f = RegressionFn::sine;
  //! Value of f for RegressionFn::constant.
  double f_constant = 1.0;
  DesignKind g = DesignKind::normal;
  //! Standard deviation of xi.
  double xi_sd = 0.2;
  XiLaw xi_law = XiLaw::normal;
  //! Degrees of freedom of the Student-t law of xi.
  double xi_df = 10.0;
  NoiseModel noise;
  std::size_t n = 1000;
  std::optional<ScenarioSmoothness> smoothness;
};

inline void
validate(const Scenario& s)
{
  validate(s.noise);
  if (s.n < 1)
    throw std::invalid_argument("scenario: n must be >= 1");
  if (!(s.xi_sd >= 0.0) || !std::isfinite(s.xi_sd))
    throw std::invalid_argument("scenario: xi_sd must be finite and >= 0");
  if (!std::isfinite(s.f_constant))
    throw std::invalid_argument("scenario: constant value must be finite");
  if (s.xi_law == XiLaw::student_t && !(s.xi_df >= 9.0))
    throw std::invalid_argument("scenario: Student-t xi needs df >= 9 for a finite eighth moment");
  if (s.smoothness) {
    const auto& m = *s.smoothness;
    for (double v : { m.a_ell, m.r_ell, m.B_ell, m.a_g, m.r_g, m.B_g })
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("scenario: smoothness parameters must be finite and >= 0");
  }
}

struct SimDataset
{
  //! The unobserved X, kept for diagnostics only.
  std::vector<double> x_hidden;
  std::vector<double> y;
  std::vector<double> z;
  std::uint64_t seed = 0;

  Dataset observed() const { return Dataset{ y, z }; }
};

struct NormalComponent
{
  double weight;
  double mean;
  double sd;
};

//! Normal components of a Gaussian design; empty for the Laplace design.
inline std::vector<NormalComponent>
design_components(DesignKind g)
{
  switch (g) {
    case DesignKind::normal:
      return { { 1.0, 0.0, 1.0 } };
    case DesignKind::normal_mixture:
      return { { 0.5, -1.0, 0.5 }, { 0.5, 1.0, 0.5 } };
    case DesignKind::laplace:
      return {};
  }
  return {};
}

inline double
regression_value(const Scenario& s, double x)
{
  switch (s.f) {
    case RegressionFn::constant:
      return s.f_constant;
    case RegressionFn::linear:
      return x;
    case RegressionFn::sine:
      return std::sin(std::numbers::pi * x);
    case RegressionFn::bump:
      return std::exp(-x * x);
  }
  return 0.0;
}

inline double
design_density(DesignKind g, double x)
{
  if (g == DesignKind::laplace)
    return 0.5 * std::exp(-std::abs(x));
  double acc = 0.0;
  for (const auto& c : design_components(g)) {
    const double u = (x - c.mean) / c.sd;
    acc += c.weight * std::exp(-0.5 * u * u) / (c.sd * std::sqrt(2.0 * std::numbers::pi));
  }
  return acc;
}

inline double
draw_design(DesignKind g, Engine& eng)
{
  if (g == DesignKind::laplace) {
    const double u = uniform_open01(eng) - 0.5;
    return u < 0.0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
  }
  const auto comps = design_components(g);
  std::size_t k = 0;
  if (comps.size() > 1) {
    double u = uniform_open01(eng);
    while (k + 1 < comps.size() && u > comps[k].weight) {
      u -= comps[k].weight;
      ++k;
    }
  }
  std::normal_distribution<double> normal(comps[k].mean, comps[k].sd);
  return normal(eng);
}

inline double
draw_xi(const Scenario& s, Engine& eng)
{
  if (s.xi_sd == 0.0)
    return 0.0;
  if (s.xi_law == XiLaw::normal) {
    std::normal_distribution<double> normal(0.0, s.xi_sd);
    return normal(eng);
  }
  std::student_t_distribution<double> t(s.xi_df);
  return s.xi_sd * std::sqrt((s.xi_df - 2.0) / s.xi_df) * t(eng);
}

namespace stream {
constexpr std::uint64_t design = 1;
constexpr std::uint64_t response = 2;
constexpr std::uint64_t measurement = 3;
} // namespace stream

//! Draws (X, xi, eps) from independent streams and forms Y = f(X) + xi, Z = X + sigma eps.
inline SimDataset
generate(const Scenario& s, std::uint64_t seed)
{
  validate(s);
  Engine ex = make_engine(seed, stream::design);
  Engine exi = make_engine(seed, stream::response);
  Engine eeps = make_engine(seed, stream::measurement);
  SimDataset out;
  out.seed = seed;
  out.x_hidden.resize(s.n);
  out.y.resize(s.n);
  for (std::size_t i = 0; i < s.n; ++i)
    out.x_hidden[i] = draw_design(s.g, ex);
  for (std::size_t i = 0; i < s.n; ++i)
    out.y[i] = regression_value(s, out.x_hidden[i]) + draw_xi(s, exi);
  const auto eps = sample_noise(s.noise, s.n, eeps);
  out.z.resize(s.n);
  for (std::size_t i = 0; i < s.n; ++i)
    out.z[i] = out.x_hidden[i] + eps[i];
  return out;
}

struct TrueCurves
{
  std::vector<double> f;
  std::vector<double> g;
  std::vector<double> ell;
};

inline TrueCurves
true_curves(const Scenario& s, const std::vector<double>& grid)
{
  TrueCurves out;
  out.f.resize(grid.size());
  out.g.resize(grid.size());
  out.ell.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.f[i] = regression_value(s, grid[i]);
    out.g[i] = design_density(s.g, grid[i]);
    out.ell[i] = out.f[i] * out.g[i];
  }
  return out;
}

//! Fourier transforms u^*(t) = int e^{itx} u(x) dx of g and ell = f g.
struct FourierOracle
{
  FourierFn g_star;
  FourierFn ell_star;
};

namespace detail {

using cplx = std::complex<double>;

inline cplx
normal_cf(const NormalComponent& c, double t)
{
  return std::exp(cplx(-0.5 * c.sd * c.sd * t * t, c.mean * t));
}

inline cplx
design_cf(DesignKind g, double t)
{
  if (g == DesignKind::laplace)
    return 1.0 / (1.0 + t * t);
  cplx acc = 0.0;
  for (const auto& c : design_components(g))
    acc += c.weight * normal_cf(c, t);
  return acc;
}

// transform of x g(x): -i d/dt g^*(t)
inline cplx
linear_cf(DesignKind g, double t)
{
  if (g == DesignKind::laplace)
    return cplx(0.0, 2.0 * t / ((1.0 + t * t) * (1.0 + t * t)));
  cplx acc = 0.0;
  for (const auto& c : design_components(g))
    acc += c.weight * cplx(c.mean, c.sd * c.sd * t) * normal_cf(c, t);
  return acc;
}

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0 by Weideman's
// rational expansion with 32 terms.
inline cplx
faddeeva_w(cplx z)
{
  constexpr int N = 32;
  constexpr int M = 2 * N;
  static const std::vector<double> coef = [] {
    const double L = std::sqrt(N / std::sqrt(2.0));
    std::vector<double> a(N + 1, 0.0);
    for (int n = 1; n <= N; ++n) {
      double acc = 0.0;
      for (int k = -M + 1; k <= M - 1; ++k) {
        const double t = L * std::tan(k * std::numbers::pi / (2.0 * M));
        acc += std::exp(-t * t) * (L * L + t * t) * std::cos(std::numbers::pi * k * n / M);
      }
      a[static_cast<std::size_t>(n)] = acc / (2.0 * M);
    }
    return a;
  }();
  const double L = std::sqrt(N / std::sqrt(2.0));
  const cplx iz(-z.imag(), z.real());
  const cplx Z = (L + iz) / (L - iz);
  cplx p = 0.0;
  for (int n = N; n >= 1; --n)
    p = p * Z + coef[static_cast<std::size_t>(n)];
  return 2.0 * p / ((L - iz) * (L - iz)) + (1.0 / std::sqrt(std::numbers::pi)) / (L - iz);
}

// transform of exp(-x^2) g(x)
inline cplx
bump_cf(DesignKind g, double t)
{
  if (g == DesignKind::laplace) {
    // int_0^inf exp(-x^2 - (1 - it) x) dx = sqrt(pi)/2 w((t + i)/2), real part by symmetry
    return 0.5 * std::sqrt(std::numbers::pi) * faddeeva_w(cplx(0.5 * t, 0.5)).real();
  }
  cplx acc = 0.0;
  for (const auto& c : design_components(g)) {
    // exp(-x^2) N(mu, s^2) = A N(mu', s'^2)
    const double s2 = c.sd * c.sd;
    const double v = s2 / (1.0 + 2.0 * s2);
    const double mu = c.mean / (1.0 + 2.0 * s2);
    const double A = std::exp(-c.mean * c.mean / (1.0 + 2.0 * s2)) / std::sqrt(1.0 + 2.0 * s2);
    acc += c.weight * A * normal_cf({ 1.0, mu, std::sqrt(v) }, t);
  }
  return acc;
}

} // namespace detail

inline FourierOracle
fourier_oracle(const Scenario& s)
{
  const DesignKind g = s.g;
  FourierOracle out;
  out.g_star = [g](double t) { return detail::design_cf(g, t); };
  switch (s.f) {
    case RegressionFn::constant: {
      const double c = s.f_constant;
      out.ell_star = [g, c](double t) { return c * detail::design_cf(g, t); };
      break;
    }
    case RegressionFn::linear:
      out.ell_star = [g](double t) { return detail::linear_cf(g, t); };
      break;
    case RegressionFn::sine:
      out.ell_star = [g](double t) {
        const double pi = std::numbers::pi;
        return (detail::design_cf(g, t + pi) - detail::design_cf(g, t - pi)) / std::complex<double>(0.0, 2.0);
      };
      break;
    case RegressionFn::bump:
      out.ell_star = [g](double t) { return detail::bump_cf(g, t); };
      break;
  }
  return out;
}

//! Smoothness classes honestly satisfied by the built-in combinations:
//! Gaussian-type transforms for the normal designs, polynomial decay of
//! order 2 (g, f = c, f = exp(-x^2)) or 3 (f = x, f = sin(pi x)) for the
//! Laplace design.
inline ScenarioSmoothness
builtin_smoothness(RegressionFn f, DesignKind g)
{
  ScenarioSmoothness out;
  if (g == DesignKind::laplace) {
    out.a_g = 1.0;
    out.a_ell = (f == RegressionFn::linear || f == RegressionFn::sine) ? 2.0 : 1.0;
    return out;
  }
  // |g^*|^2 decays like exp(-s^2 t^2) with s^2 = 1 (normal) or 1/4 (mixture),
  // and exp(-x^2) shrinks the variance to s^2 / (1 + 2 s^2)
  const double s2 = g == DesignKind::normal ? 1.0 : 0.25;
  out.r_ell = out.r_g = 2.0;
  out.B_g = 0.4 * s2;
  out.B_ell = f == RegressionFn::bump ? 0.4 * s2 / (1.0 + 2.0 * s2) : out.B_g;
  return out;
}

enum class RateTarget
{
  ell_fit,
  density_fit,
  regression
};

inline std::string
to_string(RateTarget t)
{
  switch (t) {
    case RateTarget::ell_fit:
      return "ell";
    case RateTarget::density_fit:
      return "density";
    case RateTarget::regression:
      return "regression";
  }
  return "unknown";
}

//! Rate of the form n^{n_exponent} (ln n)^{log_exponent}, or an implicit rate.
struct RateDescriptor
{
  bool implicit = false;
  double n_exponent = 0.0;
  double log_exponent = 0.0;
  std::string formula;

  double value(double n) const
  {
    if (implicit)
      throw std::logic_error("implicit rate has no closed form");
    return std::pow(n, n_exponent) * std::pow(std::log(n), log_exponent);
  }

  //! Least-squares slope of log(rate) against log(n) over the given sizes.
  double effective_slope(const std::vector<double>& ns) const
  {
    if (implicit)
      throw std::logic_error("implicit rate has no slope");
    if (ns.size() < 2)
      throw std::invalid_argument("effective_slope: need at least 2 sample sizes");
    double mx = 0.0;
    double my = 0.0;
    for (double n : ns) {
      mx += std::log(n);
      my += std::log(value(n));
    }
    mx /= static_cast<double>(ns.size());
    my /= static_cast<double>(ns.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (double n : ns) {
      const double dx = std::log(n) - mx;
      sxy += dx * (std::log(value(n)) - my);
      sxx += dx * dx;
    }
    return sxy / sxx;
  }
};

inline RateDescriptor
predicted_rate(const Scenario& s, RateTarget target)
{
  if (!s.smoothness)
    throw std::invalid_argument("predicted_rate: scenario has no smoothness metadata");
  const auto& m = *s.smoothness;
  double a = 0.0;
  double r = 0.0;
  switch (target) {
    case RateTarget::ell_fit:
      a = m.a_ell;
      r = m.r_ell;
      break;
    case RateTarget::density_fit:
      a = m.a_g;
      r = m.r_g;
      break;
    case RateTarget::regression:
      a = std::min(m.a_ell, m.a_g);
      r = std::min(m.r_ell, m.r_g);
      break;
  }
  const double alpha = s.noise.alpha;
  const double rho = s.noise.rho;
  RateDescriptor out;
  auto num = [](double v) {
    std::string t = std::to_string(v);
    t.erase(t.find_last_not_of('0') + 1);
    if (t.back() == '.')
      t.pop_back();
    return t;
  };
  if (rho == 0.0 && r == 0.0) {
    out.n_exponent = -2.0 * a / (2.0 * alpha + 2.0 * a + 1.0);
    out.formula = "n^(" + num(out.n_exponent) + ")";
  } else if (rho == 0.0) {
    out.n_exponent = -1.0;
    out.log_exponent = (2.0 * alpha + 1.0) / r;
    out.formula = "(ln n)^(" + num(out.log_exponent) + ")/n";
  } else if (r == 0.0) {
    out.log_exponent = -2.0 * a / rho;
    out.formula = "(ln n)^(" + num(out.log_exponent) + ")";
  } else {
    out.implicit = true;
    out.formula = "implicit";
  }
  return out;
}

} // namespace eivreg
