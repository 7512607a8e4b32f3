#pragma once

#include <stdexcept>
#include <string>

namespace eivreg {

//! Numerical failure (overflow, underflow, non-convergence) during estimation.
class numeric_error : public std::runtime_error
{
public:
  explicit numeric_error(const std::string& what)
    : std::runtime_error(what)
  {}
};

//! Quadrature that failed to reach its tolerance; carries the achieved error.
class quadrature_error : public numeric_error
{
public:
  quadrature_error(const std::string& what, double achieved_error)
    : numeric_error(what + " (achieved error " + std::to_string(achieved_error) +
                    ")")
    , achieved_error_(achieved_error)
  {}

  double achieved_error() const { return achieved_error_; }

private:
  double achieved_error_;
};

//! A model index m whose computations cannot be carried out for this noise
//! level (e.g. the characteristic function underflows on the band).
class model_error : public numeric_error
{
public:
  model_error(const std::string& what, int m)
    : numeric_error(what + " (model m=" + std::to_string(m) + ")")
    , m_(m)
  {}

  int model() const { return m_; }

private:
  int m_;
};

} // namespace eivreg
