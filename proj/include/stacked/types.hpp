#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace stacked {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr cplx kI{0.0, 1.0};

/// Raised when an evaluation point is within pole_radius of a lattice pole.
class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative method fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a point lies outside the coordinate chart it was requested in.
class ChartError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a contour integrand vanishes or blows up on its contour.
class ContourError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid inputs (bad names, malformed configurations).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace stacked
