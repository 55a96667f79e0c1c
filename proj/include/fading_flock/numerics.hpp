#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "fading_flock/error.hpp"

// Thin wrappers over Boost.Math so the rest of the library states tolerances
// in one place.
namespace fading_flock::numerics {

/// Adaptive Gauss-Kronrod (15-point) integral of f over [a, b]; orientation respected. Depth is capped
/// because roundoff can keep the error estimate above 1e-14 relative on steep integrands.
template <class F>
double integrate(F&& f, double a, double b, double* error_estimate = nullptr) {
  if (a == b) {
    if (error_estimate) *error_estimate = 0.0;
    return 0.0;
  }
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 12, 1e-14, &err);
  if (error_estimate) *error_estimate = err;
  return value;
}

/// Final bracket around the root of f in [lo, hi] (f(lo), f(hi) of opposite sign), a few ulps wide.
template <class F>
std::pair<double, double> bracket_root(F&& f, double lo, double hi) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, lo};
  if (fhi == 0.0) return {hi, hi};
  if ((flo > 0) == (fhi > 0)) throw Error("root not bracketed");
  std::uintmax_t max_iter = 400;
  return boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50),
                                           max_iter);
}

/// Root of f bracketed by [lo, hi], to full double precision.
template <class F>
double find_root(F&& f, double lo, double hi) {
  const auto [left, right] = bracket_root(f, lo, hi);
  return 0.5 * (left + right);
}

struct Minimum {
  double x;
  double value;
};

/// Bounded scalar minimization (Brent: golden-section with parabolic steps) plus endpoint comparison.
template <class F>
Minimum minimize_bounded(F&& f, double lo, double hi) {
  Minimum best{lo, f(lo)};
  if (const double fh = f(hi); fh < best.value) best = {hi, fh};
  if (hi > lo) {
    std::uintmax_t max_iter = 500;
    auto [x, fx] = boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits / 2, max_iter);
    if (fx < best.value) best = {x, fx};
  }
  return best;
}

}  // namespace fading_flock::numerics
