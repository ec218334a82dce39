#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <numbers>

namespace cpo::quad {

// Adaptive Gauss-Kronrod (7/15) on [a, b]; works for real or complex
// integrands.
template <typename F>
auto integrate(F&& f, double a, double b, double rel_tol = 1e-12, double* error = nullptr) {
  double err = 0.0;
  auto value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 20, rel_tol, &err);
  if (error) *error = err;
  return value;
}

}  // namespace cpo::quad
