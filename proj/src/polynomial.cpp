#include "cpo/polynomial.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "cpo/errors.hpp"

namespace cpo {

std::vector<Cx> derivative(std::span<const Cx> coeffs) {
  std::vector<Cx> d;
  for (std::size_t k = 1; k < coeffs.size(); ++k) d.push_back(coeffs[k] * double(k));
  return d;
}

std::vector<double> derivative(std::span<const double> coeffs) {
  std::vector<double> d;
  for (std::size_t k = 1; k < coeffs.size(); ++k) d.push_back(coeffs[k] * double(k));
  return d;
}

std::vector<Cx> polynomial_roots(std::span<const Cx> coeffs) {
  std::size_t deg = coeffs.size();
  while (deg > 0 && coeffs[deg - 1] == Cx{}) --deg;
  if (deg < 2) return {};
  const int n = int(deg) - 1;
  const Cx lead = coeffs[deg - 1];

  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -coeffs[i] / lead;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success)
    throw NumericalError("root_finding", "companion eigenvalue iteration failed");

  std::span<const Cx> poly = coeffs.first(deg);
  const auto dpoly = derivative(poly);
  std::vector<Cx> roots(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  for (auto& z : roots) {
    for (int it = 0; it < 8; ++it) {
      const Cx f = horner(poly, z);
      const Cx df = horner(std::span<const Cx>(dpoly), z);
      if (df == Cx{}) break;
      const Cx step = f / df;
      // Newton only improves a simple root; stop once it stalls.
      if (!(std::abs(step) < 1e-3 * (1.0 + std::abs(z)))) break;
      z -= step;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(z))) break;
    }
  }
  return roots;
}

void sort_lexicographic(std::vector<Cx>& points, double real_tol) {
  std::sort(points.begin(), points.end(), [real_tol](Cx a, Cx b) {
    if (std::abs(a.real() - b.real()) > real_tol) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

}  // namespace cpo
