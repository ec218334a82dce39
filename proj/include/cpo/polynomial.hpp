#pragma once

#include <complex>
#include <span>
#include <vector>

namespace cpo {

using Cx = std::complex<double>;

// Horner evaluation; coefficients are ordered c0, c1, ..., cd.
template <typename Coef, typename Arg>
auto horner(std::span<const Coef> coeffs, Arg z) {
  using R = decltype(Coef{} * z);
  R acc{};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

std::vector<Cx> derivative(std::span<const Cx> coeffs);
std::vector<double> derivative(std::span<const double> coeffs);

// All roots of sum c_k z^k (c_d != 0) from companion-matrix eigenvalues,
// each polished by Newton iteration on the original polynomial.
std::vector<Cx> polynomial_roots(std::span<const Cx> coeffs);

// Lexicographic (real, imaginary) order with a tolerance on the real part so
// that conjugate pairs sort deterministically.
void sort_lexicographic(std::vector<Cx>& points, double real_tol = 1e-9);

}  // namespace cpo
