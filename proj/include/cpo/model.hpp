/*
 * model.hpp: polynomial potentials and their complexified energy curves.
 *
 * The Hamiltonian is always H(q, p) = p^2 + V(q) with V a real polynomial of
 * even degree and positive leading coefficient. For a complex energy E the
 * energy curve is the hyperelliptic curve p^2 = E - V(q); its branch points
 * are the d roots of E - V and its genus is floor((d - 1) / 2).
 */
#pragma once

#include <complex>
#include <span>
#include <vector>

namespace cpo {

using Cx = std::complex<double>;

class Potential {
 public:
  // Trailing zero coefficients are trimmed before validation.
  explicit Potential(std::vector<double> coeffs);

  int degree() const noexcept { return int(coeffs_.size()) - 1; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  double leading() const noexcept { return coeffs_.back(); }

  double operator()(double q) const;
  Cx operator()(Cx q) const;
  double d1(double q) const;
  Cx d1(Cx q) const;
  double d2(double q) const;
  Cx d2(Cx q) const;

  // Global minimum over the real line and its location.
  double min_value() const;
  double argmin() const;
  // Real critical points, ascending.
  std::vector<double> critical_points() const;
  // Real critical values V(q*) with V'(q*) = 0.
  std::vector<double> critical_values() const;

  bool operator==(const Potential&) const = default;

 private:
  std::vector<double> coeffs_;
  std::vector<double> d1_;
  std::vector<double> d2_;
};

Potential build_potential(std::vector<double> coeffs);

// Roots of E - V(q), polished and sorted by (real, imaginary) part.
// Throws DegenerateEnergyError when two roots are closer than
// 1e-8 * (max root spacing).
std::vector<Cx> branch_points(const Potential& potential, Cx energy);

struct EnergyCurve {
  Potential potential;
  Cx energy;
  std::vector<Cx> branch_points;
  int genus = 0;

  // E - V(q) factored through its roots; exact away from the branch points
  // and used for sqrt continuation.
  Cx radicand(Cx q) const;
};

EnergyCurve curve(const Potential& potential, Cx energy);

}  // namespace cpo
