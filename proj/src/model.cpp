#include "cpo/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cpo/errors.hpp"
#include "cpo/polynomial.hpp"

namespace cpo {

Potential::Potential(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
  if (coeffs_.empty()) throw ValidationError("potential: coefficient list is empty or all zero");
  for (double c : coeffs_)
    if (!std::isfinite(c)) throw ValidationError("potential: coefficients must be finite");
  const int d = degree();
  if (d < 2) throw ValidationError("potential: degree must be at least 2, got " + std::to_string(d));
  if (d % 2 != 0) throw ValidationError("potential: degree must be even, got " + std::to_string(d));
  if (coeffs_.back() <= 0.0) throw ValidationError("potential: leading coefficient must be positive");
  d1_ = derivative(std::span<const double>(coeffs_));
  d2_ = derivative(std::span<const double>(d1_));
}

double Potential::operator()(double q) const { return horner(std::span<const double>(coeffs_), q); }
Cx Potential::operator()(Cx q) const { return horner(std::span<const double>(coeffs_), q); }
double Potential::d1(double q) const { return horner(std::span<const double>(d1_), q); }
Cx Potential::d1(Cx q) const { return horner(std::span<const double>(d1_), q); }
double Potential::d2(double q) const { return horner(std::span<const double>(d2_), q); }
Cx Potential::d2(Cx q) const { return horner(std::span<const double>(d2_), q); }

namespace {

std::vector<double> real_critical_points(std::span<const double> d1) {
  std::vector<Cx> c(d1.begin(), d1.end());
  // multiple roots come back split by ~eps^(1/m); merge clusters first
  std::vector<std::vector<Cx>> clusters;
  for (Cx z : polynomial_roots(c)) {
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const auto& cl) { return std::abs(cl.front() - z) < 1e-4 * (1.0 + std::abs(z)); });
    if (it == clusters.end()) clusters.push_back({z});
    else it->push_back(z);
  }
  std::vector<double> out;
  for (const auto& cl : clusters) {
    Cx z = 0.0;
    for (Cx w : cl) z += w;
    z /= double(cl.size());
    if (std::abs(z.imag()) < 1e-9 * (1.0 + std::abs(z))) out.push_back(z.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<double> Potential::critical_points() const { return real_critical_points(d1_); }

std::vector<double> Potential::critical_values() const {
  std::vector<double> v;
  for (double q : real_critical_points(d1_)) v.push_back((*this)(q));
  return v;
}

double Potential::argmin() const {
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.0;
  for (double q : real_critical_points(d1_)) {
    const double v = (*this)(q);
    if (v < best) best = v, arg = q;
  }
  return arg;
}

double Potential::min_value() const { return (*this)(argmin()); }

Potential build_potential(std::vector<double> coeffs) { return Potential(std::move(coeffs)); }

std::vector<Cx> branch_points(const Potential& potential, Cx energy) {
  std::vector<Cx> c;
  for (double x : potential.coeffs()) c.emplace_back(-x);
  c[0] += energy;
  auto roots = polynomial_roots(c);
  sort_lexicographic(roots);

  double max_spacing = 0.0;
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j)
      max_spacing = std::max(max_spacing, std::abs(roots[i] - roots[j]));
  // All roots at one point (V = (q - a)^d, E = V(a)).
  const double sep = max_spacing > 0.0 ? 1e-8 * max_spacing : 1e-8;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    std::vector<Cx> cluster{roots[i]};
    for (std::size_t j = 0; j < roots.size(); ++j)
      if (j != i && std::abs(roots[i] - roots[j]) < std::max(sep, 1e-300)) cluster.push_back(roots[j]);
    if (cluster.size() > 1 || max_spacing == 0.0)
      throw DegenerateEnergyError("branch points collide: energy is a critical value of V", cluster);
  }
  return roots;
}

Cx EnergyCurve::radicand(Cx q) const {
  Cx acc = -potential.leading();
  for (Cx b : branch_points) acc *= (q - b);
  return acc;
}

EnergyCurve curve(const Potential& potential, Cx energy) {
  EnergyCurve c{potential, energy, branch_points(potential, energy), (potential.degree() - 1) / 2};
  return c;
}

}  // namespace cpo
