#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cpo/errors.hpp"
#include "cpo/model.hpp"

using namespace cpo;

namespace {
const std::vector<double> kDoubleWell{0, 0, -2, 0, 1};

bool contains_close(const std::vector<Cx>& set, Cx z, double tol) {
  return std::any_of(set.begin(), set.end(), [&](Cx w) { return std::abs(w - z) < tol; });
}
}  // namespace

TEST_CASE("build_potential accepts even positive-leading polynomials") {
  CHECK(build_potential(kDoubleWell).degree() == 4);
  CHECK(build_potential({0, 0, 1}).degree() == 2);
  // trailing zeros are trimmed first
  CHECK(build_potential({0, 0, 1, 0, 0}).degree() == 2);
}

TEST_CASE("build_potential names the violated rule") {
  auto message = [](std::vector<double> c) {
    try {
      build_potential(std::move(c));
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({}).find("empty") != std::string::npos);
  CHECK(message({0, 0, 0, 1}).find("even") != std::string::npos);
  CHECK(message({0, 0, -1}).find("leading") != std::string::npos);
  CHECK(message({1}).find("degree") != std::string::npos);
}

TEST_CASE("potential evaluation and critical points") {
  const Potential V = build_potential(kDoubleWell);
  CHECK(V(2.0) == doctest::Approx(8.0));
  CHECK(std::abs(V(Cx(0, 1)) - Cx(3, 0)) < 1e-14);
  CHECK(V.d1(2.0) == doctest::Approx(24.0));
  CHECK(V.d2(0.0) == doctest::Approx(-4.0));
  const auto cps = V.critical_points();
  REQUIRE(cps.size() == 3);
  CHECK(cps[0] == doctest::Approx(-1.0));
  CHECK(cps[1] == doctest::Approx(0.0));
  CHECK(cps[2] == doctest::Approx(1.0));
  CHECK(V.min_value() == doctest::Approx(-1.0));
}

TEST_CASE("branch points of the harmonic oscillator") {
  const auto b = branch_points(build_potential({0, 0, 1}), 1.0);
  REQUIRE(b.size() == 2);
  CHECK(std::abs(b[0] - Cx(-1)) < 1e-14);
  CHECK(std::abs(b[1] - Cx(1)) < 1e-14);
}

TEST_CASE("double-well branch points below the barrier are real, closed form") {
  const Potential V = build_potential(kDoubleWell);
  const auto b = branch_points(V, -0.5);
  REQUIRE(b.size() == 4);
  const double s = std::sqrt(0.5);
  const double expected[4] = {-std::sqrt(1 + s), -std::sqrt(1 - s), std::sqrt(1 - s), std::sqrt(1 + s)};
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(b[std::size_t(i)] - expected[i]) < 1e-12);
    CHECK(std::abs(Cx(-0.5) - V(b[std::size_t(i)])) < 1e-12);
  }
}

TEST_CASE("collided branch points raise degenerate_energy with the cluster") {
  const Potential V = build_potential(kDoubleWell);
  try {
    branch_points(V, 0.0);
    FAIL("expected degenerate energy");
  } catch (const DegenerateEnergyError& e) {
    CHECK(e.code() == "degenerate_energy");
    REQUIRE(e.cluster().size() >= 2);
    for (Cx z : e.cluster()) CHECK(std::abs(z) < 1e-6);
  }
  CHECK_THROWS_AS(curve(V, -1.0), DegenerateEnergyError);
}

TEST_CASE("genus follows the degree") {
  CHECK(curve(build_potential(kDoubleWell), -0.5).genus == 1);
  CHECK(curve(build_potential(kDoubleWell), 0.5).genus == 1);
  CHECK(curve(build_potential(kDoubleWell), Cx(0.3, 0.7)).genus == 1);
  CHECK(curve(build_potential({0, 0, 1}), 2.5).genus == 0);
  CHECK(curve(build_potential({0, 0, 0, 0, 0, 0, 1}), 1.0).genus == 2);
}

TEST_CASE("branch points: conjugation closure and Vieta") {
  const std::vector<std::vector<double>> potentials = {
      kDoubleWell, {0.3, -1.0, 0.5, 0.2, 1.0}, {1, 0, 2, 0, -1, 0.1, 0.5}, {0, 0.5, 1}};
  for (const auto& c : potentials) {
    const Potential V = build_potential(c);
    for (double E : {0.7, 3.1, 12.0}) {
      const auto b = branch_points(V, E);
      CHECK(int(b.size()) == V.degree());
      Cx sum = 0.0;
      for (Cx z : b) {
        CHECK(contains_close(b, std::conj(z), 1e-10));
        sum += z;
      }
      const double vieta = -c[c.size() - 2] / c.back();
      CHECK(std::abs(sum - vieta) < 1e-10 * (1.0 + std::abs(vieta)));
    }
  }
}

TEST_CASE("radicand factorization matches E - V") {
  const Potential V = build_potential({0.3, -1.0, 0.5, 0.2, 1.0});
  const EnergyCurve c = curve(V, Cx(2.0, 0.4));
  for (Cx q : {Cx(0.1, 0.2), Cx(-1.3, 0.5), Cx(2.0, -1.0)})
    CHECK(std::abs(c.radicand(q) - (c.energy - V(q))) < 1e-12 * (1 + std::abs(V(q))));
}

TEST_CASE("degenerate critical points are reported once") {
  const Potential quartic = build_potential({0, 0, 0, 0, 1});
  REQUIRE(quartic.critical_points().size() == 1);
  CHECK(std::abs(quartic.critical_points()[0]) < 1e-4);
  CHECK(build_potential({0, 0, 0, 0, 0, 0, 1}).critical_points().size() == 1);
  CHECK(build_potential({0, 0, -2, 0, 1}).critical_points().size() == 3);
}
