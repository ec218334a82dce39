#include "oracles.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace oracle {

double airy_ai(double x) {
  const double c1 = 0.355028053887817239260;  // Ai(0)
  const double c2 = 0.258819403792806798405;  // -Ai'(0)
  double f = 1.0, g = x, tf = 1.0, tg = x;
  for (int k = 1; k < 200; ++k) {
    tf *= x * x * x / double((3 * k - 1) * (3 * k));
    tg *= x * x * x / double((3 * k) * (3 * k + 1));
    f += tf;
    g += tg;
    if (std::abs(tf) + std::abs(tg) < 1e-18 * (std::abs(f) + std::abs(g))) break;
  }
  return c1 * f - c2 * g;
}

HamiltonOrbit rk4_orbit(const std::function<double(double)>& dV, double q_turn, double dt) {
  // state (q, p, A) with A' = p dq/dt = 2 p^2
  using State = std::array<double, 3>;
  auto rhs = [&](const State& y) { return State{2.0 * y[1], -dV(y[0]), 2.0 * y[1] * y[1]}; };
  auto axpy = [](const State& y, double h, const State& k) { return State{y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]}; };
  State y{q_turn, 0.0, 0.0};
  double t = 0.0;
  HamiltonOrbit out;
  for (long step = 0; step < 50'000'000; ++step) {
    const State k1 = rhs(y), k2 = rhs(axpy(y, 0.5 * dt, k1)), k3 = rhs(axpy(y, 0.5 * dt, k2)), k4 = rhs(axpy(y, dt, k3));
    State yn;
    for (int i = 0; i < 3; ++i) yn[std::size_t(i)] = y[std::size_t(i)] + dt / 6 * (k1[std::size_t(i)] + 2 * k2[std::size_t(i)] + 2 * k3[std::size_t(i)] + k4[std::size_t(i)]);
    if (step > 0 && yn[1] * y[1] <= 0.0) {
      ++out.turning_points;
      if (out.turning_points == 2) {
        const double frac = y[1] / (y[1] - yn[1]);
        out.period = t + frac * dt;
        out.action = y[2] + frac * (yn[2] - y[2]);
        return out;
      }
    }
    y = yn;
    t += dt;
  }
  return out;
}

std::vector<Arc> sign_arcs(const std::function<Cx(Cx)>& f, double radius, int sign, int samples) {
  const double two_pi = 2 * std::numbers::pi;
  std::vector<bool> in(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double a = two_pi * (i + 0.5) / samples;
    in[std::size_t(i)] = sign * f(std::polar(radius, a)).real() > 0;
  }
  // rotate so that sample 0 starts an arc boundary
  int start = 0;
  while (start < samples && in[std::size_t(start)] == in[std::size_t((start + samples - 1) % samples)]) ++start;
  std::vector<Arc> arcs;
  if (start == samples) {
    if (in[0]) arcs.push_back({0.0, two_pi});
    return arcs;
  }
  for (int k = 0; k < samples; ++k) {
    const int i = (start + k) % samples;
    const bool prev = in[std::size_t((i + samples - 1) % samples)];
    if (in[std::size_t(i)] && !prev) arcs.push_back({two_pi * i / samples, -1.0});
    if (!in[std::size_t(i)] && prev && !arcs.empty()) arcs.back().end = two_pi * i / samples;
  }
  if (!arcs.empty() && arcs.back().end < 0) arcs.back().end = two_pi * start / samples;
  return arcs;
}

int arc_index(const std::vector<Arc>& arcs, Cx z) {
  const double two_pi = 2 * std::numbers::pi;
  double a = std::arg(z);
  if (a < 0) a += two_pi;
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    double b = arcs[i].begin, e = arcs[i].end;
    if (e < b) e += two_pi;
    double x = a;
    if (x < b) x += two_pi;
    if (x >= b && x < e) return int(i);
  }
  return -1;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[5] = {0.0, 0.5384693101056831, -0.5384693101056831, 0.9061798459386640, -0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                              0.2369268850561891};
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int j = 0; j < panels; ++j) {
    const double c = a + (j + 0.5) * h;
    for (int i = 0; i < 5; ++i) s += w[i] * f(c + 0.5 * h * x[i]);
  }
  return 0.5 * h * s;
}

}  // namespace oracle
