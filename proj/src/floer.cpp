#include "cpo/floer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cpo/errors.hpp"

namespace cpo {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAliasLimit = 1e-6;
const Cx kI(0.0, 1.0);

// Plain DFT on m points; sizes here stay small enough that O(m N) is cheap.
class Dft {
 public:
  explicit Dft(int m) : m_(m), w_(std::size_t(m)) {
    for (int j = 0; j < m; ++j) w_[std::size_t(j)] = std::polar(1.0, kTwoPi * j / m);
  }
  int size() const { return m_; }

  std::vector<Cx> synth(const std::vector<Cx>& c, int n) const {
    std::vector<Cx> v(std::size_t(m_), Cx(0.0));
    for (int j = 0; j < m_; ++j) {
      Cx acc = 0.0;
      for (int k = -n; k <= n; ++k) acc += c[std::size_t(k + n)] * w_[index(k, j)];
      v[std::size_t(j)] = acc;
    }
    return v;
  }

  std::vector<Cx> analyze(const std::vector<Cx>& v, int n) const {
    std::vector<Cx> c(std::size_t(2 * n + 1), Cx(0.0));
    for (int k = -n; k <= n; ++k) {
      Cx acc = 0.0;
      for (int j = 0; j < m_; ++j) acc += v[std::size_t(j)] * std::conj(w_[index(k, j)]);
      c[std::size_t(k + n)] = acc / double(m_);
    }
    return c;
  }

 private:
  std::size_t index(int k, int j) const {
    long long r = (static_cast<long long>(k) * j) % m_;
    if (r < 0) r += m_;
    return std::size_t(r);
  }
  int m_;
  std::vector<Cx> w_;
};

// Fourier coefficients of a * b for half-widths na, nb (full linear convolution).
std::vector<Cx> convolve(const std::vector<Cx>& a, int na, const std::vector<Cx>& b, int nb) {
  std::vector<Cx> c(std::size_t(2 * (na + nb) + 1), Cx(0.0));
  for (int i = -na; i <= na; ++i) {
    const Cx ai = a[std::size_t(i + na)];
    if (ai == Cx(0.0)) continue;
    for (int j = -nb; j <= nb; ++j) c[std::size_t(i + j + na + nb)] += ai * b[std::size_t(j + nb)];
  }
  return c;
}

// Nonlinear terms from exact products in coefficient space: modes that are
// zero stay exactly zero, so finite-mode orbits are exact fixed points.
struct Nonlinear {
  std::vector<Cx> v1;  // [V'(q)]_k, |k| <= N
  std::vector<Cx> v2;  // [V''(q)]_k, |k| <= 2N
  Cx mean_v = 0.0;
  Cx mean_p2 = 0.0;
};

Nonlinear nonlinear(const Potential& V, const LoopState& s, bool second) {
  const int n = s.n_modes, d = V.degree();
  const auto c = V.coeffs();
  // powers[j] = q^j with half-width j N
  std::vector<std::vector<Cx>> powers(std::size_t(d + 1));
  powers[0] = {Cx(1.0)};
  for (int j = 1; j <= d; ++j) powers[std::size_t(j)] = convolve(powers[std::size_t(j - 1)], (j - 1) * n, s.q, n);
  // sum_j w_j q^j, truncated to |k| <= width
  auto combine = [&](auto weight, int top, int width) {
    std::vector<Cx> out(std::size_t(2 * width + 1), Cx(0.0));
    for (int j = 0; j <= top; ++j) {
      const double w = weight(j);
      if (w == 0.0) continue;
      const int h = j * n;
      for (int k = -std::min(width, h); k <= std::min(width, h); ++k)
        out[std::size_t(k + width)] += w * powers[std::size_t(j)][std::size_t(k + h)];
    }
    return out;
  };
  Nonlinear out;
  out.mean_v = combine([&](int j) { return c[std::size_t(j)]; }, d, 0)[0];
  out.v1 = combine([&](int j) { return (j + 1) * c[std::size_t(j + 1)]; }, d - 1, n);
  if (second) out.v2 = combine([&](int j) { return double((j + 1) * (j + 2)) * c[std::size_t(j + 2)]; }, d - 2, 2 * n);
  for (int k = -n; k <= n; ++k) out.mean_p2 += s.pk(k) * s.pk(-k);
  return out;
}

Cx action_unchecked(const Potential& V, const LoopState& s) {
  const Nonlinear nl = nonlinear(V, s, false);
  Cx loop = 0.0;
  for (int k = -s.n_modes; k <= s.n_modes; ++k) loop += s.pk(-k) * (kTwoPi * kI * double(k)) * s.qk(k);
  return loop + s.period * (s.energy - nl.mean_p2 - nl.mean_v);
}

// dS/dq_k, dS/dp_k, dS/dT packed as [q..., p..., T].
std::vector<Cx> gradient(const Potential& V, const LoopState& s) {
  const int n = s.n_modes, m = 2 * n + 1;
  const Nonlinear nl = nonlinear(V, s, false);
  std::vector<Cx> g(std::size_t(2 * m + 1));
  for (int k = -n; k <= n; ++k) {
    const Cx ik = kTwoPi * kI * double(k);
    g[std::size_t(k + n)] = ik * s.pk(-k) - s.period * nl.v1[std::size_t(-k + n)];
    g[std::size_t(m + k + n)] = -ik * s.qk(-k) - 2.0 * s.period * s.pk(-k);
  }
  g[std::size_t(2 * m)] = s.energy - nl.mean_p2 - nl.mean_v;
  return g;
}

void check_resolution(const LoopState& s) {
  if (s.top_quartile_fraction() > kAliasLimit)
    throw NumericalError("resolution", "loop has significant energy in the top quarter of its Fourier modes");
}

// Residual vector of the critical-point equations plus the gauge row, and
// optionally its Jacobian.
void newton_system(const Potential& V, const LoopState& s, Cx gauge, Eigen::VectorXcd& F, Eigen::MatrixXcd* J) {
  const int n = s.n_modes, m = 2 * n + 1;
  const Nonlinear nl = nonlinear(V, s, J != nullptr);
  const Cx T = s.period;
  F.resize(2 * m + 2);
  for (int k = -n; k <= n; ++k) {
    const Cx ik = kTwoPi * kI * double(k);
    F[k + n] = ik * s.qk(k) - 2.0 * T * s.pk(k);
    F[m + k + n] = ik * s.pk(k) + T * nl.v1[std::size_t(k + n)];
  }
  F[2 * m] = nl.mean_p2 + nl.mean_v - s.energy;
  F[2 * m + 1] = (n >= 1 ? s.qk(1) - s.qk(-1) : Cx(0.0)) - gauge;
  if (!J) return;

  J->setZero(2 * m + 2, 2 * m + 1);
  for (int k = -n; k <= n; ++k) {
    const int i = k + n;
    const Cx ik = kTwoPi * kI * double(k);
    (*J)(i, i) = ik;
    (*J)(i, m + i) = -2.0 * T;
    (*J)(i, 2 * m) = -2.0 * s.pk(k);
    (*J)(m + i, m + i) = ik;
    for (int j = -n; j <= n; ++j) (*J)(m + i, j + n) = T * nl.v2[std::size_t(k - j + 2 * n)];
    (*J)(m + i, 2 * m) = nl.v1[std::size_t(i)];
    (*J)(2 * m, m + i) = 2.0 * s.pk(-k);
    (*J)(2 * m, i) = nl.v1[std::size_t(-k + n)];
  }
  if (n >= 1) {
    (*J)(2 * m + 1, 1 + n) = 1.0;
    (*J)(2 * m + 1, -1 + n) = -1.0;
  }
}

void apply_step(LoopState& s, const Eigen::VectorXcd& dx, double lambda) {
  const int m = 2 * s.n_modes + 1;
  for (int i = 0; i < m; ++i) {
    s.q[std::size_t(i)] += lambda * dx[i];
    s.p[std::size_t(i)] += lambda * dx[m + i];
  }
  s.period += lambda * dx[2 * m];
}

struct NewtonResult {
  double residual;
  int iterations;
};

NewtonResult newton(const Potential& V, LoopState& s, Cx gauge, const RefineOptions& opt, std::vector<double>& history) {
  Eigen::VectorXcd F, Ftrial;
  Eigen::MatrixXcd J;
  newton_system(V, s, gauge, F, &J);
  const double tol = opt.tol * (1.0 + std::abs(s.energy));
  double res = F.norm();
  const double initial = res;
  history.push_back(res);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    if (res < tol) return {res, it - 1};
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(J);
    qr.setThreshold(1e-13);
    if (qr.rank() < J.cols())
      throw NumericalError("degenerate_orbit", "Newton Jacobian is rank deficient beyond the gauge mode");
    const Eigen::VectorXcd dx = qr.solve(-F);
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
      LoopState trial = s;
      apply_step(trial, dx, lambda);
      newton_system(V, trial, gauge, Ftrial, nullptr);
      if (std::isfinite(Ftrial.norm()) && Ftrial.norm() < res) {
        s = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) return {res, it};  // truncation floor
    newton_system(V, s, gauge, F, &J);
    res = F.norm();
    history.push_back(res);
    if (it == 3 && res >= initial)
      throw NoConvergenceError("seed is outside the Newton basin", history);
  }
  if (res < tol) return {res, opt.max_iterations};
  throw NoConvergenceError("Newton iteration did not converge", history);
}

}  // namespace

LoopState LoopState::zeros(int n_modes, Cx period, double energy) {
  if (n_modes < 1) throw ValidationError("loop state needs at least one Fourier mode");
  LoopState s;
  s.n_modes = n_modes;
  s.q.assign(std::size_t(2 * n_modes + 1), Cx(0.0));
  s.p.assign(std::size_t(2 * n_modes + 1), Cx(0.0));
  s.period = period;
  s.energy = energy;
  return s;
}

LoopState LoopState::resized(int n) const {
  LoopState out = zeros(n, period, energy);
  const int lim = std::min(n, n_modes);
  for (int k = -lim; k <= lim; ++k) {
    out.qk(k) = qk(k);
    out.pk(k) = pk(k);
  }
  return out;
}

LoopState LoopState::dilated(int r) const {
  if (r < 1) throw ValidationError("repetition count must be positive");
  LoopState out = zeros(r * n_modes, double(r) * period, energy);
  for (int k = -n_modes; k <= n_modes; ++k) {
    out.qk(r * k) = qk(k);
    out.pk(r * k) = pk(k);
  }
  return out;
}

LoopState LoopState::shifted(double shift) const {
  LoopState out = *this;
  for (int k = -n_modes; k <= n_modes; ++k) {
    const Cx ph = std::polar(1.0, kTwoPi * k * shift);
    out.qk(k) *= ph;
    out.pk(k) *= ph;
  }
  return out;
}

double LoopState::top_quartile_fraction() const {
  double total = 0.0, top = 0.0;
  const int cut = (3 * n_modes) / 4;
  for (int k = -n_modes; k <= n_modes; ++k) {
    const double e = std::norm(qk(k)) + std::norm(pk(k));
    total += e;
    if (std::abs(k) > cut) top += e;
  }
  return total > 0 ? top / total : 0.0;
}

std::vector<Cx> LoopState::q_values(int m) const { return Dft(m).synth(q, n_modes); }
std::vector<Cx> LoopState::p_values(int m) const { return Dft(m).synth(p, n_modes); }

Cx action(const Potential& V, const LoopState& s) {
  check_resolution(s);
  return action_unchecked(V, s);
}

double critical_residual(const Potential& V, const LoopState& s) {
  Eigen::VectorXcd F;
  newton_system(V, s, 0.0, F, nullptr);
  return F.head(F.size() - 1).norm();
}

double flow_speed(const Potential& V, const LoopState& s) {
  double acc = 0.0;
  for (const Cx& g : gradient(V, s)) acc += std::norm(g);
  return std::sqrt(acc);
}

LoopState circle_seed(double center, double q_amplitude, double p_amplitude, Cx period, double energy, int n_modes) {
  LoopState s = LoopState::zeros(n_modes, period, energy);
  s.qk(0) = center;
  s.qk(1) = s.qk(-1) = 0.5 * q_amplitude;
  // p = -b sin(2 pi eta)
  s.pk(1) = Cx(0.0, 0.5 * p_amplitude);
  s.pk(-1) = Cx(0.0, -0.5 * p_amplitude);
  return s;
}

LoopState trajectory_seed(const Potential& V, double energy, Cx q_turn, Cx period, int n_modes) {
  using State = std::vector<Cx>;
  if (period == Cx(0.0)) throw ValidationError("trajectory seed needs a nonzero period");
  const int m = 4 * (2 * n_modes + 1);
  auto rhs = [&](const State& y, State& dy, double) {
    dy[0] = 2.0 * period * y[1];
    dy[1] = -period * V.d1(y[0]);
  };
  std::vector<double> times(std::size_t(m + 1));
  for (int j = 0; j <= m; ++j) times[std::size_t(j)] = double(j) / m;
  std::vector<Cx> qs, ps;
  State y{q_turn, Cx(0.0)};
  odeint::integrate_times(odeint::make_controlled(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>()), rhs, y,
                          times.begin(), times.end(), 1e-3, [&](const State& x, double) {
                            qs.push_back(x[0]);
                            ps.push_back(x[1]);
                          });
  const double scale = 1.0 + std::abs(q_turn);
  if (!std::isfinite(std::abs(qs.back())) || std::abs(qs.back() - qs.front()) > 1e-4 * scale ||
      std::abs(ps.back() - ps.front()) > 1e-4 * scale)
    throw NumericalError("seed_not_closed", "complex-time trajectory does not close after one period");
  qs.pop_back();
  ps.pop_back();
  const Dft dft(m);
  LoopState s = LoopState::zeros(n_modes, period, energy);
  s.q = dft.analyze(qs, n_modes);
  s.p = dft.analyze(ps, n_modes);
  return s;
}

ClassMatch match_class(const EnergyCurve& curve, Cx S, Cx T) {
  ClassMatch out;
  const HomologyBasis basis = homology_basis(curve);
  out.cycle.basis_id = basis.id;
  const double scale = std::abs(S) + std::abs(T);
  if (basis.generators.empty()) {
    // genus 0: the only closed orbits are repetitions of the real oscillation
    const auto orbits = real_orbits(curve);
    if (orbits.empty()) throw NumericalError("no_real_orbit", "no closed orbit to compare against");
    const double r = std::max(1.0, std::round(S.real() / orbits.back().action));
    out.lattice_value = {out.cycle, r * orbits.back().action, r * orbits.back().time_period};
    out.residual = (std::abs(out.lattice_value.action - S) + std::abs(out.lattice_value.time_period - T)) / scale;
    return out;
  }
  const auto lattice = period_lattice(curve, basis);
  const int n = int(lattice.size());
  Eigen::MatrixXd A(4, n);
  for (int j = 0; j < n; ++j) {
    A(0, j) = lattice[std::size_t(j)].action.real();
    A(1, j) = lattice[std::size_t(j)].action.imag();
    A(2, j) = lattice[std::size_t(j)].time_period.real();
    A(3, j) = lattice[std::size_t(j)].time_period.imag();
  }
  const Eigen::Vector4d rhs(S.real(), S.imag(), T.real(), T.imag());
  const Eigen::VectorXd x = A.completeOrthogonalDecomposition().solve(rhs);
  out.cycle.coords.resize(std::size_t(n));
  for (int j = 0; j < n; ++j) out.cycle.coords[std::size_t(j)] = int(std::lround(x[j]));
  out.lattice_value = cycle_period(curve, basis, out.cycle);
  out.residual = (std::abs(out.lattice_value.action - S) + std::abs(out.lattice_value.time_period - T)) / scale;
  return out;
}

RefinedOrbit refine_orbit(const Potential& V, const LoopState& seed, const RefineOptions& opt) {
  if (opt.tol <= 0 || opt.action_tol <= 0) throw ValidationError("refine_orbit: tolerances must be positive");
  RefinedOrbit out;
  LoopState s = seed;
  const Cx gauge = s.qk(1) - s.qk(-1);
  std::optional<Cx> previous;
  for (;;) {
    const NewtonResult nr = newton(V, s, gauge, opt, out.residual_history);
    out.iterations += nr.iterations;
    const Cx S = action_unchecked(V, s);
    const bool settled = previous && std::abs(S - *previous) < opt.action_tol * (1.0 + std::abs(S));
    if (settled && s.top_quartile_fraction() <= kAliasLimit) break;
    if (2 * s.n_modes > opt.max_modes) {
      if (nr.residual < opt.tol * (1.0 + std::abs(s.energy)) && s.top_quartile_fraction() <= kAliasLimit) break;
      throw NoConvergenceError("orbit not resolved within the mode budget", out.residual_history);
    }
    previous = S;
    s = s.resized(2 * s.n_modes);
  }
  out.residual = critical_residual(V, s);
  if (out.residual > 1e-6 * (1.0 + std::abs(s.energy)))
    throw NoConvergenceError("Newton stagnated away from a critical loop", out.residual_history);
  out.action = action(V, s);
  out.gauge_value = gauge;
  out.transverse_modulus = std::abs(s.qk(1)) + std::abs(s.qk(-1));
  out.state = std::move(s);
  if (opt.identify_class) {
    const ClassMatch cm = match_class(curve(V, out.state.energy), out.action, out.state.period);
    out.match_residual = cm.residual;
    if (cm.residual < 1e-6) out.cycle = cm.cycle;
  }
  return out;
}

FlowTrajectory integrate_flow(const Potential& V, const LoopState& start, double tau_span, FlowDirection dir,
                              double tol) {
  using State = std::vector<Cx>;
  if (tau_span <= 0) throw ValidationError("integrate_flow: tau_span must be positive");
  check_resolution(start);
  const int n = start.n_modes, m = 2 * n + 1;
  const double sgn = dir == FlowDirection::down ? 1.0 : -1.0;
  LoopState work = start;
  auto unpack = [&](const State& y) {
    std::copy(y.begin(), y.begin() + m, work.q.begin());
    std::copy(y.begin() + m, y.begin() + 2 * m, work.p.begin());
    work.period = y[std::size_t(2 * m)];
  };
  auto rhs = [&](const State& y, State& dy, double) {
    unpack(y);
    const auto g = gradient(V, work);
    for (std::size_t i = 0; i < g.size(); ++i) dy[i] = sgn * kI * std::conj(g[i]);
  };
  State y(start.q);
  y.insert(y.end(), start.p.begin(), start.p.end());
  y.push_back(start.period);

  FlowTrajectory out;
  auto record = [&](double tau) {
    unpack(y);
    const Cx S = action_unchecked(V, work);
    out.states.emplace_back(tau, work);
    out.morse_series.push_back({tau, -S.imag(), S.real()});
  };
  record(0.0);
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  double tau = 0.0, dt = 1e-3 / (1.0 + flow_speed(V, start));
  for (int step = 0; step < 200000; ++step) {
    if (tau >= tau_span) return out;
    dt = std::min(dt, tau_span - tau);
    if (stepper.try_step(rhs, y, tau, dt) != odeint::success) {
      if (dt < 1e-14 * (1.0 + tau)) throw NumericalError("flow_stall", "loop-space flow step size underflow");
      continue;
    }
    record(tau);
    check_resolution(out.states.back().second);
  }
  throw NumericalError("flow_stall", "loop-space flow exceeded the step budget");
}

namespace {

// Floquet block j (residue mod r) of the second variation of the r-fold
// cover. The momentum variation enters algebraically (its block is -2 T_r),
// so it is eliminated by a Schur complement; the result, scaled by T_r, is
// the Hill-type matrix 2 pi^2 K^2 - T_r^2 [V''(q)] on K = r k + j, bordered
// by the period variation when j = 0. det(full block) = (-2)^m det(Q) / T_r
// for j = 0 and (-2)^m det(Q) otherwise.
Eigen::MatrixXcd floquet_block(const Nonlinear& nl, const LoopState& s, int r, int j) {
  const int n = s.n_modes;
  const int lo = -n, hi = j == 0 ? n : n - 1;
  const int cnt = hi - lo + 1;
  const bool with_t = j == 0;
  const Cx Tr = double(r) * s.period;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(cnt + (with_t ? 1 : 0), cnt + (with_t ? 1 : 0));
  for (int a = 0; a < cnt; ++a) {
    const int k = lo + a;
    const double K = double(r * k + j);
    for (int b = 0; b < cnt; ++b) Q(a, b) = -Tr * Tr * nl.v2[std::size_t(k - (lo + b) + 2 * n)];
    Q(a, a) += 2.0 * pi2 * K * K;
    if (with_t) {
      Q(a, cnt) = -Tr * nl.v1[std::size_t(k + n)] + kTwoPi * kI * K * s.pk(k);
      Q(cnt, a) = -Tr * nl.v1[std::size_t(-k + n)] - kTwoPi * kI * K * s.pk(-k);
    }
  }
  if (with_t) Q(cnt, cnt) = 2.0 * nl.mean_p2;
  return Q;
}

std::vector<Cx> block_eigenvalues(const Eigen::MatrixXcd& M) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver", "Hessian block eigensolver failed");
  std::vector<Cx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](Cx a, Cx b) { return std::abs(a) < std::abs(b); });
  return ev;
}

// Sum of principal logs of orbit/reference eigenvalue ratios, pairing
// greedily by relative distance so that high modes pair with their free
// counterparts.
Cx paired_log_ratio(const std::vector<Cx>& a, const std::vector<Cx>& b) {
  struct Cand {
    double d;
    std::size_t i, j;
  };
  std::vector<Cand> cand;
  cand.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) cand.push_back({std::abs(a[i] - b[j]) / std::abs(b[j]), i, j});
  std::sort(cand.begin(), cand.end(), [](const Cand& x, const Cand& y) { return x.d < y.d; });
  std::vector<char> ua(a.size(), 0), ub(b.size(), 0);
  Cx acc = 0.0;
  for (const auto& c : cand) {
    if (ua[c.i] || ub[c.j]) continue;
    ua[c.i] = ub[c.j] = 1;
    acc += std::log(a[c.i] / b[c.j]);
  }
  return acc;
}

int count_turning_points(const LoopState& s) {
  const auto pv = s.p_values(4 * (2 * s.n_modes + 1));
  double re = 0, im = 0;
  for (const Cx& p : pv) {
    re = std::max(re, std::abs(p.real()));
    im = std::max(im, std::abs(p.imag()));
  }
  const bool use_re = re >= im;
  int changes = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double a = use_re ? pv[i].real() : pv[i].imag();
    const double b = use_re ? pv[(i + 1) % pv.size()].real() : pv[(i + 1) % pv.size()].imag();
    if ((a < 0) != (b < 0)) ++changes;
  }
  return changes;
}

}  // namespace

std::vector<GaussianAmplitude> gaussian_amplitudes(const Potential& V, const LoopState& orbit, int r_max) {
  if (r_max < 1) throw ValidationError("gaussian_amplitude: repetition count must be positive");
  check_resolution(orbit);
  if (critical_residual(V, orbit) > 1e-10 * (1.0 + std::abs(orbit.energy)))
    throw ValidationError("gaussian_amplitude: loop is not a critical point");

  const int n = orbit.n_modes;
  const double e_ref = std::abs(orbit.energy) > 1e-8 ? orbit.energy : 1.0;
  const Potential harmonic({0.0, 0.0, 1.0});
  const Cx amp = std::sqrt(Cx(e_ref));
  LoopState ref = LoopState::zeros(n, std::numbers::pi, e_ref);
  ref.qk(1) = ref.qk(-1) = 0.5 * amp;
  ref.pk(1) = kI * 0.5 * amp;
  ref.pk(-1) = -kI * 0.5 * amp;
  const Nonlinear nl = nonlinear(V, orbit, true);
  const Nonlinear nl_ref = nonlinear(harmonic, ref, true);
  const int maslov = count_turning_points(orbit);

  // Blocks with j > 0 depend on j/r only (up to a common scale), so their
  // log ratios are cached by reduced fraction.
  std::map<std::pair<int, int>, Cx> cache;
  auto twisted = [&](int r, int j) {
    const int g = std::gcd(r, j);
    const auto key = std::make_pair(j / g, r / g);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const auto ev = block_eigenvalues(floquet_block(nl, orbit, key.second, key.first));
    const auto er = block_eigenvalues(floquet_block(nl_ref, ref, key.second, key.first));
    if (std::abs(ev.front()) / std::abs(ev.back()) < 1e-10)
      throw NumericalError("degenerate_orbit", "repetition has a Floquet zero mode (bifurcation)");
    return cache[key] = paired_log_ratio(ev, er);
  };

  std::vector<GaussianAmplitude> out;
  for (int r = 1; r <= r_max; ++r) {
    GaussianAmplitude a;
    auto ev = block_eigenvalues(floquet_block(nl, orbit, r, 0));
    auto er = block_eigenvalues(floquet_block(nl_ref, ref, r, 0));
    const double scale = std::abs(ev.back());
    a.zero_mode = std::abs(ev.front()) / scale;
    a.next_smallest = std::abs(ev[1]) / scale;
    if (a.next_smallest < 1e-10)
      throw NumericalError("degenerate_orbit", "second variation has more than one zero mode");
    ev.erase(ev.begin());
    er.erase(er.begin());
    Cx log_ratio = paired_log_ratio(ev, er) + std::log(Cx(std::numbers::pi) / orbit.period);
    for (int j = 1; j < r; ++j) log_ratio += twisted(r, j);
    a.det_ratio = std::exp(log_ratio);
    a.log_det_ratio = log_ratio;
    a.maslov = maslov;
    const double measure = std::abs(orbit.period) / kTwoPi;
    a.amplitude = measure * std::exp(-0.5 * log_ratio) * std::polar(1.0, -0.5 * std::numbers::pi * r * maslov);
    out.push_back(a);
  }
  return out;
}

GaussianAmplitude gaussian_amplitude(const Potential& V, const LoopState& orbit, int r) {
  if (r < 1) throw ValidationError("gaussian_amplitude: repetition count must be positive");
  return gaussian_amplitudes(V, orbit, r).back();
}

}  // namespace cpo
