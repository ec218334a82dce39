#include "cpo/thimble.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "cpo/errors.hpp"
#include "cpo/polynomial.hpp"

namespace cpo {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<Cx>;

constexpr double kSeedOffset = 1e-6;
constexpr double kDecayCut = 40.0;       // stop once Re(Delta f) < -40
constexpr double kTruncationLevel = 1e-16;
constexpr double kFlowTol = 1e-12;
constexpr int kMaxSteps = 200000;

double angle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

// One half of a thimble or dual thimble, traced in arclength from
// z_a + eps * w. For descent halves the contour integral of e^{Delta f} is
// accumulated alongside.
struct HalfCurve {
  std::vector<Cx> points;
  Cx integral = 0.0;
  bool reached_critical = false;  // ascent ended on another critical point
};

HalfCurve trace_half(const ExponentFunction& f, const CriticalPoint& c, Cx w, FlowDirection dir, double radius,
                     double re_stop, bool allow_stall = false) {
  const double sgn = dir == FlowDirection::down ? -1.0 : 1.0;
  const Cx f0 = c.value;
  auto rhs = [&](const State& y, State& dy, double) {
    const Cx g = std::conj(f.d1(y[0]));
    const double a = std::abs(g);
    dy[0] = a > 0 ? sgn * g / a : Cx(0.0);
    dy[1] = std::exp(f(y[0]) - f0) * dy[0];
  };
  auto stepper = odeint::make_controlled(kFlowTol, kFlowTol, odeint::runge_kutta_dopri5<State>());

  HalfCurve out;
  State y{c.location + kSeedOffset * w, kSeedOffset * w};
  out.points.push_back(c.location);
  out.points.push_back(y[0]);
  double s = 0.0, ds = kSeedOffset;
  for (int step = 0; step < kMaxSteps; ++step) {
    const double s_before = s;
    if (stepper.try_step(rhs, y, s, ds) != odeint::success) {
      if (ds < 1e-15 * (1.0 + s)) throw NumericalError("flow_stall", "thimble continuation step underflow");
      continue;
    }
    (void)s_before;
    out.points.push_back(y[0]);
    const Cx df = f(y[0]) - f0;
    if (std::abs(f.d1(y[0])) < 1e-7 * (1.0 + std::abs(y[0]))) {
      if (dir == FlowDirection::up || allow_stall) {
        out.reached_critical = true;
        return out;
      }
      throw NumericalError("flow_stall", "thimble ran into another critical point (Stokes line)");
    }
    if (dir == FlowDirection::down && df.real() < -kDecayCut) {
      out.integral = y[1];
      return out;
    }
    if (dir == FlowDirection::up && (f(y[0]).real() > re_stop)) return out;
    if (std::abs(y[0]) > radius) {
      if (dir == FlowDirection::down && std::exp(df.real()) > kTruncationLevel)
        throw NumericalError("truncation", "integrand has not decayed at the escape radius");
      out.integral = y[1];
      return out;
    }
  }
  throw NumericalError("flow_stall", "thimble continuation exceeded the step budget");
}

// Signed crossings of one dual half with the real axis; orientation is +1
// when the half runs along the orientation of K.
int signed_crossings(const std::vector<Cx>& pts, int orientation) {
  int n = 0;
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const double a = pts[k].imag(), b = pts[k + 1].imag();
    if ((a < 0 && b >= 0) || (a > 0 && b <= 0) || (a == 0 && b != 0 && k > 1)) {
      const Cx t = pts[k + 1] - pts[k];
      if (std::abs(t.imag()) < 1e-6 * std::abs(t))
        throw AmbiguousError("ambiguous_intersection", "dual thimble is tangent to the real axis");
      n += orientation * (t.imag() > 0 ? 1 : -1);
    }
  }
  return n;
}

}  // namespace

ExponentFunction::ExponentFunction(std::vector<Cx> coeffs, bool imaginary_on_real)
    : coeffs_(std::move(coeffs)), imaginary_on_real_(imaginary_on_real) {
  while (!coeffs_.empty() && coeffs_.back() == Cx{}) coeffs_.pop_back();
  if (coeffs_.size() < 3) throw ValidationError("exponent: degree must be at least 2");
  d1_ = derivative(std::span<const Cx>(coeffs_));
  d2_ = derivative(std::span<const Cx>(d1_));
  if (imaginary_on_real_) {
    double scale = 0.0;
    for (Cx c : coeffs_) scale = std::max(scale, std::abs(c));
    for (double x : {-2.0, -1.0, -0.5, 0.0, 0.3, 1.0, 2.0})
      if (std::abs((*this)(x).real()) > 1e-12 * scale * std::pow(1.0 + std::abs(x), degree()))
        throw ValidationError("exponent: f must be purely imaginary on the real axis");
  }
}

Cx ExponentFunction::operator()(Cx z) const { return horner(std::span<const Cx>(coeffs_), z); }
Cx ExponentFunction::d1(Cx z) const { return horner(std::span<const Cx>(d1_), z); }
Cx ExponentFunction::d2(Cx z) const { return horner(std::span<const Cx>(d2_), z); }

ExponentFunction ExponentFunction::conjugate() const {
  std::vector<Cx> c;
  for (Cx a : coeffs_) c.push_back(std::conj(a));
  return ExponentFunction(std::move(c), imaginary_on_real_);
}

std::vector<CriticalPoint> find_critical_points(const ExponentFunction& f) {
  std::vector<Cx> d1(f.coeffs().size() - 1);
  for (std::size_t k = 1; k < f.coeffs().size(); ++k) d1[k - 1] = f.coeffs()[k] * double(k);
  auto roots = polynomial_roots(d1);
  sort_lexicographic(roots);
  double scale = 0.0;
  for (Cx c : f.coeffs()) scale = std::max(scale, std::abs(c));
  std::vector<CriticalPoint> out;
  for (Cx z : roots) {
    const Cx h = f.d2(z);
    if (std::abs(h) < 1e-8 * scale * std::pow(1.0 + std::abs(z), f.degree() - 2))
      throw AmbiguousError("caustic", "degenerate critical point: f'' vanishes");
    out.push_back({z, f(z), h, 1});
  }
  return out;
}

double escape_radius(const ExponentFunction& f) {
  double r = 0.0;
  for (const auto& c : find_critical_points(f)) r = std::max(r, std::abs(c.location));
  return 10.0 * (r + 1.0);
}

FlowPath flow(const ExponentFunction& f, Cx start, FlowDirection dir, double tau_max, double radius) {
  const double sgn = dir == FlowDirection::down ? -1.0 : 1.0;
  if (std::abs(f.d1(start)) < 1e-10) throw ValidationError("flow: start is a critical point");
  auto rhs = [&](const State& y, State& dy, double) { dy[0] = sgn * std::conj(f.d1(y[0])); };
  auto stepper = odeint::make_controlled(kFlowTol, kFlowTol, odeint::runge_kutta_dopri5<State>());
  FlowPath path;
  State y{start};
  double t = 0.0, dt = 1e-3 / (1.0 + std::abs(f.d1(start)));
  path.tau.push_back(0.0);
  path.points.push_back(start);
  for (int step = 0; step < kMaxSteps; ++step) {
    if (t >= tau_max) return path;
    dt = std::min(dt, tau_max - t);
    if (stepper.try_step(rhs, y, t, dt) != odeint::success) {
      if (dt < 1e-14 * (1.0 + t)) throw NumericalError("flow_stall", "flow step size underflow");
      continue;
    }
    path.tau.push_back(t);
    path.points.push_back(y[0]);
    if (std::abs(f.d1(y[0])) < 1e-10) {
      path.stop = FlowPath::Stop::converged;
      return path;
    }
    if (std::abs(y[0]) > radius) {
      path.stop = FlowPath::Stop::escaped;
      return path;
    }
  }
  throw NumericalError("flow_stall", "flow exceeded the step budget");
}

int descent_sector(const ExponentFunction& f, Cx z) {
  const int d = f.degree();
  const double base = std::numbers::pi - std::arg(f.coeffs().back());
  int best = 0;
  double best_d = 1e300;
  for (int k = 0; k < d; ++k) {
    const double dist = angle_distance(std::arg(z), (base + 2.0 * std::numbers::pi * k) / d);
    if (dist < best_d) best_d = dist, best = k;
  }
  return best;
}

Thimble build_thimble(const ExponentFunction& f, const CriticalPoint& crit) {
  const double radius = escape_radius(f);
  Thimble th;
  th.critical = crit;
  // f'' v^2 real negative.
  th.direction = std::polar(1.0, 0.5 * (std::numbers::pi - std::arg(crit.hessian)));

  const double re0 = crit.value.real();
  // Past Re f > 0 the dual thimble can no longer meet the real axis.
  const double up_stop = std::max(re0, 0.0) + 1.0;
  const Cx iv = Cx(0.0, 1.0) * th.direction;
  HalfCurve kp = trace_half(f, crit, iv, FlowDirection::up, radius, up_stop);
  HalfCurve km = trace_half(f, crit, -iv, FlowDirection::up, radius, up_stop);

  const double scale = 1.0 + std::abs(crit.location);
  if (std::abs(crit.location.imag()) < 1e-12 * scale) {
    // Trivial upward flow along the real axis itself; orient J so it counts +1.
    if ((iv).imag() < 0) th.direction = -th.direction;
    th.intersection_number = 1;
    th.intersection_rule = "real-critical-point";
  } else if (re0 >= 0.0) {
    th.intersection_number = 0;
    th.intersection_rule = "re-f-nonnegative";
  } else {
    for (const HalfCurve* h : {&kp, &km})
      if (h->reached_critical && f(h->points.back()).real() < 0.0)
        throw AmbiguousError("ambiguous_intersection",
                             "dual thimble ends on another critical point below the real contour");
    const int n = signed_crossings(kp.points, +1) + signed_crossings(km.points, -1);
    if (n < 0) th.direction = -th.direction;
    th.intersection_number = std::abs(n);
    th.intersection_rule = "crossing-count";
  }
  // Orientation flips swap the roles of the +/- halves.
  const bool flipped = std::abs(th.direction - std::polar(1.0, 0.5 * (std::numbers::pi - std::arg(crit.hessian)))) > 1.0;
  const HalfCurve& k_neg = flipped ? kp : km;
  const HalfCurve& k_pos = flipped ? km : kp;
  th.dual_samples.assign(k_neg.points.rbegin(), k_neg.points.rend());
  th.dual_samples.insert(th.dual_samples.end(), k_pos.points.begin() + 1, k_pos.points.end());

  // A thimble that does not contribute may sit on a Stokes line; keep its
  // samples up to the other critical point.
  const bool weightless = th.intersection_number == 0;
  HalfCurve jp = trace_half(f, crit, th.direction, FlowDirection::down, radius, 0.0, weightless);
  HalfCurve jm = trace_half(f, crit, -th.direction, FlowDirection::down, radius, 0.0, weightless);
  th.on_stokes_line = jp.reached_critical || jm.reached_critical;
  th.samples.assign(jm.points.rbegin(), jm.points.rend());
  th.samples.insert(th.samples.end(), jp.points.begin() + 1, jp.points.end());
  th.end_sectors[0] = descent_sector(f, jm.points.back());
  th.end_sectors[1] = descent_sector(f, jp.points.back());
  return th;
}

int intersection_number(const ExponentFunction&, const Thimble& thimble) { return thimble.intersection_number; }

Cx thimble_integral(const ExponentFunction& f, const Thimble& thimble) {
  const double radius = escape_radius(f);
  const HalfCurve jp = trace_half(f, thimble.critical, thimble.direction, FlowDirection::down, radius, 0.0);
  const HalfCurve jm = trace_half(f, thimble.critical, -thimble.direction, FlowDirection::down, radius, 0.0);
  return std::exp(thimble.critical.value) * (jp.integral - jm.integral);
}

ThimbleSum thimble_sum(const ExponentFunction& f) {
  ThimbleSum sum;
  sum.total = 0.0;
  for (const auto& c : find_critical_points(f)) {
    ThimbleTerm term{build_thimble(f, c), 0.0};
    if (term.thimble.intersection_number != 0) {
      term.integral = thimble_integral(f, term.thimble);
      sum.total += double(term.thimble.intersection_number) * term.integral;
    }
    sum.terms.push_back(std::move(term));
  }
  return sum;
}

namespace {

// Taylor coefficients of polynomial p about x0 (p(x0 + t) = sum a_j t^j).
std::vector<Cx> taylor_shift(std::vector<Cx> p, Cx x0) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = n - 1; j > i; --j) p[j - 1] += x0 * p[j];
  return p;
}

// Series of 1/a truncated to `len` terms.
std::vector<Cx> reciprocal(const std::vector<Cx>& a, std::size_t len) {
  std::vector<Cx> r(len, 0.0);
  r[0] = 1.0 / a[0];
  for (std::size_t n = 1; n < len; ++n) {
    Cx acc = 0.0;
    for (std::size_t k = 1; k <= n && k < a.size(); ++k) acc += a[k] * r[n - k];
    r[n] = -acc / a[0];
  }
  return r;
}

// int_x0^{+inf} (side = +1) or int_{-inf}^{x0} (side = -1) of e^{g}, with g'
// bounded away from zero beyond x0, by repeated integration by parts.
Cx tail_integral(const std::vector<Cx>& g, const std::vector<Cx>& dg, double x0, int side) {
  constexpr std::size_t kLen = 48;
  const auto a = taylor_shift(dg, x0);
  const auto r = reciprocal(a, kLen);
  std::vector<Cx> h(kLen, 0.0);
  h[0] = 1.0;
  Cx sum = 0.0;
  double last = 1e300;
  for (std::size_t k = 0; k + 1 < kLen; ++k) {
    std::vector<Cx> q(h.size(), 0.0);
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t j = 0; i + j < h.size(); ++j) q[i + j] += h[i] * r[j];
    const Cx term = ((k % 2 == 0) ? 1.0 : -1.0) * q[0];
    if (std::abs(term) > last) break;  // asymptotic series: stop at the smallest term
    sum += term;
    last = std::abs(term);
    if (last < 1e-18 * std::abs(sum)) break;
    std::vector<Cx> next(h.size() - 1);
    for (std::size_t i = 0; i + 1 < q.size(); ++i) next[i] = q[i + 1] * double(i + 1);
    h = std::move(next);
  }
  const Cx e = std::exp(horner(std::span<const Cx>(g), Cx(x0)));
  return side > 0 ? -e * sum : e * sum;
}

Cx damped_integral(const ExponentFunction& f, double eps) {
  std::vector<Cx> g(f.coeffs().begin(), f.coeffs().end());
  g[2] -= eps;
  const auto dg = derivative(std::span<const Cx>(g));
  const auto ddg = derivative(std::span<const Cx>(dg));
  auto fp = [&](double x) { return std::abs(horner(std::span<const Cx>(dg), Cx(x))); };
  auto fpp = [&](double x) { return std::abs(horner(std::span<const Cx>(ddg), Cx(x))); };

  double X = 1.0;
  for (Cx z : polynomial_roots(dg)) X = std::max(X, 2.0 * std::abs(z));
  while (fp(X) < 40.0 || fp(-X) < 40.0 || fpp(X) > 0.02 * fp(X) * fp(X) || fpp(-X) > 0.02 * fp(-X) * fp(-X))
    X *= 1.1;

  double fmax = 0.0;
  for (int i = 0; i <= 400; ++i) fmax = std::max(fmax, fp(-X + 2.0 * X * i / 400));
  const double width = std::min(0.25, 1.5 / fmax);
  const int panels = int(std::ceil(2.0 * X / width));
  const double half = X / panels;
  using GL = boost::math::quadrature::gauss<double, 20>;
  Cx center = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = -X + (2 * p + 1) * half;
    for (std::size_t j = 0; j < GL::abscissa().size(); ++j) {
      const double x = GL::abscissa()[j], w = GL::weights()[j];
      center += w * half * std::exp(horner(std::span<const Cx>(g), Cx(c + half * x)));
      if (x != 0.0) center += w * half * std::exp(horner(std::span<const Cx>(g), Cx(c - half * x)));
    }
  }
  return center + tail_integral(g, dg, X, +1) + tail_integral(g, dg, -X, -1);
}

}  // namespace

OracleResult oracle_integral(const ExponentFunction& f) {
  if (!f.imaginary_on_real()) throw ValidationError("oracle_integral: f must be imaginary on the real axis");
  constexpr double eps[3] = {1e-2, 1e-3, 1e-4};
  OracleResult out;
  for (int i = 0; i < 3; ++i) out.damped[i] = damped_integral(f, eps[i]);
  // Quadratic extrapolation to eps = 0, checked against the linear one.
  Cx quadratic = 0.0;
  for (int i = 0; i < 3; ++i) {
    double w = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) w *= eps[j] / (eps[j] - eps[i]);
    quadratic += w * out.damped[i];
  }
  const Cx linear = (eps[1] * out.damped[2] - eps[2] * out.damped[1]) / (eps[1] - eps[2]);
  out.value = quadratic;
  out.error_estimate = std::abs(quadratic - linear);
  if (!(out.error_estimate < 1e-5 * (1.0 + std::abs(quadratic))))
    throw NumericalError("oracle_failure", "damping extrapolation did not converge");
  return out;
}

}  // namespace cpo
