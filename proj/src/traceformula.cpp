#include "cpo/traceformula.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "cpo/errors.hpp"
#include "cpo/spectrum.hpp"

namespace cpo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNegligible = 1e-16;
const Cx kI(0.0, 1.0);

void validate_density_args(const std::vector<double>& grid, int r_max, double sigma) {
  if (grid.empty()) throw ValidationError("energy grid is empty");
  if (r_max < 0) throw ValidationError("r_max must be nonnegative");
  if (!(sigma > 0)) throw ValidationError("sigma must be positive");
}

double gamma_at(const Potential& V, double E) { return E > V.min_value() ? phase_space_volume(V, E) : 0.0; }

std::string coords_label(const Cycle& c) {
  if (c.coords.empty()) return "direct";
  std::string s = "(";
  for (std::size_t i = 0; i < c.coords.size(); ++i) s += (i ? "," : "") + std::to_string(c.coords[i]);
  return s + ")";
}

Cycle libration_class(const EnergyCurve& curve, const RealOrbit& o) {
  try {
    const ClassMatch m = match_class(curve, o.action, o.time_period);
    if (m.residual < 1e-6) return m.cycle;
  } catch (const NumericalError&) {
  }
  return Cycle{};
}

// One orbit channel of a class at a given energy.
struct ChannelOrbit {
  Cx action, period;
  std::optional<Cx> q_turn;  // start point for the complex-time seed
  Cycle cycle;
  std::string label;
  int structure = 0;  // changes when the orbit topology changes
};

std::optional<ChannelOrbit> channel_orbit(const EnergyCurve& curve, const ClassSpec& spec, std::size_t index) {
  if (spec.real_librations) {
    const auto orbits = real_orbits(curve);
    if (index >= orbits.size()) return std::nullopt;
    const RealOrbit& o = orbits[orbits.size() - 1 - index];
    ChannelOrbit c{o.action, o.time_period, Cx(o.right), libration_class(curve, o),
                   fmt::format("libration[{:.6g},{:.6g}]", o.left, o.right), int(orbits.size())};
    return c;
  }
  if (index > 0) return std::nullopt;
  if (!spec.cycle.primitive()) throw ValidationError("quantum classes must be primitive cycles");
  const HomologyBasis basis = homology_basis(curve);
  if (spec.cycle.coords.size() != basis.generators.size())
    throw ValidationError("class dimension does not match the homology basis");
  const PeriodData pd = cycle_period(curve, basis, spec.cycle);
  ChannelOrbit c{pd.action, pd.time_period, std::nullopt, spec.cycle, coords_label(spec.cycle), 0};
  int nonzero = 0;
  std::size_t which = 0;
  for (std::size_t i = 0; i < spec.cycle.coords.size(); ++i)
    if (spec.cycle.coords[i] != 0) ++nonzero, which = i;
  if (nonzero == 1) {
    c.q_turn = spec.cycle.coords[which] > 0 ? basis.generators[which].focus_b : basis.generators[which].focus_a;
  } else {
    for (const auto& o : real_orbits(curve))
      if (std::abs(o.action - pd.action) + std::abs(o.time_period - pd.time_period) < 1e-7 * (1.0 + std::abs(pd.action)))
        c.q_turn = Cx(o.right);
  }
  return c;
}

std::size_t channel_count(const Potential& V, const std::vector<double>& grid, const ClassSpec& spec) {
  if (!spec.real_librations) return 1;
  std::size_t n = 0;
  for (double E : grid) {
    try {
      n = std::max(n, real_orbits(curve(V, E)).size());
    } catch (const Error&) {
    }
  }
  return n;
}

// Refined orbit for a channel.
LoopState channel_loop(const Potential& V, double E, const ChannelOrbit& c, int n_modes) {
  if (!c.q_turn) throw NumericalError("unsupported_class", "no seed construction for composite complex cycles");
  const LoopState seed = trajectory_seed(V, E, *c.q_turn, c.period, std::max(8, n_modes / 2));
  RefineOptions opt;
  opt.identify_class = false;
  const RefinedOrbit o = refine_orbit(V, seed, opt);
  if (std::abs(o.action - c.action) > 1e-6 * (1.0 + std::abs(c.action)))
    throw NumericalError("class_mismatch", "refined orbit drifted to a different class");
  return o.state;
}

double term_weight(int r, Cx S, Cx T, double sigma) {
  const double g = std::exp(-0.5 * std::pow(r * std::abs(T) * sigma, 2));
  return g * std::exp(-r * S.imag());
}

}  // namespace

const char* to_string(Provenance p) {
  return p == Provenance::semiclassical ? "semiclassical" : "one-loop-quantum";
}

MaslovResult maslov_index(const EnergyCurve& curve, const Cycle& cycle) {
  MaslovResult out;
  const HomologyBasis basis = homology_basis(curve);
  auto is_real = [](Cx z) { return std::abs(z.imag()) <= 1e-9 * (1.0 + std::abs(z)); };
  if (basis.generators.empty()) {
    int real = 0;
    for (Cx b : curve.branch_points) real += is_real(b);
    out.index = real;
  } else {
    if (cycle.coords.size() != basis.generators.size())
      throw ValidationError("cycle dimension does not match the homology basis");
    bool real_class = false;
    try {
      const RealOrbitClass rc = real_orbit_cycle(curve);
      Cycle neg = rc.cycle;
      for (int& c : neg.coords) c = -c;
      real_class = cycle.coords == rc.cycle.coords || cycle.coords == neg.coords;
    } catch (const NumericalError&) {
    }
    if (real_class) {
      out.index = 2;
    } else {
      for (std::size_t i = 0; i < cycle.coords.size(); ++i) {
        const auto& g = basis.generators[i];
        out.index += std::abs(cycle.coords[i]) * (int(is_real(g.focus_a)) + int(is_real(g.focus_b)));
      }
      out.flagged = true;
      out.note = "complex cycle: turning-point count is a branch choice";
    }
  }
  if (out.index == 0) {
    out.flagged = true;
    out.note = "no real turning point traversed";
  }
  return out;
}

std::vector<TraceTerm> semiclassical_terms(const Potential& V, double E, int r_max) {
  if (r_max < 0) throw ValidationError("r_max must be nonnegative");
  const EnergyCurve c = curve(V, E);
  std::vector<TraceTerm> terms;
  for (const RealOrbit& o : real_orbits(c)) {
    const Cycle cls = libration_class(c, o);
    for (int r = 1; r <= r_max; ++r) {
      TraceTerm t;
      t.orbit_class = cls;
      t.label = fmt::format("libration[{:.6g},{:.6g}]", o.left, o.right);
      t.repetition = r;
      t.action = o.action;
      t.time_period = o.time_period;
      t.amplitude = o.time_period / kTwoPi;
      t.maslov = 2;
      t.intersection = 1;
      t.provenance = Provenance::semiclassical;
      t.energy = E;
      terms.push_back(std::move(t));
    }
  }
  return terms;
}

DensityResult semiclassical_density(const Potential& V, const std::vector<double>& grid, int r_max, double sigma) {
  validate_density_args(grid, r_max, sigma);
  DensityResult out;
  for (double E : grid) {
    double d = 0.0;
    try {
      (void)curve(V, E);
      d = gamma_at(V, E);
      if (E > V.min_value()) {
        for (const auto& t : semiclassical_terms(V, E, r_max)) {
          const int r = t.repetition;
          const double T = t.time_period.real();
          d += 2.0 * t.amplitude.real() * std::cos(r * (t.action.real() - 0.5 * std::numbers::pi * t.maslov)) *
               std::exp(-0.5 * std::pow(r * T * sigma, 2));
        }
      }
    } catch (const DegenerateEnergyError& e) {
      out.skipped.push_back({E, e.what()});
      continue;
    }
    out.energies.push_back(E);
    out.density.push_back(d);
  }
  return out;
}

int intersection_rule(Cx action, std::optional<int> override_n) {
  const double tol = 1e-12 * (1.0 + std::abs(action));
  if (action.imag() < -tol) {
    if (override_n && *override_n != 0)
      throw ValidationError("class with Im S < 0 cannot intersect the real contour (n must be 0)");
    return 0;
  }
  if (override_n) return *override_n;
  return 1;
}

std::vector<TraceTerm> quantum_terms(const Potential& V, double E, const std::vector<ClassSpec>& classes, int r_max,
                                     double sigma) {
  validate_density_args({E}, r_max, sigma);
  const EnergyCurve c = curve(V, E);
  std::vector<TraceTerm> terms;
  for (const ClassSpec& spec : classes) {
    for (std::size_t idx = 0;; ++idx) {
      const auto ch = channel_orbit(c, spec, idx);
      if (!ch) break;
      const int n = intersection_rule(ch->action, spec.intersection);
      int r_need = 0;
      while (r_need < r_max && term_weight(r_need + 1, ch->action, ch->period, sigma) >= kNegligible) ++r_need;
      std::vector<GaussianAmplitude> amps;
      if (n != 0 && r_need > 0) amps = gaussian_amplitudes(V, channel_loop(V, E, *ch, 32), r_need);
      for (int r = 1; r <= r_need; ++r) {
        TraceTerm t;
        t.orbit_class = ch->cycle;
        t.label = ch->label;
        t.repetition = r;
        t.action = ch->action;
        t.time_period = ch->period;
        t.intersection = n;
        t.provenance = Provenance::one_loop_quantum;
        t.energy = E;
        if (n != 0) {
          const GaussianAmplitude& g = amps[std::size_t(r - 1)];
          t.amplitude = g.amplitude;
          t.maslov = g.maslov;
          t.det_ratio = g.det_ratio;
          t.semiclassical_ratio = std::abs(ch->period) / kTwoPi *
                                  std::polar(1.0, -0.5 * std::numbers::pi * r * g.maslov) / g.amplitude;
        }
        terms.push_back(std::move(t));
      }
    }
  }
  return terms;
}

DensityResult quantum_density(const Potential& V, const std::vector<double>& grid, const std::vector<ClassSpec>& classes,
                              int r_max, double sigma, const QuantumOptions& opt) {
  validate_density_args(grid, r_max, sigma);
  if (opt.amplitude_nodes < 1) throw ValidationError("amplitude_nodes must be positive");
  DensityResult out;
  out.notes.push_back("amplitudes are one-loop (Gaussian) approximations");

  // Smooth term and regular grid points.
  std::vector<double> energies, density;
  for (double E : grid) {
    try {
      (void)curve(V, E);
      density.push_back(gamma_at(V, E));
      energies.push_back(E);
    } catch (const DegenerateEnergyError& e) {
      out.skipped.push_back({E, e.what()});
    }
  }

  for (const ClassSpec& spec : classes) {
    const std::size_t channels = channel_count(V, energies, spec);
    for (std::size_t idx = 0; idx < channels; ++idx) {
      // Exact (S, T) per grid point; runs of constant orbit structure.
      std::vector<std::optional<ChannelOrbit>> orb(energies.size());
      for (std::size_t i = 0; i < energies.size(); ++i) {
        if (energies[i] <= V.min_value() && spec.real_librations) continue;
        try {
          orb[i] = channel_orbit(curve(V, energies[i]), spec, idx);
        } catch (const NumericalError& e) {
          out.notes.push_back(fmt::format("class {} skipped at E={:.17g}: {}", coords_label(spec.cycle), energies[i], e.what()));
        }
      }
      std::size_t i = 0;
      while (i < energies.size()) {
        if (!orb[i]) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j + 1 < energies.size() && orb[j + 1] && orb[j + 1]->structure == orb[i]->structure) ++j;
        // Nodes evenly spread over [i, j].
        const std::size_t len = j - i + 1;
        const std::size_t nodes = std::min<std::size_t>(std::size_t(opt.amplitude_nodes), len);
        std::vector<std::size_t> node_idx;
        for (std::size_t k = 0; k < nodes; ++k)
          node_idx.push_back(nodes == 1 ? i : i + (k * (len - 1)) / (nodes - 1));
        // Per node: log of the amplitude factor ratio^{-1/2}, per r; Maslov.
        std::vector<std::vector<Cx>> logf(nodes);
        std::vector<int> mu(nodes, 2);
        bool ok = true;
        const int n_first = intersection_rule(orb[i]->action, spec.intersection);
        if (n_first != 0) {
          for (std::size_t k = 0; k < nodes && ok; ++k) {
            const double E = energies[node_idx[k]];
            const ChannelOrbit& ch = *orb[node_idx[k]];
            int r_need = 0;
            for (std::size_t m = i; m <= j; ++m)
              for (int r = 1; r <= r_max && term_weight(r, orb[m]->action, orb[m]->period, sigma) >= kNegligible; ++r)
                r_need = std::max(r_need, r);
            try {
              const LoopState loop = channel_loop(V, E, ch, opt.n_modes);
              if (r_need > 0)
                for (const GaussianAmplitude& g : gaussian_amplitudes(V, loop, r_need)) {
                  logf[k].push_back(-0.5 * g.log_det_ratio);
                  mu[k] = g.maslov;
                }
            } catch (const Error& e) {
              out.notes.push_back(fmt::format("{}: one-loop orbit unavailable near E={:.17g} ({}); run [{:.17g},{:.17g}] omitted",
                                              orb[i]->label, E, e.code(), energies[i], energies[j]));
              ok = false;
            }
          }
        }
        if (ok) {
          for (std::size_t m = i; m <= j; ++m) {
            const ChannelOrbit& ch = *orb[m];
            const int n = intersection_rule(ch.action, spec.intersection);
            if (n == 0) continue;
            // locate the bracketing nodes
            std::size_t k = 0;
            while (k + 1 < nodes && node_idx[k + 1] < m) ++k;
            const std::size_t k2 = std::min(k + 1, nodes - 1);
            const double e0 = energies[node_idx[k]], e1 = energies[node_idx[k2]];
            const double w = k2 == k || e1 == e0 ? 0.0 : (energies[m] - e0) / (e1 - e0);
            const int maslov = w < 0.5 ? mu[k] : mu[k2];
            for (int r = 1; r <= r_max; ++r) {
              if (std::size_t(r) > logf[k].size() || std::size_t(r) > logf[k2].size()) break;
              const Cx lf = (1.0 - w) * logf[k][std::size_t(r - 1)] + w * logf[k2][std::size_t(r - 1)];
              const Cx amp = std::abs(ch.period) / kTwoPi * std::exp(lf) *
                             std::polar(1.0, -0.5 * std::numbers::pi * r * maslov);
              const double g = std::exp(-0.5 * std::pow(r * std::abs(ch.period) * sigma, 2));
              density[m] += 2.0 * (double(n) * amp * std::exp(kI * double(r) * ch.action)).real() * g;
            }
          }
        }
        i = j + 1;
      }
      if (spec.real_librations == false && orb.size() && orb.front() && orb.front()->action.imag() < 0)
        out.notes.push_back(fmt::format("class {} has Im S < 0 and is excluded by the thimble construction",
                                        coords_label(spec.cycle)));
    }
  }
  out.energies = std::move(energies);
  out.density = std::move(density);
  return out;
}

EbkResult ebk_levels(const Potential& V, int n_min, int n_max) {
  if (n_min < 0 || n_max < n_min) throw ValidationError("ebk_levels: invalid n range");
  const double vmin = V.min_value();
  const double scale = 1.0 + std::abs(vmin);
  auto action_at = [&](double E) {
    if (E <= vmin) return 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      try {
        const auto orbits = real_orbits(curve(V, E));
        return orbits.empty() ? 0.0 : orbits.back().action;
      } catch (const DegenerateEnergyError&) {
        E += 1e-9 * scale;
      }
    }
    throw NumericalError("degenerate_energy", "cannot evaluate the action near a critical value");
  };
  // Separatrices: the rightmost libration changes at critical values, and
  // the action can jump there.
  std::vector<std::pair<double, double>> gaps;
  for (double c : V.critical_values()) {
    if (c <= vmin + 1e-12 * scale) continue;
    const double delta = 1e-9 * scale;
    const double below = action_at(c - delta), above = action_at(c + delta);
    if (std::abs(above - below) > 1e-6 * (1.0 + above)) gaps.emplace_back(std::min(below, above), std::max(below, above));
  }
  EbkResult out;
  for (int n = n_min; n <= n_max; ++n) {
    const double target = kTwoPi * (n + 0.5);
    if (std::any_of(gaps.begin(), gaps.end(), [&](const auto& g) { return target > g.first && target < g.second; })) {
      out.notes.push_back(fmt::format("n={}: quantization condition falls in the action jump at a separatrix", n));
      continue;
    }
    double hi = vmin + 1.0;
    while (action_at(hi) < target) hi = vmin + 2.0 * (hi - vmin);
    const double lo = vmin + 1e-12 * scale;
    auto f = [&](double E) { return action_at(E) - target; };
    const auto bracket = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(52));
    const double a = bracket.first, b = bracket.second;
    if (std::abs(action_at(b) - action_at(a)) > 1e-6 * (1.0 + target)) {
      out.notes.push_back(fmt::format("n={}: action jumps across E={:.17g} (separatrix); no level assigned", n, a));
      continue;
    }
    out.levels.push_back({n, 0.5 * (a + b)});
  }
  return out;
}

TunnelingReport tunneling_report(const std::vector<Potential>& family, int doublet_index) {
  if (family.empty()) throw ValidationError("tunneling_report: empty family");
  if (doublet_index < 0) throw ValidationError("tunneling_report: doublet index must be nonnegative");
  TunnelingReport out;
  for (std::size_t m = 0; m < family.size(); ++m) {
    const Potential& V = family[m];
    const auto& c = V.coeffs();
    double cmax = 0.0;
    for (double x : c) cmax = std::max(cmax, std::abs(x));
    bool symmetric = true;
    for (std::size_t k = 1; k < c.size(); k += 2) symmetric &= std::abs(c[k]) <= 1e-14 * cmax;
    const auto crit = V.critical_points();
    if (crit.size() != 3) {
      out.skipped.emplace_back(m, "single well: no doublet");
      continue;
    }
    if (!symmetric) {
      out.skipped.emplace_back(m, "asymmetric well: doublet not protected by symmetry");
      continue;
    }
    const double barrier_q = crit[1], barrier = V(barrier_q);
    const Spectrum s = eigenvalues(V, 2 * doublet_index + 2, 1e-12);
    const double lo = s.eigenvalues[std::size_t(2 * doublet_index)];
    const double hi = s.eigenvalues[std::size_t(2 * doublet_index + 1)];
    const double split = hi - lo;
    if (!(split > 1e-12)) {
      out.skipped.emplace_back(m, "splitting below 1e-12 is not resolvable");
      continue;
    }
    const double mean = 0.5 * (lo + hi);
    const EnergyCurve ec = curve(V, mean);
    const HomologyBasis basis = homology_basis(ec);
    const GeneratorContour* tun = nullptr;
    for (const auto& g : basis.generators)
      if (!tun || std::abs(0.5 * (g.focus_a + g.focus_b) - barrier_q) <
                      std::abs(0.5 * (tun->focus_a + tun->focus_b) - barrier_q))
        tun = &g;
    if (!tun) {
      out.skipped.emplace_back(m, "no tunneling cycle");
      continue;
    }
    const double theta = std::abs(generator_period(ec, *tun).action.imag());
    out.points.push_back({m, split, mean, theta, 0.0, mean >= barrier});
  }
  if (out.points.size() >= 2) {
    // least squares ln(split) = a + b * (-theta)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(out.points.size());
    for (const auto& p : out.points) {
      const double x = -p.theta, y = std::log(p.splitting);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (std::abs(den) > 1e-300) {
      const double b = (n * sxy - sx * sy) / den;
      const double a = (sy - b * sx) / n;
      out.slope = b;
      out.intercept = a;
      for (auto& p : out.points) p.residual = std::log(p.splitting) - (a - b * p.theta);
    }
  }
  return out;
}

double smooth_level_count(const Potential& V, double E) {
  const double vmin = V.min_value();
  if (E <= vmin) return 0.0;
  // the integral of Gamma is the enclosed phase-space area over 2 pi
  auto area = [&](double e) {
    double a = 0.0;
    for (const RealOrbit& o : real_orbits(curve(V, e))) a += o.action;
    return a / kTwoPi;
  };
  try {
    return area(E);
  } catch (const NumericalError&) {
    const double h = 1e-9 * (1.0 + std::abs(E));
    return 0.5 * (area(E - h) + area(E + h));
  }
}

}  // namespace cpo
