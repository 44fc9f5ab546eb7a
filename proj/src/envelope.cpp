#include "plurikit/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "plurikit/errors.hpp"
#include "plurikit/parallel.hpp"

namespace plurikit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void conjugate_range(std::span<const double> xs, std::span<const double> fs, std::span<const double> ps,
                     std::span<double> out, std::size_t jlo, std::size_t jhi, std::size_t ilo, std::size_t ihi) {
  while (jlo < jhi) {
    const std::size_t mid = jlo + (jhi - jlo) / 2;
    const double p = ps[mid];
    double best = -kInf;
    std::size_t arg = ilo;
    for (std::size_t i = ilo; i <= ihi; ++i) {
      const double val = p * xs[i] - fs[i];
      if (val >= best) {
        best = val;
        arg = i;
      }
    }
    out[mid] = best;
    // The largest maximizer splits the candidates for smaller and larger p.
    conjugate_range(xs, fs, ps, out, jlo, mid, ilo, arg);
    jlo = mid + 1;
    ilo = arg;
  }
}

std::vector<double> axis_coords(const GridDomain& d, int axis) {
  std::vector<double> c(d.count[axis]);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = d.coord(axis, i);
  return c;
}

// Largest |second difference| per axis over nodes interior in every
// non-periodic axis, restricted to [from, to) per axis.
std::array<double, 2> max_second_differences(const GridField& u, std::array<std::size_t, 2> from,
                                             std::array<std::size_t, 2> to) {
  const GridDomain& d = u.domain();
  std::array<double, 2> out{0.0, 0.0};
  for (int a = 0; a < d.dim; ++a) {
    const double h = d.spacing(a);
    for (std::size_t i = from[0]; i < to[0]; ++i) {
      for (std::size_t j = from[1]; j < to[1]; ++j) {
        const std::size_t c = a == 0 ? i : j;
        const std::size_t n = d.count[a];
        std::size_t m, p;
        if (d.periodic(a)) {
          m = (c + n - 1) % n;
          p = (c + 1) % n;
        } else {
          if (c == 0 || c + 1 == n) continue;
          m = c - 1;
          p = c + 1;
        }
        const double um = a == 0 ? u[d.index(m, j)] : u[d.index(i, m)];
        const double up = a == 0 ? u[d.index(p, j)] : u[d.index(i, p)];
        out[static_cast<std::size_t>(a)] =
            std::max(out[static_cast<std::size_t>(a)], std::abs(um - 2.0 * u[d.index(i, j)] + up) / (h * h));
      }
    }
  }
  return out;
}

void check_boundary_slopes(const GridField& u, const LatticePolytope& polytope, double tol) {
  const GridDomain& d = u.domain();
  if (d.dim == 1) {
    const std::size_t n = d.count[0];
    const double h = d.spacing(0);
    const double left = (u[1] - u[0]) / h;
    const double right = (u[n - 1] - u[n - 2]) / h;
    const double lo = polytope.lower()[0], hi = polytope.upper()[0];
    if (left > lo + tol || right < hi - tol) {
      std::ostringstream msg;
      msg << "v-box too narrow: boundary slopes (" << left << ", " << right << ") do not reach [" << lo << ", " << hi
          << "] within " << tol << "; widen the box";
      throw NumericalError("toric_equilibrium", msg.str());
    }
    return;
  }
  const std::size_t n0 = d.count[0], n1 = d.count[1];
  // Second-order differences, one-sided at the box edges.
  auto diff = [&](std::size_t i, std::size_t j, int axis) {
    const std::size_t n = d.count[axis];
    const std::size_t c = axis == 0 ? i : j;
    const double h = d.spacing(axis);
    auto at = [&](std::size_t m) { return axis == 0 ? u[d.index(m, j)] : u[d.index(i, m)]; };
    if (c == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (c + 1 == n) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    return (at(c + 1) - at(c - 1)) / (2.0 * h);
  };
  auto grad = [&](std::size_t i, std::size_t j) { return Vec2{diff(i, j, 0), diff(i, j, 1)}; };
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      if (i != 0 && j != 0 && i + 1 != n0 && j + 1 != n1) continue;
      const Vec2 g = grad(i, j);
      const double dist = polytope.signed_boundary_distance(g);
      if (dist > tol) {
        std::ostringstream msg;
        msg << "v-box too narrow: gradient (" << g[0] << ", " << g[1] << ") at boundary node (" << i << ", " << j
            << ") lies " << dist << " inside the polytope (tol " << tol << "); widen the box";
        throw NumericalError("toric_equilibrium", msg.str());
      }
    }
  }
}

}  // namespace

std::vector<double> conjugate_1d(std::span<const double> xs, std::span<const double> fs, std::span<const double> ps) {
  if (xs.size() != fs.size()) throw std::invalid_argument("conjugate_1d: xs and fs differ in length");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("conjugate_1d: xs must be strictly increasing");
  }
  for (std::size_t j = 1; j < ps.size(); ++j) {
    if (!(ps[j] >= ps[j - 1])) throw std::invalid_argument("conjugate_1d: ps must be increasing");
  }
  std::vector<double> x, f;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (fs[i] == kInf) continue;
    x.push_back(xs[i]);
    f.push_back(fs[i]);
  }
  std::vector<double> out(ps.size(), -kInf);
  if (x.empty() || ps.empty()) return out;
  conjugate_range(x, f, ps, out, 0, ps.size(), 0, x.size() - 1);
  return out;
}

GridDomain make_dual_grid(const GridDomain& primal, const LatticePolytope& polytope, int factor) {
  if (factor < 1) throw std::invalid_argument("dual grid factor must be >= 1");
  if (primal.kind != GridDomain::Kind::VBox || primal.dim != polytope.dimension()) {
    throw std::invalid_argument("dual grid needs a v-box of the polytope's dimension");
  }
  const Vec2 lo = polytope.lower(), hi = polytope.upper();
  const auto f = static_cast<std::size_t>(factor);
  if (primal.dim == 1) return GridDomain::vbox1(lo[0], hi[0], f * (primal.count[0] - 1) + 1);
  return GridDomain::vbox2(lo, hi, {f * (primal.count[0] - 1) + 1, f * (primal.count[1] - 1) + 1});
}

GridField legendre_conjugate(const GridField& u, const GridDomain& dual) {
  const GridDomain& d = u.domain();
  if (d.kind != GridDomain::Kind::VBox || dual.kind != GridDomain::Kind::VBox || d.dim != dual.dim) {
    throw std::invalid_argument("legendre_conjugate: primal and dual must be v-boxes of equal dimension");
  }
  const auto x0 = axis_coords(d, 0);
  const auto p0 = axis_coords(dual, 0);
  if (d.dim == 1) return {dual, conjugate_1d(x0, u.values(), p0)};

  const auto x1 = axis_coords(d, 1);
  const auto p1 = axis_coords(dual, 1);
  const std::size_t n0 = d.count[0], n1 = d.count[1], m0 = dual.count[0], m1 = dual.count[1];
  // g_i(q) = max_j (q y_j - u_ij), then u*(p, q) = max_i (p x_i + g_i(q)).
  std::vector<std::vector<double>> g(n0);
  parallel_for(n0, [&](std::size_t i) { g[i] = conjugate_1d(x1, u.values().subspan(i * n1, n1), p1); });
  std::vector<double> out(m0 * m1);
  parallel_for(m1, [&](std::size_t b) {
    std::vector<double> f(n0);
    for (std::size_t i = 0; i < n0; ++i) f[i] = -g[i][b];
    const auto col = conjugate_1d(x0, f, p0);
    for (std::size_t a = 0; a < m0; ++a) out[dual.index(a, b)] = col[a];
  });
  return {dual, std::move(out)};
}

GridField biconjugate(const GridField& u_star, const LatticePolytope& polytope, const GridDomain& primal) {
  const GridDomain& dual = u_star.domain();
  const auto x0 = axis_coords(primal, 0);
  const auto p0 = axis_coords(dual, 0);
  if (primal.dim == 1) {
    auto vals = conjugate_1d(p0, u_star.values(), x0);
    return {primal, std::move(vals)};
  }
  const auto x1 = axis_coords(primal, 1);
  const auto p1 = axis_coords(dual, 1);
  const std::size_t n0 = primal.count[0], n1 = primal.count[1], m0 = dual.count[0], m1 = dual.count[1];
  const double tol = 1e-12 * std::max(1.0, polytope.diameter());
  std::vector<std::vector<double>> h(m0);
  parallel_for(m0, [&](std::size_t a) {
    std::vector<double> f(m1);
    for (std::size_t b = 0; b < m1; ++b) {
      f[b] = polytope.contains({p0[a], p1[b]}, tol) ? u_star[dual.index(a, b)] : kInf;
    }
    h[a] = conjugate_1d(p1, f, x1);
  });
  std::vector<double> out(n0 * n1);
  parallel_for(n1, [&](std::size_t j) {
    std::vector<double> f(m0);
    for (std::size_t a = 0; a < m0; ++a) f[a] = h[a][j] == -kInf ? kInf : -h[a][j];
    const auto col = conjugate_1d(p0, f, x0);
    for (std::size_t i = 0; i < n0; ++i) out[primal.index(i, j)] = col[i];
  });
  return {primal, std::move(out)};
}

double default_eps_D(const GridField& phi, double residual) {
  const GridDomain& d = phi.domain();
  const auto kappa = max_second_differences(phi, {0, 0}, {d.count[0], d.count[1]});
  double eps = 0.0;
  for (int a = 0; a < d.dim; ++a) {
    const double h = d.spacing(a);
    eps = std::max(eps, 0.5 * h * h * kappa[static_cast<std::size_t>(a)]);
  }
  return std::max(10.0 * residual, eps);
}

MaskField contact_set(const GridField& phi, const GridField& phi_e, double eps_D) {
  if (!(phi.domain() == phi_e.domain())) throw std::invalid_argument("contact_set: domains differ");
  MaskField m{phi.domain(), std::vector<std::uint8_t>(phi.size())};
  for (std::size_t i = 0; i < phi.size(); ++i) m.values[i] = phi[i] - phi_e[i] <= eps_D ? 1 : 0;
  return m;
}

EnvelopeResult toric_equilibrium(const GridField& u, const LatticePolytope& polytope, const EnvelopeOptions& opt) {
  if (opt.dual_factor < 4) throw std::invalid_argument("dual_factor must be >= 4");
  const GridDomain& d = u.domain();
  for (int a = 0; a < d.dim; ++a) {
    if (d.count[a] < 3) throw std::invalid_argument("toric_equilibrium needs >= 3 nodes per axis");
  }
  const double slope_tol = opt.slope_tol >= 0.0 ? opt.slope_tol : 1e-3 * polytope.diameter();
  check_boundary_slopes(u, polytope, slope_tol);

  const GridDomain dual = make_dual_grid(d, polytope, opt.dual_factor);
  EnvelopeResult r;
  r.phi_e = biconjugate(legendre_conjugate(u, dual), polytope, d);
  r.method = "biconjugate";
  for (std::size_t i = 0; i < u.size(); ++i) r.residual = std::max(r.residual, r.phi_e[i] - u[i]);
  r.eps_D = opt.eps_D >= 0.0 ? opt.eps_D : default_eps_D(u, r.residual);
  r.contact = contact_set(u, r.phi_e, r.eps_D);
  return r;
}

std::vector<double> convex_envelope_1d(std::span<const double> xs, std::span<const double> fs) {
  if (xs.size() != fs.size()) throw std::invalid_argument("convex_envelope_1d: xs and fs differ in length");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] == xs[i - 1]) throw std::invalid_argument("convex_envelope_1d: duplicate abscissae");
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("convex_envelope_1d: abscissae must increase");
  }
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cr = (xs[b] - xs[a]) * (fs[i] - fs[a]) - (fs[b] - fs[a]) * (xs[i] - xs[a]);
      if (cr > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(i);
  }
  std::vector<double> out(xs.size());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (seg + 1 < hull.size() && hull[seg + 1] < i) ++seg;
    if (seg + 1 >= hull.size() || hull[seg] == i) {
      out[i] = fs[i];
      continue;
    }
    const std::size_t a = hull[seg], b = hull[seg + 1];
    if (b == i) {
      out[i] = fs[i];
      continue;
    }
    const double t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
    out[i] = (1.0 - t) * fs[a] + t * fs[b];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chart obstacle problem

EnvelopeResult sor_envelope(const GridField& phi, const GridField& ring, const EnvelopeOptions& opt) {
  const GridDomain& d = phi.domain();
  if (d.kind != GridDomain::Kind::Chart) throw std::invalid_argument("sor_envelope expects a chart grid");
  if (!(ring.domain() == d)) throw std::invalid_argument("sor_envelope: ring data on a different grid");
  if (d.count[1] % 2 != 0) throw std::invalid_argument("sor_envelope: n_theta must be even for red-black ordering");
  if (!(opt.sor_omega > 0.0 && opt.sor_omega < 2.0)) throw std::invalid_argument("sor_omega must lie in (0, 2)");
  const std::size_t ns = d.count[0], nt = d.count[1];
  for (std::size_t i : {std::size_t{0}, ns - 1}) {
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t k = d.index(i, j);
      if (ring[k] > phi[k] + 1e-12 * std::max(1.0, std::abs(phi[k]))) {
        throw std::invalid_argument("sor_envelope: boundary data exceeds phi on the ring");
      }
    }
  }
  const double hs = d.spacing(0), ht = d.spacing(1);
  const double ws = 1.0 / (hs * hs), wt = 1.0 / (ht * ht);
  const double denom = 2.0 * (ws + wt);
  const double tol = opt.tol_sor * std::max(1.0, phi.max_abs());
  const auto ph = phi.values();

  std::vector<double> psi(ph.begin(), ph.end());
  for (std::size_t j = 0; j < nt; ++j) {
    psi[d.index(0, j)] = ring[d.index(0, j)];
    psi[d.index(ns - 1, j)] = ring[d.index(ns - 1, j)];
  }
  auto average = [&](std::size_t i, std::size_t j) {
    const std::size_t jm = (j + nt - 1) % nt, jp = (j + 1) % nt;
    return (ws * (psi[d.index(i - 1, j)] + psi[d.index(i + 1, j)]) +
            wt * (psi[d.index(i, jm)] + psi[d.index(i, jp)])) /
           denom;
  };

  EnvelopeResult r;
  r.method = "sor";
  std::vector<double> row_update(ns, 0.0);
  long sweep = 0;
  double update = kInf;
  while (update >= tol) {
    if (sweep >= opt.max_iterations) {
      std::ostringstream msg;
      msg << "projected SOR did not converge in " << sweep << " sweeps; max update history:";
      for (double h : r.residual_history) msg << ' ' << h;
      msg << ' ' << update;
      throw NumericalError("sor_envelope", msg.str());
    }
    for (std::size_t color = 0; color < 2; ++color) {
      parallel_for(ns - 2, [&](std::size_t row) {
        const std::size_t i = row + 1;
        double m = color == 0 ? 0.0 : row_update[i];
        for (std::size_t j = (i + color) % 2; j < nt; j += 2) {
          const std::size_t k = d.index(i, j);
          const double next = std::min(ph[k], psi[k] + opt.sor_omega * (average(i, j) - psi[k]));
          m = std::max(m, std::abs(next - psi[k]));
          psi[k] = next;
        }
        row_update[i] = m;
      });
    }
    update = 0.0;
    for (std::size_t i = 1; i + 1 < ns; ++i) update = std::max(update, row_update[i]);
    ++sweep;
    if (sweep % 100 == 0) r.residual_history.push_back(update);
  }
  r.iterations = sweep;

  // Complementarity min(phi - psi, avg - psi) = 0, in value units.
  double res = 0.0;
  for (std::size_t i = 1; i + 1 < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t k = d.index(i, j);
      res = std::max(res, std::abs(std::min(ph[k] - psi[k], average(i, j) - psi[k])));
      res = std::max(res, psi[k] - ph[k]);
    }
  }
  r.residual = res;
  r.phi_e = GridField(d, std::move(psi));
  r.eps_D = opt.eps_D >= 0.0 ? opt.eps_D : default_eps_D(phi, r.residual);
  r.contact = contact_set(phi, r.phi_e, r.eps_D);
  return r;
}

double RadialEnvelope::operator()(double x) const {
  if (v.empty()) throw std::logic_error("empty radial envelope");
  if (x <= v.front()) return e.front();
  if (x >= v.back()) return e.back();
  const double h = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
  const auto i = std::min(static_cast<std::size_t>((x - v.front()) / h), v.size() - 2);
  const double t = (x - v[i]) / (v[i + 1] - v[i]);
  return (1.0 - t) * e[i] + t * e[i + 1];
}

RadialEnvelope radial_envelope(const std::function<double(double)>& g, double v_lo, double v_hi, std::size_t n) {
  if (n < 3 || !(v_lo < v_hi)) throw std::invalid_argument("radial_envelope needs v_lo < v_hi and n >= 3");
  RadialEnvelope r;
  r.v.resize(n);
  r.g.resize(n);
  const double h = (v_hi - v_lo) / static_cast<double>(n - 1);
  parallel_for(n, [&](std::size_t i) {
    r.v[i] = i + 1 == n ? v_hi : v_lo + static_cast<double>(i) * h;
    r.g[i] = g(r.v[i]);
  });
  // A flat point far left forces slopes >= 0 (bounded at the origin); a
  // slope-one point far right forces slopes <= 1 (growth at infinity).
  const double far = v_hi - v_lo;
  std::vector<double> xs, fs;
  xs.reserve(n + 2);
  fs.reserve(n + 2);
  xs.push_back(v_lo - far);
  fs.push_back(*std::min_element(r.g.begin(), r.g.end()));
  xs.insert(xs.end(), r.v.begin(), r.v.end());
  fs.insert(fs.end(), r.g.begin(), r.g.end());
  xs.push_back(v_hi + far);
  fs.push_back(r.g.back() + far);
  const auto env = convex_envelope_1d(xs, fs);
  r.e.assign(env.begin() + 1, env.end() - 1);
  return r;
}

RadialSandwich radial_sandwich(const WeightSpec& weight, const GridDomain& chart) {
  if (weight.is_toric() || chart.kind != GridDomain::Kind::Chart) {
    throw std::invalid_argument("radial_sandwich needs a chart weight and chart grid");
  }
  const double v_lo = 2.0 * chart.lo[0] - 40.0, v_hi = 2.0 * chart.hi[0] + 40.0;
  const auto n = static_cast<std::size_t>(std::ceil((v_hi - v_lo) / 2e-3)) + 1;
  RadialSandwich s;
  if (weight.s1_invariant()) {
    s.lower = radial_envelope([&](double v) { return weight.value({std::exp(0.5 * v), 0.0}); }, v_lo, v_hi, n);
    s.upper = s.lower;
    return s;
  }
  const std::size_t n_theta = std::max<std::size_t>(256, 4 * chart.count[1]);
  auto extreme = [&](double v, bool upper) {
    const double r = std::exp(0.5 * v);
    bool touched = false;
    for (const auto& b : weight.bumps()) {
      const double c = std::hypot(b.center[0], b.center[1]);
      if (r > c - b.radius && r < c + b.radius) touched = true;
    }
    if (!touched) return weight.value({r, 0.0});
    double m = upper ? -kInf : kInf;
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_theta);
      const double x = weight.value({r * std::cos(t), r * std::sin(t)});
      m = upper ? std::max(m, x) : std::min(m, x);
    }
    return m;
  };
  s.lower = radial_envelope([&](double v) { return extreme(v, false); }, v_lo, v_hi, n);
  s.upper = radial_envelope([&](double v) { return extreme(v, true); }, v_lo, v_hi, n);
  for (double sr : {chart.lo[0], chart.hi[0]}) s.gap = std::max(s.gap, s.upper(2.0 * sr) - s.lower(2.0 * sr));
  return s;
}

EnvelopeResult chart_equilibrium(const WeightSpec& weight, const GridDomain& chart, const EnvelopeOptions& opt) {
  if (!weight.s1_invariant() && weight.bump_reach() > 0.5 * std::exp(chart.hi[0])) {
    throw std::invalid_argument("chart grid too small: bumps must lie inside half the outer radius");
  }
  const GridField phi = eval_weight(weight, chart);
  const RadialSandwich s = radial_sandwich(weight, chart);
  std::vector<double> ring(phi.values().begin(), phi.values().end());
  for (std::size_t i : {std::size_t{0}, chart.count[0] - 1}) {
    const double e = s.lower(2.0 * chart.coord(0, i));
    for (std::size_t j = 0; j < chart.count[1]; ++j) ring[chart.index(i, j)] = std::min(e, phi[chart.index(i, j)]);
  }
  EnvelopeResult r = sor_envelope(phi, GridField(chart, std::move(ring)), opt);
  r.sandwich_gap = s.gap;
  return r;
}

// ---------------------------------------------------------------------------
// Regularity

RegularityReport regularity_probe(std::span<const GridField> phi_e, std::span<const GridField> phi, double tol,
                                  double window, double ratio_bound) {
  if (phi_e.size() != phi.size() || phi_e.size() < 2) {
    throw std::invalid_argument("regularity_probe needs matching envelope and weight fields at >= 2 spacings");
  }
  RegularityReport rep;
  for (std::size_t l = 0; l < phi_e.size(); ++l) {
    const GridDomain& d = phi_e[l].domain();
    if (!(phi[l].domain() == d) || d.kind != GridDomain::Kind::VBox) {
      throw std::invalid_argument("regularity_probe: fields must share a v-grid per level");
    }
    std::array<std::size_t, 2> from{0, 0}, to{1, 1};
    for (int a = 0; a < d.dim; ++a) {
      const double c = 0.5 * (d.lo[a] + d.hi[a]);
      const double half = 0.5 * window * (d.hi[a] - d.lo[a]);
      const auto ua = static_cast<std::size_t>(a);
      from[ua] = d.count[a];
      to[ua] = 0;
      for (std::size_t i = 0; i < d.count[a]; ++i) {
        if (std::abs(d.coord(a, i) - c) <= half + 1e-12) {
          from[ua] = std::min(from[ua], i);
          to[ua] = i + 1;
        }
      }
      from[ua] = std::max<std::size_t>(from[ua], 1);
      to[ua] = std::min(to[ua], d.count[a] - 1);
    }
    RegularityLevel lev;
    lev.spacing = d.spacing(0);
    const auto m = max_second_differences(phi_e[l], from, to);
    const auto mp = max_second_differences(phi[l], from, to);
    lev.max_second_difference = std::max(m[0], m[1]);
    lev.phi_max_second_difference = std::max(mp[0], mp[1]);
    lev.lipschitz_first_difference = lev.max_second_difference;
    if (d.dim == 2) {
      const double h0 = d.spacing(0), h1 = d.spacing(1);
      for (std::size_t i = from[0]; i + 1 < to[0] + 1 && i + 1 < d.count[0]; ++i) {
        for (std::size_t j = from[1]; j + 1 < to[1] + 1 && j + 1 < d.count[1]; ++j) {
          const auto& u = phi_e[l];
          const double mixed =
              (u[d.index(i + 1, j + 1)] - u[d.index(i + 1, j)] - u[d.index(i, j + 1)] + u[d.index(i, j)]) / (h0 * h1);
          lev.lipschitz_first_difference = std::max(lev.lipschitz_first_difference, std::abs(mixed));
        }
      }
    }
    rep.levels.push_back(lev);
  }
  rep.pass = true;
  for (std::size_t l = 0; l < rep.levels.size(); ++l) {
    const auto& lev = rep.levels[l];
    if (lev.max_second_difference > lev.phi_max_second_difference + tol) rep.pass = false;
    if (l == 0) continue;
    const auto& prev = rep.levels[l - 1];
    for (auto [a, b] : {std::pair{lev.max_second_difference, prev.max_second_difference},
                        std::pair{lev.lipschitz_first_difference, prev.lipschitz_first_difference}}) {
      const double ratio = b > 0.0 ? a / b : (a > 0.0 ? kInf : 1.0);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  if (rep.max_ratio > ratio_bound) rep.pass = false;
  return rep;
}

}  // namespace plurikit
