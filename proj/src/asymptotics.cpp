#include "plurikit/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "plurikit/parallel.hpp"

namespace plurikit {

namespace {

double log_k_power(const BergmanModel& m) {
  return m.weight().dimension() * std::log(static_cast<double>(m.k()));
}

void require_toric(const BergmanModel& m, const char* op) {
  if (!m.toric()) throw std::invalid_argument(std::string(op) + ": toric models only");
}

// Interpolation cell along one axis: base index and fraction.
std::pair<std::size_t, double> cell(const GridDomain& d, int axis, double x) {
  const std::size_t n = d.count[axis];
  if (n < 2) return {0, 0.0};
  const double u = (x - d.lo[axis]) / d.spacing(axis);
  const double i = std::clamp(std::floor(u), 0.0, static_cast<double>(n - 2));
  return {static_cast<std::size_t>(i), u - i};
}

bool interior_node(const GridDomain& d, std::size_t flat) {
  const std::size_t i0 = flat / d.count[1], i1 = flat % d.count[1];
  if (i0 == 0 || i0 + 1 == d.count[0]) return false;
  if (d.dim == 2 && !d.periodic(1) && (i1 == 0 || i1 + 1 == d.count[1])) return false;
  return true;
}

}  // namespace

EnvelopeView::EnvelopeView(WeightSpec weight, EnvelopeResult env) : weight_(std::move(weight)), env_(std::move(env)) {
  if (!weight_.is_toric()) throw std::invalid_argument("EnvelopeView: toric weights only");
  if (env_.phi_e.domain().kind != GridDomain::Kind::VBox || env_.phi_e.domain().dim != weight_.dimension()) {
    throw std::invalid_argument("EnvelopeView: envelope grid does not match the weight");
  }
}

bool EnvelopeView::inside(const Vec2& v) const {
  const GridDomain& d = env_.phi_e.domain();
  for (int a = 0; a < d.dim; ++a) {
    if (v[a] < d.lo[a] || v[a] > d.hi[a]) return false;
  }
  return true;
}

double EnvelopeView::phi_e(const Vec2& v) const {
  if (!inside(v)) return weight_.value(v);
  const GridDomain& d = env_.phi_e.domain();
  const GridField& f = env_.phi_e;
  const auto [i, t] = cell(d, 0, v[0]);
  if (d.dim == 1) return (1.0 - t) * f[i] + t * f[i + 1];
  const auto [j, u] = cell(d, 1, v[1]);
  return (1.0 - t) * ((1.0 - u) * f[d.index(i, j)] + u * f[d.index(i, j + 1)]) +
         t * ((1.0 - u) * f[d.index(i + 1, j)] + u * f[d.index(i + 1, j + 1)]);
}

double EnvelopeView::gap(const Vec2& v) const { return std::max(weight_.value(v) - phi_e(v), 0.0); }

bool EnvelopeView::contact(const Vec2& v) const {
  const double phi = weight_.value(v);
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(phi));
  return phi - phi_e(v) <= env_.eps_D + slack;
}

double EnvelopeView::curvature_ratio(const Vec2& v) const {
  return weight_.hessian_det(v) / weight_.reference_hessian_det(v);
}

double EnvelopeView::target_density(const Vec2& v) const {
  if (!contact(v)) return 0.0;
  return std::max(curvature_ratio(v), 0.0);
}

double EnvelopeView::sup_gap() const {
  const GridDomain& d = env_.phi_e.domain();
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s = std::max(s, weight_.value(d.point(i)) - env_.phi_e[i]);
  return s;
}

std::vector<std::size_t> window_nodes(const GridDomain& d, double window) {
  auto keep = [&](int axis, std::size_t i) {
    if (d.periodic(axis) || axis >= d.dim) return true;
    const double mid = 0.5 * (d.lo[axis] + d.hi[axis]);
    const double half = 0.5 * window * (d.hi[axis] - d.lo[axis]);
    return std::abs(d.coord(axis, i) - mid) <= half + 1e-12 * (d.hi[axis] - d.lo[axis]);
  };
  std::vector<std::size_t> out;
  for (std::size_t i0 = 0; i0 < d.count[0]; ++i0) {
    if (!keep(0, i0)) continue;
    for (std::size_t i1 = 0; i1 < d.count[1]; ++i1) {
      if (d.dim == 2 && !keep(1, i1)) continue;
      out.push_back(d.index(i0, i1));
    }
  }
  return out;
}

std::vector<ConvergenceRow> convergence_table(std::span<const BergmanModel> models, const EnvelopeView& view,
                                              const GridDomain& eval) {
  std::vector<ConvergenceRow> rows;
  for (const auto& m : models) {
    require_toric(m, "convergence_table");
    const double lk = log_k_power(m);
    const auto& q = m.quadrature();

    std::vector<double> err(q.points.size()), mass(q.points.size());
    parallel_for(q.points.size(), [&](std::size_t i) {
      const double t = view.target_density(q.points[i]);
      const double w = std::exp(q.log_weight[i]);
      err[i] = w * std::abs(std::exp(m.log_bergman(q.points[i]) - lk) - t);
      mass[i] = w * t;
    });

    std::vector<double> ratio(eval.size(), 0.0);
    parallel_for(eval.size(), [&](std::size_t i) {
      if (!interior_node(eval, i)) return;
      const Vec2 x = eval.point(i);
      const double t = view.target_density(x);
      if (t > 0.0) ratio[i] = std::exp(m.log_bergman(x) - lk) / t;
    });

    ConvergenceRow row;
    row.k = m.k();
    for (std::size_t i = 0; i < err.size(); ++i) {
      row.l1_error += err[i];
      row.target_mass += mass[i];
    }
    for (double r : ratio) row.sup_ratio = std::max(row.sup_ratio, r);
    row.normalized_dim = static_cast<double>(m.dimension()) * std::exp(-lk);
    rows.push_back(row);
  }
  return rows;
}

DecayProfile decay_profile(const BergmanModel& model, const EnvelopeView& view, const GridDomain& eval,
                           double window) {
  require_toric(model, "decay_profile");
  const double k = static_cast<double>(model.k());
  const double lk = log_k_power(model);
  std::vector<double> log_b(eval.size()), profile(eval.size()), gap(eval.size());
  parallel_for(eval.size(), [&](std::size_t i) {
    const Vec2 x = eval.point(i);
    log_b[i] = model.log_bergman(x);
    profile[i] = -(log_b[i] - lk) / k;
    gap[i] = view.gap(x);
  });

  DecayProfile out;
  double lower = 0.0, upper = 0.0;
  for (std::size_t i : window_nodes(eval, window)) {
    if (log_b[i] < -708.0) {
      ++out.excluded;
      continue;
    }
    ++out.window_nodes;
    const double bracket = k * (profile[i] - gap[i]);
    lower = std::max(lower, -bracket);
    upper = std::max(upper, bracket - lk);
  }
  out.fitted_C = std::max(lower, upper);
  out.profile = GridField(eval, std::move(profile));
  out.gap = GridField(eval, std::move(gap));
  return out;
}

GridField bergman_metric_field(const BergmanModel& model, const GridDomain& eval) {
  const double k = static_cast<double>(model.k());
  std::vector<double> out(eval.size());
  parallel_for(eval.size(), [&](std::size_t i) {
    const Vec2 x = eval.point(i);
    out[i] = model.weight().value(x) + model.log_bergman(x) / k;
  });
  return {eval, std::move(out)};
}

double metric_distance(const GridField& field, const EnvelopeView& view, double window) {
  const GridDomain& d = field.domain();
  double s = 0.0;
  for (std::size_t i : window_nodes(d, window)) s = std::max(s, std::abs(field[i] - view.phi_e(d.point(i))));
  return s;
}

VolumeFormDistance bergman_volume_distance(const GridField& field, const EnvelopeView& view) {
  const GridDomain& d = field.domain();
  if (d.kind != GridDomain::Kind::VBox || d.dim != 1 || d.count[0] < 3) {
    throw std::invalid_argument("bergman_volume_distance: needs a 1-D v-grid");
  }
  const std::size_t n = d.count[0];
  const double h = d.spacing(0);
  VolumeFormDistance out;
  std::vector<double> fk(n - 1), fi(n - 1);
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double s = (field[i + 1] - field[i]) / h;
    if (s < running) ++out.repaired;
    running = std::max(running, s);
    fk[i] = running;
    fi[i] = (view.phi_e({d.coord(0, i + 1), 0.0}) - view.phi_e({d.coord(0, i), 0.0})) / h;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) out.sup_cdf = std::max(out.sup_cdf, std::abs(fk[i] - fi[i]));
  out.mass_k = fk.back() - fk.front();
  out.mass_limit = fi.back() - fi.front();
  return out;
}

TzcReport tzc_fit(std::span<const BergmanModel> models, const EnvelopeView& view, std::span<const Vec2> window,
                  double margin, double clearance) {
  if (models.size() < 2) throw std::invalid_argument("tzc_fit: needs at least two levels");
  for (std::size_t p = 0; p < models.size(); ++p) {
    require_toric(models[p], "tzc_fit");
    if (p > 0 && models[p].k() != 2 * models[p - 1].k()) {
      throw std::invalid_argument("tzc_fit: levels must be dyadic (k, 2k, 4k, ...)");
    }
  }
  if (window.empty()) throw std::invalid_argument("tzc_fit: empty window");

  const WeightSpec& w = view.weight();
  const int n = w.dimension();
  for (const Vec2& x : window) {
    const auto h = w.hessian(x);
    const double eigmin = n == 1 ? h(0, 0) : Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(h).eigenvalues()(0);
    bool ok = eigmin > margin;
    for (int a = 0; a < n && ok; ++a) {
      for (int j = -10; j <= 10 && ok; ++j) {
        Vec2 y = x;
        y[a] += clearance * j / 10.0;
        ok = view.contact(y);
      }
    }
    if (!ok) throw std::domain_error("tzc_fit: window touches the boundary of the contact set");
  }

  TzcReport rep;
  rep.window.assign(window.begin(), window.end());
  std::vector<std::vector<double>> e(models.size(), std::vector<double>(window.size()));
  for (std::size_t p = 0; p < models.size(); ++p) {
    const auto& m = models[p];
    rep.ks.push_back(m.k());
    const double k = static_cast<double>(m.k());
    const double lk = log_k_power(m);
    parallel_for(window.size(), [&](std::size_t i) {
      e[p][i] = k * std::expm1(m.log_bergman(window[i]) - lk - std::log(view.curvature_ratio(window[i])));
    });
  }
  for (std::size_t p = 0; p + 1 < models.size(); ++p) {
    std::vector<double> b(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) b[i] = 2.0 * e[p + 1][i] - e[p][i];
    rep.b_hat.push_back(std::move(b));
  }
  const auto& last = rep.b_hat.back();
  double scale = 0.0;
  for (double b : last) {
    rep.b1 += b;
    scale = std::max(scale, std::abs(b));
  }
  rep.b1 /= static_cast<double>(last.size());
  double diff = 0.0;
  for (std::size_t p = 0; p + 1 < rep.b_hat.size(); ++p) {
    for (std::size_t i = 0; i < window.size(); ++i) {
      diff = std::max(diff, std::abs(rep.b_hat[p + 1][i] - rep.b_hat[p][i]));
    }
  }
  rep.spread = scale > 0.0 ? diff / scale : diff;
  return rep;
}

double TestFunction::operator()(double s_at, double theta_at) const {
  const double ds = (s_at - s) / s_radius;
  double q = ds * ds;
  if (theta_radius > 0.0) {
    const double dt = std::remainder(theta_at - theta, 2.0 * std::numbers::pi) / theta_radius;
    q += dt * dt;
  }
  if (q >= 1.0) return 0.0;
  const double u = 1.0 - q;
  return u * u * u;
}

OffdiagResult offdiag_concentration(const BergmanModel& model, const TestFunction& f, const TestFunction& g,
                                    const GridDomain& chart, const EquilibriumMeasure& mu) {
  if (model.toric() || chart.kind != GridDomain::Kind::Chart) {
    throw std::invalid_argument("offdiag_concentration: chart models and grids only");
  }
  if (!(mu.density.domain() == chart)) throw std::invalid_argument("offdiag_concentration: measure grid differs");

  const auto tw = trapezoid_weights(chart);
  const GridField ref = reference_density(WeightSpec::fs_chart(), chart);
  std::vector<double> fv(chart.size()), gv(chart.size()), dm(chart.size());
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < chart.size(); ++i) {
    const double s = chart.coord(0, i / chart.count[1]);
    const double t = chart.coord(1, i % chart.count[1]);
    fv[i] = f(s, t);
    gv[i] = g(s, t);
    dm[i] = tw[i] * ref[i];
    if (fv[i] > 0.0 || gv[i] > 0.0) support.push_back(i);
  }

  const auto r = static_cast<Eigen::Index>(model.retained());
  Eigen::MatrixXcd pf = Eigen::MatrixXcd::Zero(r, static_cast<Eigen::Index>(support.size()));
  Eigen::MatrixXcd pg = pf;
  parallel_for(support.size(), [&](std::size_t c) {
    const std::size_t i = support[c];
    const Eigen::VectorXcd psi = model.weighted_orthonormal(chart.point(i));
    pf.col(static_cast<Eigen::Index>(c)) = std::sqrt(dm[i] * fv[i]) * psi;
    pg.col(static_cast<Eigen::Index>(c)) = std::sqrt(dm[i] * gv[i]) * psi;
  });
  const Eigen::MatrixXcd af = pf * pf.adjoint();
  const Eigen::MatrixXcd ag = pg * pg.adjoint();

  OffdiagResult out;
  out.value = af.cwiseProduct(ag.transpose()).sum().real() / static_cast<double>(model.k());
  for (std::size_t i : support) out.oracle += dm[i] * fv[i] * gv[i] * mu.density[i];
  return out;
}

TchebishevReport tchebishev_estimate(std::span<const BergmanModel> models, const EnvelopeView& view,
                                     const GridDomain& eval) {
  TchebishevReport rep;
  rep.convention = "exp(-sup(phi - phi_e))";
  std::vector<double> log_est;
  for (const auto& m : models) {
    require_toric(m, "tchebishev_estimate");
    const GridField lb = log_bergman_function(m, eval);
    const double y = lb.min() / static_cast<double>(m.k());
    log_est.push_back(y);
    rep.rows.push_back({m.k(), std::exp(y)});
  }
  double sup = 0.0;
  for (std::size_t i = 0; i < eval.size(); ++i) sup = std::max(sup, view.gap(eval.point(i)));
  rep.reference = std::exp(-sup);
  if (!rep.rows.empty()) rep.relative_gap = std::abs(rep.rows.back().estimate - rep.reference) / rep.reference;

  if (models.size() >= 3) {
    const auto n = static_cast<Eigen::Index>(models.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double k = static_cast<double>(rep.rows[static_cast<std::size_t>(i)].k);
      a(i, 0) = 1.0;
      a(i, 1) = std::log(k) / k;
      a(i, 2) = 1.0 / k;
      b(i) = log_est[static_cast<std::size_t>(i)];
    }
    rep.extrapolated = std::exp(a.colPivHouseholderQr().solve(b)(0));
  } else if (!rep.rows.empty()) {
    rep.extrapolated = rep.rows.back().estimate;
  }
  return rep;
}

}  // namespace plurikit
