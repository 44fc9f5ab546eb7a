#include "plurikit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/LU>

namespace plurikit {

namespace {

long cross(const Lattice2& o, const Lattice2& a, const Lattice2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// The leading term contributes exactly 1, so log1p keeps the tails accurate.
double log_sum_exp(std::span<const double> xs) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] > xs[arg]) arg = i;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i != arg) s += std::exp(xs[i] - xs[arg]);
  }
  return xs[arg] + std::log1p(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// LatticePolytope

LatticePolytope LatticePolytope::segment(long lo, long hi) {
  if (!(lo < hi)) throw std::invalid_argument("not full-dimensional: segment needs lo < hi");
  LatticePolytope p;
  p.dim_ = 1;
  p.hull_ = {{lo, 0}, {hi, 0}};
  return p;
}

LatticePolytope LatticePolytope::polygon(std::vector<Lattice2> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) throw std::invalid_argument("not full-dimensional: fewer than 3 distinct vertices");

  // Monotone chain, collinear points dropped.
  std::vector<Lattice2> hull(2 * points.size());
  std::size_t m = 0;
  for (const auto& p : points) {
    while (m >= 2 && cross(hull[m - 2], hull[m - 1], p) <= 0) --m;
    hull[m++] = p;
  }
  for (std::size_t i = points.size() - 1, t = m + 1; i-- > 0;) {
    while (m >= t && cross(hull[m - 2], hull[m - 1], points[i]) <= 0) --m;
    hull[m++] = points[i];
  }
  hull.resize(m - 1);
  if (hull.size() < 3) throw std::invalid_argument("not full-dimensional: vertices are collinear");

  LatticePolytope p;
  p.dim_ = 2;
  p.hull_ = std::move(hull);
  return p;
}

bool LatticePolytope::contains(const Vec2& p, double tol) const {
  if (dim_ == 1) {
    return p[0] >= static_cast<double>(hull_[0][0]) - tol && p[0] <= static_cast<double>(hull_[1][0]) + tol;
  }
  return signed_boundary_distance(p) >= -tol;
}

bool LatticePolytope::contains_scaled(const Lattice2& q, long k) const {
  if (dim_ == 1) return q[0] >= k * hull_[0][0] && q[0] <= k * hull_[1][0];
  const std::size_t n = hull_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Lattice2 a{k * hull_[i][0], k * hull_[i][1]};
    const Lattice2 b{k * hull_[(i + 1) % n][0], k * hull_[(i + 1) % n][1]};
    if (cross(a, b, q) < 0) return false;
  }
  return true;
}

Vec2 LatticePolytope::lower() const {
  Vec2 lo{static_cast<double>(hull_[0][0]), static_cast<double>(hull_[0][1])};
  for (const auto& v : hull_) {
    lo[0] = std::min(lo[0], static_cast<double>(v[0]));
    lo[1] = std::min(lo[1], static_cast<double>(v[1]));
  }
  return lo;
}

Vec2 LatticePolytope::upper() const {
  Vec2 hi{static_cast<double>(hull_[0][0]), static_cast<double>(hull_[0][1])};
  for (const auto& v : hull_) {
    hi[0] = std::max(hi[0], static_cast<double>(v[0]));
    hi[1] = std::max(hi[1], static_cast<double>(v[1]));
  }
  return hi;
}

double LatticePolytope::diameter() const {
  double d = 0.0;
  for (const auto& a : hull_) {
    for (const auto& b : hull_) {
      d = std::max(d, std::hypot(static_cast<double>(a[0] - b[0]), static_cast<double>(a[1] - b[1])));
    }
  }
  return d;
}

double LatticePolytope::signed_boundary_distance(const Vec2& p) const {
  if (dim_ == 1) {
    return std::min(p[0] - static_cast<double>(hull_[0][0]), static_cast<double>(hull_[1][0]) - p[0]);
  }
  double d = std::numeric_limits<double>::infinity();
  const std::size_t n = hull_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = static_cast<double>(hull_[i][0]), ay = static_cast<double>(hull_[i][1]);
    const double ex = static_cast<double>(hull_[(i + 1) % n][0]) - ax;
    const double ey = static_cast<double>(hull_[(i + 1) % n][1]) - ay;
    const double c = ex * (p[1] - ay) - ey * (p[0] - ax);
    d = std::min(d, c / std::hypot(ex, ey));
  }
  return d;
}

std::vector<Lattice2> lattice_points(const LatticePolytope& polytope, long k) {
  if (k < 1) throw std::invalid_argument("lattice_points: k must be >= 1");
  std::vector<Lattice2> out;
  const Vec2 lo = polytope.lower();
  const Vec2 hi = polytope.upper();
  const long x0 = k * static_cast<long>(lo[0]), x1 = k * static_cast<long>(hi[0]);
  if (polytope.dimension() == 1) {
    for (long x = x0; x <= x1; ++x) out.push_back({x, 0});
    return out;
  }
  const long y0 = k * static_cast<long>(lo[1]), y1 = k * static_cast<long>(hi[1]);
  for (long x = x0; x <= x1; ++x) {
    for (long y = y0; y <= y1; ++y) {
      if (polytope.contains_scaled({x, y}, k)) out.push_back({x, y});
    }
  }
  return out;
}

double lattice_volume(const LatticePolytope& polytope) {
  const auto& v = polytope.vertices();
  if (polytope.dimension() == 1) return static_cast<double>(v[1][0] - v[0][0]);
  long twice = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    twice += a[0] * b[1] - a[1] * b[0];
  }
  return 0.5 * static_cast<double>(std::labs(twice));
}

// ---------------------------------------------------------------------------
// Bump

double Bump::value(const Vec2& x, int dim) const {
  const double d0 = x[0] - center[0];
  const double d1 = dim == 2 ? x[1] - center[1] : 0.0;
  const double q = (d0 * d0 + d1 * d1) / (radius * radius);
  if (q >= 1.0) return 0.0;
  return amplitude * std::pow(1.0 - q, smoothness);
}

Vec2 Bump::gradient(const Vec2& x, int dim) const {
  const double d0 = x[0] - center[0];
  const double d1 = dim == 2 ? x[1] - center[1] : 0.0;
  const double r2 = radius * radius;
  const double q = (d0 * d0 + d1 * d1) / r2;
  if (q >= 1.0) return {0.0, 0.0};
  const double c = -2.0 * amplitude * smoothness * std::pow(1.0 - q, smoothness - 1) / r2;
  return {c * d0, c * d1};
}

Eigen::Matrix2d Bump::hessian(const Vec2& x, int dim) const {
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  const double d0 = x[0] - center[0];
  const double d1 = dim == 2 ? x[1] - center[1] : 0.0;
  const double r2 = radius * radius;
  const double q = (d0 * d0 + d1 * d1) / r2;
  if (q >= 1.0) return h;
  const double s = smoothness;
  const double outer = 4.0 * amplitude * s * (s - 1.0) * std::pow(1.0 - q, s - 2.0) / (r2 * r2);
  const double diag = -2.0 * amplitude * s * std::pow(1.0 - q, s - 1.0) / r2;
  const Eigen::Vector2d d(d0, d1);
  h = outer * d * d.transpose();
  h(0, 0) += diag;
  if (dim == 2) h(1, 1) += diag;
  return h;
}

// ---------------------------------------------------------------------------
// WeightSpec

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::ToricPotential: return "toric_potential";
    case WeightKind::PerturbedToric: return "perturbed_toric";
    case WeightKind::FSChart: return "fs_chart";
    case WeightKind::PerturbedChart: return "perturbed_chart";
  }
  return "unknown";
}

WeightSpec WeightSpec::toric(LatticePolytope polytope) {
  WeightSpec w;
  w.kind_ = WeightKind::ToricPotential;
  w.toric_points_ = lattice_points(polytope, 1);
  w.polytope_.push_back(std::move(polytope));
  return w;
}

WeightSpec WeightSpec::perturbed_toric(LatticePolytope polytope, std::vector<Bump> bumps) {
  WeightSpec w = toric(std::move(polytope));
  w.kind_ = WeightKind::PerturbedToric;
  for (const auto& b : bumps) {
    if (b.smoothness < 3) throw std::invalid_argument("bump smoothness exponent must be >= 3");
    if (!(b.radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
  }
  w.bumps_ = std::move(bumps);
  return w;
}

WeightSpec WeightSpec::fs_chart() {
  WeightSpec w;
  w.kind_ = WeightKind::FSChart;
  return w;
}

WeightSpec WeightSpec::perturbed_chart(std::vector<Bump> bumps) {
  WeightSpec w;
  w.kind_ = WeightKind::PerturbedChart;
  for (const auto& b : bumps) {
    if (b.smoothness < 3) throw std::invalid_argument("bump smoothness exponent must be >= 3");
    if (!(b.radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
  }
  w.bumps_ = std::move(bumps);
  return w;
}

int WeightSpec::dimension() const noexcept { return is_toric() ? polytope_.front().dimension() : 2; }

const LatticePolytope& WeightSpec::polytope() const {
  if (!is_toric()) throw std::invalid_argument("chart weights carry no polytope");
  return polytope_.front();
}

double WeightSpec::bump_sum(const Vec2& x) const {
  double s = 0.0;
  const int d = dimension();
  for (const auto& b : bumps_) s += b.value(x, d);
  return s;
}

double WeightSpec::reference_value(const Vec2& x) const {
  if (is_toric()) {
    const int n = dimension();
    std::vector<double> e(toric_points_.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      e[i] = static_cast<double>(toric_points_[i][0]) * x[0] +
             (n == 2 ? static_cast<double>(toric_points_[i][1]) * x[1] : 0.0);
    }
    return log_sum_exp(e);
  }
  return std::log1p(x[0] * x[0] + x[1] * x[1]);
}

double WeightSpec::value(const Vec2& x) const { return reference_value(x) + bump_sum(x); }

std::vector<double> WeightSpec::softmax(const Vec2& v) const {
  const int n = dimension();
  std::vector<double> e(toric_points_.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = static_cast<double>(toric_points_[i][0]) * v[0] +
           (n == 2 ? static_cast<double>(toric_points_[i][1]) * v[1] : 0.0);
  }
  const double lse = log_sum_exp(e);
  for (double& x : e) x = std::exp(x - lse);
  return e;
}

Eigen::Matrix2d WeightSpec::reference_hessian(const Vec2& v) const {
  if (!is_toric()) throw std::invalid_argument("reference_hessian is defined for toric weights");
  // Covariance of alpha under the softmax weights, written pairwise:
  // sum_{i<j} w_i w_j (a_i - a_j)(a_i - a_j)^T. No cancellation.
  const auto w = softmax(v);
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      const Eigen::Vector2d d(static_cast<double>(toric_points_[i][0] - toric_points_[j][0]),
                              static_cast<double>(toric_points_[i][1] - toric_points_[j][1]));
      h += w[i] * w[j] * d * d.transpose();
    }
  }
  return h;
}

double WeightSpec::reference_hessian_det(const Vec2& v) const {
  if (!is_toric()) throw std::invalid_argument("reference_hessian_det is defined for toric weights");
  const auto w = softmax(v);
  if (dimension() == 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = i + 1; j < w.size(); ++j) {
        const double d = static_cast<double>(toric_points_[i][0] - toric_points_[j][0]);
        s += w[i] * w[j] * d * d;
      }
    }
    return s;
  }
  // Cauchy-Binet over the pairwise rank-one terms.
  struct Pair {
    double c;
    long dx, dy;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      pairs.push_back({w[i] * w[j], toric_points_[i][0] - toric_points_[j][0],
                       toric_points_[i][1] - toric_points_[j][1]});
    }
  }
  double s = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (std::size_t q = p + 1; q < pairs.size(); ++q) {
      const double c = static_cast<double>(pairs[p].dx * pairs[q].dy - pairs[p].dy * pairs[q].dx);
      s += pairs[p].c * pairs[q].c * c * c;
    }
  }
  return s;
}

bool WeightSpec::bump_active(const Vec2& x) const {
  const int d = dimension();
  for (const auto& b : bumps_) {
    const double d0 = x[0] - b.center[0];
    const double d1 = d == 2 ? x[1] - b.center[1] : 0.0;
    if (d0 * d0 + d1 * d1 < b.radius * b.radius) return true;
  }
  return false;
}

double WeightSpec::hessian_det(const Vec2& v) const {
  if (!bump_active(v)) return reference_hessian_det(v);
  const Eigen::Matrix2d h = hessian(v);
  return dimension() == 1 ? h(0, 0) : h.determinant();
}

Vec2 WeightSpec::gradient(const Vec2& v) const {
  if (!is_toric()) throw std::invalid_argument("gradient is defined for toric weights");
  const int n = dimension();
  const double lse = reference_value(v);
  Vec2 g{0.0, 0.0};
  for (const auto& a : toric_points_) {
    const double w = std::exp(static_cast<double>(a[0]) * v[0] +
                              (n == 2 ? static_cast<double>(a[1]) * v[1] : 0.0) - lse);
    g[0] += w * static_cast<double>(a[0]);
    if (n == 2) g[1] += w * static_cast<double>(a[1]);
  }
  for (const auto& b : bumps_) {
    const Vec2 bg = b.gradient(v, n);
    g[0] += bg[0];
    g[1] += bg[1];
  }
  return g;
}

Eigen::Matrix2d WeightSpec::hessian(const Vec2& v) const {
  Eigen::Matrix2d h = reference_hessian(v);
  for (const auto& b : bumps_) h += b.hessian(v, dimension());
  return h;
}

double WeightSpec::reference_laplacian(const Vec2& zeta) const {
  if (is_toric()) throw std::invalid_argument("laplacian is defined for chart weights");
  const double q = 1.0 + zeta[0] * zeta[0] + zeta[1] * zeta[1];
  return 4.0 / (q * q);
}

double WeightSpec::laplacian(const Vec2& zeta) const {
  double l = reference_laplacian(zeta);
  for (const auto& b : bumps_) l += b.hessian(zeta, 2).trace();
  return l;
}

double WeightSpec::growth_constant() const {
  double c = 0.0;
  for (const auto& b : bumps_) c += std::abs(b.amplitude);
  return c;
}

bool WeightSpec::s1_invariant() const {
  if (is_toric()) return false;
  return std::all_of(bumps_.begin(), bumps_.end(),
                     [](const Bump& b) { return b.center[0] == 0.0 && b.center[1] == 0.0; });
}

double WeightSpec::bump_reach() const {
  double r = 0.0;
  for (const auto& b : bumps_) {
    const double c = dimension() == 1 ? std::abs(b.center[0]) : std::hypot(b.center[0], b.center[1]);
    r = std::max(r, c + b.radius);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Grids

GridDomain GridDomain::vbox1(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo < hi)) throw std::invalid_argument("vbox1 needs lo < hi and n >= 2");
  GridDomain d;
  d.kind = Kind::VBox;
  d.dim = 1;
  d.lo = {lo, 0.0};
  d.hi = {hi, 0.0};
  d.count = {n, 1};
  return d;
}

GridDomain GridDomain::vbox2(Vec2 lo, Vec2 hi, std::array<std::size_t, 2> n) {
  if (n[0] < 2 || n[1] < 2 || !(lo[0] < hi[0]) || !(lo[1] < hi[1])) {
    throw std::invalid_argument("vbox2 needs lo < hi and n >= 2 per axis");
  }
  GridDomain d;
  d.kind = Kind::VBox;
  d.dim = 2;
  d.lo = lo;
  d.hi = hi;
  d.count = n;
  return d;
}

GridDomain GridDomain::chart(double s_min, double s_max, std::size_t n_s, std::size_t n_theta) {
  if (n_s < 3 || n_theta < 4 || !(s_min < s_max)) {
    throw std::invalid_argument("chart grid needs s_min < s_max, n_s >= 3, n_theta >= 4");
  }
  GridDomain d;
  d.kind = Kind::Chart;
  d.dim = 2;
  d.lo = {s_min, 0.0};
  d.hi = {s_max, 2.0 * std::numbers::pi};
  d.count = {n_s, n_theta};
  return d;
}

double GridDomain::spacing(int axis) const {
  if (periodic(axis)) return (hi[1] - lo[1]) / static_cast<double>(count[1]);
  if (axis >= dim) return 0.0;
  return (hi[axis] - lo[axis]) / static_cast<double>(count[axis] - 1);
}

double GridDomain::coord(int axis, std::size_t i) const {
  if (i + 1 == count[axis] && !periodic(axis)) return hi[axis];
  return lo[axis] + static_cast<double>(i) * spacing(axis);
}

Vec2 GridDomain::point(std::size_t flat) const {
  const std::size_t i0 = flat / count[1];
  const std::size_t i1 = flat % count[1];
  if (kind == Kind::Chart) {
    const double r = std::exp(coord(0, i0));
    const double t = coord(1, i1);
    return {r * std::cos(t), r * std::sin(t)};
  }
  return {coord(0, i0), dim == 2 ? coord(1, i1) : 0.0};
}

GridField::GridField(GridDomain domain, std::vector<double> values)
    : domain_(domain), values_(std::move(values)) {
  if (values_.size() != domain_.size()) throw std::invalid_argument("GridField: value count does not match domain");
  for (double x : values_) {
    if (!std::isfinite(x)) throw std::invalid_argument("GridField: non-finite value");
  }
}

double GridField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double GridField::max_abs() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

GridField GridField::operator+(const GridField& other) const {
  if (!(domain_ == other.domain_)) throw std::invalid_argument("GridField: domains differ");
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] + other.values_[i];
  return {domain_, std::move(out)};
}

GridField GridField::operator-(const GridField& other) const {
  if (!(domain_ == other.domain_)) throw std::invalid_argument("GridField: domains differ");
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] - other.values_[i];
  return {domain_, std::move(out)};
}

GridField GridField::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& x : out) x *= factor;
  return {domain_, std::move(out)};
}

std::size_t MaskField::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

GridField eval_weight(const WeightSpec& weight, const GridDomain& domain) {
  if (weight.is_toric()) {
    if (domain.kind != GridDomain::Kind::VBox || domain.dim != weight.dimension()) {
      throw std::invalid_argument("eval_weight: toric weight needs a v-box of matching dimension");
    }
  } else if (domain.kind != GridDomain::Kind::Chart) {
    throw std::invalid_argument("eval_weight: chart weight needs a chart grid");
  }
  std::vector<double> vals(domain.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = weight.value(domain.point(i));
  return {domain, std::move(vals)};
}

namespace {

// Second difference along one axis; clamps the stencil center inward so the
// first and last node reuse the adjacent interior stencil.
double second_diff(std::span<const double> u, const GridDomain& d, int axis, std::size_t i0, std::size_t i1) {
  const std::size_t n = d.count[axis];
  const double h = d.spacing(axis);
  std::size_t c = axis == 0 ? i0 : i1;
  if (d.periodic(axis)) {
    const std::size_t m = (c + n - 1) % n, p = (c + 1) % n;
    return (u[d.index(i0, m)] - 2.0 * u[d.index(i0, c)] + u[d.index(i0, p)]) / (h * h);
  }
  c = std::clamp<std::size_t>(c, 1, n - 2);
  auto at = [&](std::size_t j) { return axis == 0 ? u[d.index(j, i1)] : u[d.index(i0, j)]; };
  return (at(c - 1) - 2.0 * at(c) + at(c + 1)) / (h * h);
}

}  // namespace

HessianField hessian_field(const GridField& u) {
  const GridDomain& d = u.domain();
  if (d.kind != GridDomain::Kind::VBox) throw std::invalid_argument("hessian_field expects a v-grid");
  for (int a = 0; a < d.dim; ++a) {
    if (d.count[a] < 3) throw std::invalid_argument("hessian_field needs >= 3 nodes per axis");
  }
  const auto vals = u.values();
  std::vector<double> det(d.size()), emin(d.size());
  std::vector<std::uint8_t> trusted(d.size(), 1);
  if (d.dim == 1) {
    const std::size_t n = d.count[0];
    for (std::size_t i = 0; i < n; ++i) {
      det[i] = emin[i] = second_diff(vals, d, 0, i, 0);
      if (i == 0 || i + 1 == n) trusted[i] = 0;
    }
    return {GridField(d, std::move(det)), GridField(d, std::move(emin)), std::move(trusted)};
  }
  const std::size_t n0 = d.count[0], n1 = d.count[1];
  const double h0 = d.spacing(0), h1 = d.spacing(1);
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double a = second_diff(vals, d, 0, i, j);
      const double c = second_diff(vals, d, 1, i, j);
      const std::size_t ic = std::clamp<std::size_t>(i, 1, n0 - 2);
      const std::size_t jc = std::clamp<std::size_t>(j, 1, n1 - 2);
      const double b = (vals[d.index(ic + 1, jc + 1)] - vals[d.index(ic + 1, jc - 1)] -
                        vals[d.index(ic - 1, jc + 1)] + vals[d.index(ic - 1, jc - 1)]) /
                       (4.0 * h0 * h1);
      const std::size_t k = d.index(i, j);
      det[k] = a * c - b * b;
      const double half = 0.5 * (a - c);
      emin[k] = 0.5 * (a + c) - std::sqrt(half * half + b * b);
      if (i == 0 || j == 0 || i + 1 == n0 || j + 1 == n1) trusted[k] = 0;
    }
  }
  return {GridField(d, std::move(det)), GridField(d, std::move(emin)), std::move(trusted)};
}

LaplacianField laplacian_field(const GridField& u) {
  const GridDomain& d = u.domain();
  if (d.kind != GridDomain::Kind::Chart) throw std::invalid_argument("laplacian_field expects a chart grid");
  const auto vals = u.values();
  std::vector<double> lap(d.size());
  std::vector<std::uint8_t> trusted(d.size(), 1);
  for (std::size_t i = 0; i < d.count[0]; ++i) {
    for (std::size_t j = 0; j < d.count[1]; ++j) {
      const std::size_t k = d.index(i, j);
      lap[k] = second_diff(vals, d, 0, i, j) + second_diff(vals, d, 1, i, j);
      if (i == 0 || i + 1 == d.count[0]) trusted[k] = 0;
    }
  }
  return {GridField(d, std::move(lap)), std::move(trusted)};
}

std::vector<double> trapezoid_weights(const GridDomain& d) {
  auto axis_weights = [&](int axis) {
    std::vector<double> w(d.count[axis], d.spacing(axis));
    if (!d.periodic(axis) && d.count[axis] > 1) {
      w.front() *= 0.5;
      w.back() *= 0.5;
    }
    return w;
  };
  const auto w0 = axis_weights(0);
  const std::vector<double> w1 = (d.dim == 2) ? axis_weights(1) : std::vector<double>{1.0};
  std::vector<double> w(d.size());
  for (std::size_t i = 0; i < d.count[0]; ++i) {
    for (std::size_t j = 0; j < d.count[1]; ++j) w[d.index(i, j)] = w0[i] * w1[j];
  }
  return w;
}

}  // namespace plurikit
