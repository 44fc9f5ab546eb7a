#include "plurikit/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "plurikit/errors.hpp"
#include "plurikit/parallel.hpp"
#include "plurikit/quadrature.hpp"

namespace plurikit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double dot(const Lattice2& a, const Vec2& v, int n) {
  return static_cast<double>(a[0]) * v[0] + (n == 2 ? static_cast<double>(a[1]) * v[1] : 0.0);
}

// log of sum_i exp(x_i), two passes.
template <class F>
double lse(std::size_t n, F&& term) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, term(i));
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = term(i) - m;
    if (t > -60.0) s += std::exp(t);
  }
  return m + std::log(s);
}

struct ToricPass {
  std::vector<double> log_gram;
  QuadratureNodes nodes;
};

ToricPass toric_pass(const HilbertSpaceSpec& spec, const std::vector<Lattice2>& basis, double half_width,
                     double width) {
  const WeightSpec& w = spec.weight;
  const int n = w.dimension();
  const double k = static_cast<double>(spec.k);

  std::vector<QuadratureRule> rules;
  for (int axis = 0; axis < n; ++axis) {
    std::vector<double> cuts;
    for (const auto& b : w.bumps()) {
      cuts.push_back(b.center[axis] - b.radius);
      cuts.push_back(b.center[axis] + b.radius);
    }
    const auto br = breakpoints(-half_width, half_width, cuts);
    rules.push_back(composite_gauss_legendre(br, width, spec.quad.gl_order));
  }

  ToricPass pass;
  auto& pts = pass.nodes.points;
  auto& lw = pass.nodes.log_weight;
  if (n == 1) {
    for (std::size_t i = 0; i < rules[0].nodes.size(); ++i) {
      pts.push_back({rules[0].nodes[i], 0.0});
      lw.push_back(std::log(rules[0].weights[i]));
    }
  } else {
    for (std::size_t i = 0; i < rules[0].nodes.size(); ++i) {
      for (std::size_t j = 0; j < rules[1].nodes.size(); ++j) {
        pts.push_back({rules[0].nodes[i], rules[1].nodes[j]});
        lw.push_back(std::log(rules[0].weights[i] * rules[1].weights[j]));
      }
    }
  }
  std::vector<double> base(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    lw[i] += std::log(w.reference_hessian_det(pts[i]));
    base[i] = lw[i] - k * w.value(pts[i]);
  });

  pass.log_gram.resize(basis.size());
  parallel_for(basis.size(), [&](std::size_t a) {
    pass.log_gram[a] = lse(pts.size(), [&](std::size_t i) { return dot(basis[a], pts[i], n) + base[i]; });
  });
  return pass;
}

struct ChartPass {
  Eigen::MatrixXcd gram;
  QuadratureNodes nodes;
};

ChartPass chart_pass(const HilbertSpaceSpec& spec, const std::vector<Lattice2>& basis, double width, int n_theta) {
  const WeightSpec& w = spec.weight;
  const double k = static_cast<double>(spec.k);
  std::vector<double> cuts;
  for (const auto& b : w.bumps()) {
    const double c = std::hypot(b.center[0], b.center[1]);
    for (double r : {std::max(0.0, c - b.radius), c + b.radius}) cuts.push_back(r * r / (1.0 + r * r));
  }
  const auto rule = composite_gauss_legendre(breakpoints(0.0, 1.0, cuts), width, spec.quad.gl_order);

  ChartPass pass;
  const std::size_t nr = rule.nodes.size();
  const std::size_t nt = static_cast<std::size_t>(n_theta);
  pass.nodes.points.resize(nr * nt);
  pass.nodes.log_weight.resize(nr * nt);
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(nr * nt), static_cast<Eigen::Index>(basis.size()));
  parallel_for(nr * nt, [&](std::size_t q) {
    const std::size_t i = q / nt, j = q % nt;
    const double t = rule.nodes[i];
    const double r = std::sqrt(t / (1.0 - t));
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(nt);
    const Vec2 z{r * std::cos(theta), r * std::sin(theta)};
    // dmu = dt dtheta / 2pi: unit-mass Fubini-Study area measure.
    const double log_w = std::log(rule.weights[i] / static_cast<double>(nt));
    pass.nodes.points[q] = z;
    pass.nodes.log_weight[q] = log_w;
    const double half = 0.5 * (log_w - k * w.value(z));
    const double lr = std::log(r);
    for (std::size_t b = 0; b < basis.size(); ++b) {
      const double e = static_cast<double>(basis[b][0]);
      const double mag = std::exp(e * lr + half);
      a(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(b)) = std::polar(mag, e * theta);
    }
  });
  pass.gram = a.transpose() * a.conjugate();
  return pass;
}

std::vector<double> chart_log_prescale(long k, const std::vector<Lattice2>& basis) {
  std::vector<double> out;
  for (const auto& e : basis) {
    const double j = static_cast<double>(e[0]);
    out.push_back(-0.5 * log_beta(j + 1.0, static_cast<double>(k) - j + 1.0));
  }
  return out;
}

}  // namespace

double QuadratureNodes::measure_mass() const {
  double s = 0.0;
  for (double x : log_weight) s += std::exp(x);
  return s;
}

double GramMatrix::diagonal_entry(std::size_t i) const {
  if (diagonal) return std::exp(log_diagonal.at(i));
  return dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
}

double toric_box_offset(const WeightSpec& weight) {
  return 1.0 + weight.bump_reach() + std::log(static_cast<double>(lattice_points(weight.polytope(), 1).size()));
}

double toric_box_half_width(const WeightSpec& weight, long k, std::size_t dim, const QuadratureOptions& quad) {
  const double v0 = quad.v0 >= 0.0 ? quad.v0 : toric_box_offset(weight);
  return v0 + std::log(static_cast<double>(k) * static_cast<double>(std::max<std::size_t>(dim, 1)) / quad.tol);
}

std::vector<Lattice2> basis_exponents(const HilbertSpaceSpec& spec) {
  if (spec.k < 1) throw std::invalid_argument("k must be >= 1");
  if (spec.basis) return *spec.basis;
  if (spec.weight.is_toric()) return lattice_points(spec.weight.polytope(), spec.k);
  std::vector<Lattice2> out;
  for (long j = 0; j <= spec.k; ++j) out.push_back({j, 0});
  return out;
}

std::size_t dimension(const HilbertSpaceSpec& spec) { return basis_exponents(spec).size(); }

GramMatrix gram_matrix(const HilbertSpaceSpec& spec) {
  const auto basis = basis_exponents(spec);
  const double k = static_cast<double>(spec.k);
  GramMatrix g;
  if (spec.weight.is_toric()) {
    g.diagonal = true;
    g.box_half_width = toric_box_half_width(spec.weight, spec.k, basis.size(), spec.quad);
    double width = std::min(1.0, 2.0 / std::sqrt(k));
    ToricPass prev = toric_pass(spec, basis, g.box_half_width, width);
    double diff = std::numeric_limits<double>::infinity();
    for (int d = 1; d <= spec.quad.max_doublings; ++d) {
      width *= 0.5;
      ToricPass cur = toric_pass(spec, basis, g.box_half_width, width);
      diff = 0.0;
      for (std::size_t i = 0; i < basis.size(); ++i) diff = std::max(diff, std::abs(cur.log_gram[i] - prev.log_gram[i]));
      prev = std::move(cur);
      if (diff < spec.quad.tol) {
        g.log_diagonal = std::move(prev.log_gram);
        g.nodes = std::move(prev.nodes);
        g.achieved_tol = diff;
        g.refinements = d;
        return g;
      }
    }
    throw NumericalError("gram_matrix", "toric quadrature did not converge; achieved relative agreement " +
                                            std::to_string(diff) + " > tol " + std::to_string(spec.quad.tol));
  }

  g.diagonal = false;
  int n_theta = std::max<int>(static_cast<int>(4 * spec.k + 16), spec.quad.n_theta);
  n_theta += n_theta % 2;
  const bool invariant = spec.weight.s1_invariant();
  const auto lp = chart_log_prescale(spec.k, basis);
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) d(static_cast<Eigen::Index>(i)) = std::exp(lp[i]);

  // Radial panels and angles are refined independently: each step compares
  // the current pass against one with halved panels and, for weights without
  // rotational symmetry, one with doubled angles.
  auto gap = [&](const ChartPass& a, const ChartPass& b) {
    return (d.asDiagonal() * (a.gram - b.gram) * d.asDiagonal()).cwiseAbs().maxCoeff();
  };
  double width = std::min(0.05, 0.5 / std::sqrt(k));
  ChartPass cur = chart_pass(spec, basis, width, n_theta);
  double diff = std::numeric_limits<double>::infinity();
  for (int step = 1; step <= spec.quad.max_doublings; ++step) {
    ChartPass radial = chart_pass(spec, basis, 0.5 * width, n_theta);
    const double dr = gap(radial, cur);
    double dt = 0.0;
    if (!invariant) {
      ChartPass angular = chart_pass(spec, basis, width, 2 * n_theta);
      dt = gap(angular, cur);
      if (dr < spec.quad.tol && dt < spec.quad.tol) radial = std::move(angular), n_theta *= 2;
    }
    diff = std::max(dr, dt);
    if (diff < spec.quad.tol) {
      if (invariant) width *= 0.5;
      g.dense = std::move(radial.gram);
      g.nodes = std::move(radial.nodes);
      g.achieved_tol = diff;
      g.refinements = step;
      g.n_theta = n_theta;
      return g;
    }
    if (dr >= spec.quad.tol) width *= 0.5;
    if (dt >= spec.quad.tol) n_theta *= 2;
    cur = chart_pass(spec, basis, width, n_theta);
  }
  throw NumericalError("gram_matrix", "chart quadrature did not converge; achieved " + std::to_string(diff) +
                                          " > tol " + std::to_string(spec.quad.tol));
}

Orthonormalization orthonormalize(const Eigen::MatrixXcd& gram, std::span<const double> prescale) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n || static_cast<Eigen::Index>(prescale.size()) != n) {
    throw std::invalid_argument("orthonormalize: gram must be square and match the prescale length");
  }
  Orthonormalization out;
  out.prescale.assign(prescale.begin(), prescale.end());
  if (n == 0) return out;
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(prescale[static_cast<std::size_t>(i)] > 0.0)) throw std::invalid_argument("orthonormalize: prescale must be positive");
    d(i) = prescale[static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXcd h = d.asDiagonal() * gram * d.asDiagonal();
  const double scale = h.cwiseAbs().maxCoeff();
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NumericalError("orthonormalize", "Gram matrix is not Hermitian to 1e-12 relative");
  }
  h = 0.5 * (h + h.adjoint());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  if (!(lmax > 0.0)) throw NumericalError("orthonormalize", "Gram not PD at working precision");
  out.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  out.log10_condition = std::log10(out.condition);

  Eigen::LLT<Eigen::MatrixXcd> llt(h);
  if (llt.info() == Eigen::Success && out.condition <= 1e12) {
    const Eigen::MatrixXcd l = llt.matrixL();
    out.coefficients = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXcd::Identity(n, n));
    return out;
  }

  out.eigen_fallback = true;
  const double cutoff = 1e-13 * lmax;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lambda(i) >= cutoff) keep.push_back(i);
  }
  out.discarded = static_cast<int>(n - static_cast<Eigen::Index>(keep.size()));
  out.coefficients.resize(static_cast<Eigen::Index>(keep.size()), n);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Eigen::Index i = keep[r];
    if (!(lambda(i) > 0.0)) throw NumericalError("orthonormalize", "Gram not PD at working precision");
    out.coefficients.row(static_cast<Eigen::Index>(r)) = eig.eigenvectors().col(i).adjoint() / std::sqrt(lambda(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// BergmanModel

BergmanModel::BergmanModel(HilbertSpaceSpec spec) : spec_(std::move(spec)) {
  basis_ = basis_exponents(spec_);
  if (basis_.empty()) return;
  gram_ = gram_matrix(spec_);
  if (toric()) {
    const auto [lo, hi] = std::minmax_element(gram_.log_diagonal.begin(), gram_.log_diagonal.end());
    factor_.log10_condition = (*hi - *lo) / std::numbers::ln10;
    factor_.condition = std::pow(10.0, factor_.log10_condition);
    return;
  }
  chart_log_prescale_ = chart_log_prescale(spec_.k, basis_);
  std::vector<double> d;
  for (double x : chart_log_prescale_) d.push_back(std::exp(x));
  factor_ = orthonormalize(gram_.dense, d);
}

std::size_t BergmanModel::retained() const {
  if (toric() || basis_.empty()) return basis_.size();
  return static_cast<std::size_t>(factor_.coefficients.rows());
}

Eigen::VectorXcd BergmanModel::weighted_basis(const Vec2& zeta) const {
  const double r = std::hypot(zeta[0], zeta[1]);
  const double theta = std::atan2(zeta[1], zeta[0]);
  const double half = -0.5 * static_cast<double>(spec_.k) * spec_.weight.value(zeta);
  Eigen::VectorXcd a(static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t b = 0; b < basis_.size(); ++b) {
    const double e = static_cast<double>(basis_[b][0]);
    double mag = 0.0;
    if (r > 0.0) {
      mag = std::exp(chart_log_prescale_[b] + e * std::log(r) + half);
    } else if (e == 0.0) {
      mag = std::exp(chart_log_prescale_[b] + half);
    }
    a(static_cast<Eigen::Index>(b)) = std::polar(mag, e * theta);
  }
  return a;
}

Eigen::VectorXcd BergmanModel::weighted_orthonormal(const Vec2& zeta) const {
  if (toric()) throw std::invalid_argument("weighted_orthonormal is defined for chart models");
  if (basis_.empty()) return {};
  return factor_.coefficients * weighted_basis(zeta);
}

double BergmanModel::log_bergman(const Vec2& x) const {
  if (basis_.empty()) return kNegInf;
  if (toric()) {
    const int n = spec_.weight.dimension();
    const auto& lg = gram_.log_diagonal;
    return lse(basis_.size(), [&](std::size_t a) { return dot(basis_[a], x, n) - lg[a]; }) -
           static_cast<double>(spec_.k) * spec_.weight.value(x);
  }
  return std::log(weighted_orthonormal(x).squaredNorm());
}

double BergmanModel::bergman(const Vec2& x) const { return std::exp(log_bergman(x)); }

double BergmanModel::log_kernel_norm(const Vec2& x, const Vec2& y, const Vec2& angle) const {
  if (basis_.empty()) return kNegInf;
  if (toric()) {
    const int n = spec_.weight.dimension();
    const Vec2 mid{0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])};
    const double shift = -0.5 * static_cast<double>(spec_.k) * (spec_.weight.value(x) + spec_.weight.value(y));
    const auto& lg = gram_.log_diagonal;
    auto term = [&](std::size_t a) { return dot(basis_[a], mid, n) - lg[a]; };
    double m = kNegInf;
    for (std::size_t a = 0; a < basis_.size(); ++a) m = std::max(m, term(a));
    std::complex<double> s = 0.0;
    for (std::size_t a = 0; a < basis_.size(); ++a) s += std::polar(std::exp(term(a) - m), dot(basis_[a], angle, n));
    return 2.0 * (m + shift + std::log(std::abs(s)));
  }
  const std::complex<double> kxy = weighted_orthonormal(y).dot(weighted_orthonormal(x));
  return std::log(std::norm(kxy));
}

double BergmanModel::reproducing_integral(const Vec2& x) const {
  if (basis_.empty()) return 0.0;
  const auto& q = gram_.nodes;
  if (toric()) {
    // Torus averaging leaves only the diagonal terms alpha = beta.
    const int n = spec_.weight.dimension();
    const double k = static_cast<double>(spec_.k);
    const auto& lg = gram_.log_diagonal;
    std::vector<double> terms(basis_.size());
    for (std::size_t a = 0; a < basis_.size(); ++a) {
      const double inner = lse(q.points.size(), [&](std::size_t i) {
        return dot(basis_[a], q.points[i], n) - k * spec_.weight.value(q.points[i]) + q.log_weight[i];
      });
      terms[a] = dot(basis_[a], x, n) - k * spec_.weight.value(x) + inner - 2.0 * lg[a];
    }
    return std::exp(lse(terms.size(), [&](std::size_t a) { return terms[a]; }));
  }
  const Eigen::VectorXcd px = weighted_orthonormal(x);
  std::vector<double> contrib(q.points.size());
  parallel_for(q.points.size(), [&](std::size_t i) {
    contrib[i] = std::exp(q.log_weight[i]) * std::norm(weighted_orthonormal(q.points[i]).dot(px));
  });
  double s = 0.0;
  for (double c : contrib) s += c;
  return s;
}

double BergmanModel::bergman_mass() const {
  if (basis_.empty()) return 0.0;
  const auto& q = gram_.nodes;
  std::vector<double> contrib(q.points.size());
  parallel_for(q.points.size(), [&](std::size_t i) { contrib[i] = std::exp(q.log_weight[i] + log_bergman(q.points[i])); });
  double s = 0.0;
  for (double c : contrib) s += c;
  return s;
}

namespace {

void check_domain(const BergmanModel& model, const GridDomain& domain) {
  if (model.toric()) {
    if (domain.kind != GridDomain::Kind::VBox || domain.dim != model.weight().dimension()) {
      throw std::invalid_argument("toric Bergman model needs a v-box of matching dimension");
    }
  } else if (domain.kind != GridDomain::Kind::Chart) {
    throw std::invalid_argument("chart Bergman model needs a chart grid");
  }
}

}  // namespace

GridField bergman_function(const BergmanModel& model, const GridDomain& domain) {
  check_domain(model, domain);
  std::vector<double> vals(domain.size());
  parallel_for(vals.size(), [&](std::size_t i) { vals[i] = model.bergman(domain.point(i)); });
  return {domain, std::move(vals)};
}

GridField log_bergman_function(const BergmanModel& model, const GridDomain& domain) {
  check_domain(model, domain);
  std::vector<double> vals(domain.size());
  parallel_for(vals.size(), [&](std::size_t i) { vals[i] = model.log_bergman(domain.point(i)); });
  return {domain, std::move(vals)};
}

double bergman_kernel_norm(const BergmanModel& model, const Vec2& x, const Vec2& y) {
  return std::exp(model.log_kernel_norm(x, y));
}

}  // namespace plurikit
