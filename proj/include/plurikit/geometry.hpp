#pragma once

// Polytopes, weights and grids shared by every other module.
//
// Toric weights live on log-coordinates v = (ln|z_1|^2, ..., ln|z_n|^2) with
// n in {1, 2}. Chart weights live on the affine chart C of P^1; their grids are
// log-polar, s = ln|zeta| and theta, which is a conformal change of variables
// so that discrete Laplacians keep their sign.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace plurikit {

using Vec2 = std::array<double, 2>;
using Lattice2 = std::array<long, 2>;

class LatticePolytope {
 public:
  /// The segment [lo, hi] in R.
  static LatticePolytope segment(long lo, long hi);
  /// Convex hull of integer points in R^2.
  static LatticePolytope polygon(std::vector<Lattice2> points);

  int dimension() const noexcept { return dim_; }
  /// n = 1: {lo, hi}. n = 2: hull vertices in counter-clockwise order.
  const std::vector<Lattice2>& vertices() const noexcept { return hull_; }

  /// Membership of a real point, with slack `tol` in the edge inequalities.
  bool contains(const Vec2& p, double tol = 0.0) const;
  /// Exact membership test q in k*P for an integer point q.
  bool contains_scaled(const Lattice2& q, long k) const;

  Vec2 lower() const;
  Vec2 upper() const;
  double diameter() const;
  /// Largest Euclidean distance from p to the boundary, negative outside.
  double signed_boundary_distance(const Vec2& p) const;

 private:
  int dim_ = 1;
  std::vector<Lattice2> hull_;
};

/// Points of k*P with integer coordinates, lexicographic order.
std::vector<Lattice2> lattice_points(const LatticePolytope& polytope, long k);

/// Euclidean volume (length for n = 1, shoelace area for n = 2).
double lattice_volume(const LatticePolytope& polytope);

/// amplitude * (1 - (r/radius)^2)^smoothness inside the ball, zero outside.
/// smoothness >= 3 keeps the profile C^2.
struct Bump {
  Vec2 center{0.0, 0.0};
  double radius = 1.0;
  double amplitude = 0.0;
  int smoothness = 3;

  double value(const Vec2& x, int dim) const;
  Vec2 gradient(const Vec2& x, int dim) const;
  Eigen::Matrix2d hessian(const Vec2& x, int dim) const;
};

enum class WeightKind { ToricPotential, PerturbedToric, FSChart, PerturbedChart };

std::string to_string(WeightKind kind);

class WeightSpec {
 public:
  static WeightSpec toric(LatticePolytope polytope);
  static WeightSpec perturbed_toric(LatticePolytope polytope, std::vector<Bump> bumps);
  static WeightSpec fs_chart();
  static WeightSpec perturbed_chart(std::vector<Bump> bumps);

  WeightKind kind() const noexcept { return kind_; }
  bool is_toric() const noexcept {
    return kind_ == WeightKind::ToricPotential || kind_ == WeightKind::PerturbedToric;
  }
  /// Dimension of the toric v-space; 2 (real) for chart weights.
  int dimension() const noexcept;
  const LatticePolytope& polytope() const;
  const std::vector<Bump>& bumps() const noexcept { return bumps_; }

  /// Toric: phi(v). Chart: phi(zeta), zeta = (Re, Im).
  double value(const Vec2& x) const;
  /// The unperturbed potential: phi_Delta for toric weights, ln(1+|zeta|^2) on charts.
  double reference_value(const Vec2& x) const;

  /// Toric only: analytic gradient and Hessian in v.
  Vec2 gradient(const Vec2& v) const;
  Eigen::Matrix2d hessian(const Vec2& v) const;
  Eigen::Matrix2d reference_hessian(const Vec2& v) const;
  /// det of the Hessian (u'' for n = 1). The reference determinant is a sum
  /// of non-negative terms, so it keeps full relative precision far out in
  /// the tails where it decays like e^{-|v|}.
  double hessian_det(const Vec2& v) const;
  double reference_hessian_det(const Vec2& v) const;

  /// Chart only: Euclidean Laplacian in zeta.
  double laplacian(const Vec2& zeta) const;
  double reference_laplacian(const Vec2& zeta) const;

  /// Bound C in |phi - reference| <= C: the sum of absolute bump amplitudes.
  double growth_constant() const;
  /// Chart weight invariant under zeta -> e^{i t} zeta (all bumps centered at 0).
  bool s1_invariant() const;
  /// Largest |center| + radius over bumps, 0 without bumps.
  double bump_reach() const;

 private:
  WeightKind kind_ = WeightKind::FSChart;
  std::vector<LatticePolytope> polytope_;  // empty for chart weights
  std::vector<Lattice2> toric_points_;     // P ∩ Z^n
  std::vector<Bump> bumps_;

  double bump_sum(const Vec2& x) const;
  bool bump_active(const Vec2& x) const;
  std::vector<double> softmax(const Vec2& v) const;
};

/// Grid over a v-box [lo, hi]^n (n = 1, 2) or a log-polar chart grid
/// s in [s_min, s_max] (inclusive) times n_theta equispaced angles.
struct GridDomain {
  enum class Kind { VBox, Chart };

  Kind kind = Kind::VBox;
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};
  std::array<std::size_t, 2> count{1, 1};

  static GridDomain vbox1(double lo, double hi, std::size_t n);
  static GridDomain vbox2(Vec2 lo, Vec2 hi, std::array<std::size_t, 2> n);
  static GridDomain chart(double s_min, double s_max, std::size_t n_s, std::size_t n_theta);

  std::size_t size() const noexcept { return count[0] * count[1]; }
  double spacing(int axis) const;
  double coord(int axis, std::size_t i) const;
  std::size_t index(std::size_t i0, std::size_t i1 = 0) const noexcept { return i0 * count[1] + i1; }
  /// VBox: the v coordinates. Chart: zeta = e^s (cos theta, sin theta).
  Vec2 point(std::size_t flat) const;
  bool periodic(int axis) const noexcept { return kind == Kind::Chart && axis == 1; }

  bool operator==(const GridDomain&) const = default;
};

/// Real values aligned with the nodes of a GridDomain. Values are finite.
class GridField {
 public:
  GridField() = default;
  GridField(GridDomain domain, std::vector<double> values);

  const GridDomain& domain() const noexcept { return domain_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  double max() const;
  double min() const;
  double max_abs() const;

  GridField operator+(const GridField& other) const;
  GridField operator-(const GridField& other) const;
  GridField scaled(double factor) const;

 private:
  GridDomain domain_;
  std::vector<double> values_;
};

/// Boolean companion of GridField.
struct MaskField {
  GridDomain domain;
  std::vector<std::uint8_t> values;

  std::size_t count() const;
};

/// Node-wise weight values. Toric weights need a VBox of matching dimension,
/// chart weights a Chart domain.
GridField eval_weight(const WeightSpec& weight, const GridDomain& domain);

/// Finite-difference Hessian channels on a v-grid. For n = 1 both channels
/// hold u''. Boundary nodes use one-sided second differences and are flagged
/// untrusted.
struct HessianField {
  GridField det;
  GridField eigmin;
  std::vector<std::uint8_t> trusted;
};

HessianField hessian_field(const GridField& u);

/// 5-point Laplacian in (s, theta) on a chart grid, periodic in theta.
/// Ring nodes (first and last s) are untrusted one-sided values.
struct LaplacianField {
  GridField laplacian;
  std::vector<std::uint8_t> trusted;
};

LaplacianField laplacian_field(const GridField& u);

/// Trapezoid weights over a grid (v-box: dv; chart: ds dtheta).
std::vector<double> trapezoid_weights(const GridDomain& domain);

}  // namespace plurikit
