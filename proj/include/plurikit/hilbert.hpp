#pragma once

// Weighted Hilbert spaces of sections and their Bergman kernels.
//
// Toric spaces: monomials z^alpha, alpha in kP, with norm
//   ||z^alpha||^2 = \int e^{<alpha,v> - k phi(v)} det Hess phi_P(v) dv
// (torus angles averaged out). Monomials are orthogonal, so the Gram matrix
// is diagonal and is held as log-entries.
//
// Chart spaces: polynomials of degree <= k on C, with the unit-mass
// Fubini-Study area measure. Perturbed weights give a dense Hermitian Gram
// matrix.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "plurikit/geometry.hpp"

namespace plurikit {

struct QuadratureOptions {
  double tol = 1e-10;      // panel-doubling agreement
  int gl_order = 8;
  int max_doublings = 12;
  double v0 = -1.0;        // toric box offset; negative selects the automatic value
  int n_theta = 0;         // chart angles; 0 selects 4k + 16
};

/// H(X, L^k): the weight fixes toric vs chart; the twisting bundle is trivial.
struct HilbertSpaceSpec {
  WeightSpec weight;
  long k = 1;
  QuadratureOptions quad;
  /// Optional subset of the exponent basis (chart exponents are (j, 0)).
  std::optional<std::vector<Lattice2>> basis;
};

/// Automatic toric box offset: 1 + bump reach + ln #(P ∩ Z^n).
double toric_box_offset(const WeightSpec& weight);
/// Half-width of the toric quadrature box: V0 + ln(k * dim / tol).
double toric_box_half_width(const WeightSpec& weight, long k, std::size_t dim, const QuadratureOptions& quad);

/// Quadrature nodes of the norm, with ln(weight * measure density) per node.
struct QuadratureNodes {
  std::vector<Vec2> points;
  std::vector<double> log_weight;

  double measure_mass() const;
};

struct GramMatrix {
  bool diagonal = false;
  std::vector<double> log_diagonal;  // toric
  Eigen::MatrixXcd dense;            // chart
  double achieved_tol = 0.0;         // last panel-doubling disagreement
  int refinements = 0;
  QuadratureNodes nodes;
  double box_half_width = 0.0;       // toric only
  int n_theta = 0;                   // chart only

  /// Entry value for diagonal Gram matrices (may overflow for large k).
  double diagonal_entry(std::size_t i) const;
};

/// The exponent basis: kP ∩ Z^n (toric) or {0, ..., k} (chart).
std::vector<Lattice2> basis_exponents(const HilbertSpaceSpec& spec);
std::size_t dimension(const HilbertSpaceSpec& spec);

/// Entries <b_i, b_j> of the k-th weighted norm. Panels are doubled until
/// successive Gram values agree to quad.tol; throws NumericalError otherwise.
GramMatrix gram_matrix(const HilbertSpaceSpec& spec);

/// Coefficients C with C (D G D) C^* = I over the prescaled basis D b.
struct Orthonormalization {
  Eigen::MatrixXcd coefficients;
  std::vector<double> prescale;
  double condition = 1.0;
  double log10_condition = 0.0;
  int discarded = 0;
  bool eigen_fallback = false;
};

/// Cholesky of D G D; falls back to an eigendecomposition (modes below
/// 1e-13 * max dropped) if Cholesky fails or the condition exceeds 1e12.
Orthonormalization orthonormalize(const Eigen::MatrixXcd& gram, std::span<const double> prescale);

/// Immutable Bergman model at level k.
class BergmanModel {
 public:
  explicit BergmanModel(HilbertSpaceSpec spec);

  const HilbertSpaceSpec& spec() const noexcept { return spec_; }
  const WeightSpec& weight() const noexcept { return spec_.weight; }
  long k() const noexcept { return spec_.k; }
  bool toric() const noexcept { return spec_.weight.is_toric(); }
  /// Basis cardinality.
  std::size_t dimension() const noexcept { return basis_.size(); }
  /// Orthonormal functions kept (dimension minus discarded modes).
  std::size_t retained() const;
  const std::vector<Lattice2>& basis() const noexcept { return basis_; }
  const GramMatrix& gram() const noexcept { return gram_; }
  const Orthonormalization& factor() const noexcept { return factor_; }
  const QuadratureNodes& quadrature() const noexcept { return gram_.nodes; }

  /// ln B_k(x), evaluated through log-sum-exp. x is v (toric) or zeta (chart).
  double log_bergman(const Vec2& x) const;
  double bergman(const Vec2& x) const;

  /// ln |K_k(x, y)|^2_{k phi}. For toric models `angle` is the torus angle
  /// difference between x and y; chart points carry their own phase.
  double log_kernel_norm(const Vec2& x, const Vec2& y, const Vec2& angle = {0.0, 0.0}) const;

  /// Chart only: psi_i(x) e^{-k phi(x)/2} for the retained orthonormal basis.
  Eigen::VectorXcd weighted_orthonormal(const Vec2& zeta) const;

  /// \int |K_k(x, y)|^2_{k phi} dvol(y) over the model's own quadrature.
  double reproducing_integral(const Vec2& x) const;
  /// \int B_k dvol over the model's own quadrature.
  double bergman_mass() const;

 private:
  HilbertSpaceSpec spec_;
  std::vector<Lattice2> basis_;
  GramMatrix gram_;
  Orthonormalization factor_;
  std::vector<double> chart_log_prescale_;

  Eigen::VectorXcd weighted_basis(const Vec2& zeta) const;
};

/// B_k at every node of a grid of the model's kind.
GridField bergman_function(const BergmanModel& model, const GridDomain& domain);
/// ln B_k at every node; finite even where B_k underflows.
GridField log_bergman_function(const BergmanModel& model, const GridDomain& domain);
/// |K_k(x, y)|^2_{k phi}.
double bergman_kernel_norm(const BergmanModel& model, const Vec2& x, const Vec2& y);

}  // namespace plurikit
