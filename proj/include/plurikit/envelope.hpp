#pragma once

// Equilibrium potentials phi_e: the largest positively curved minorant of a
// weight. Toric weights reduce to a convex hull with gradients constrained to
// the polytope (computed by discrete biconjugation); chart weights on P^1 give
// an obstacle problem for subharmonic functions (projected SOR).

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "plurikit/geometry.hpp"

namespace plurikit {

struct EnvelopeOptions {
  int dual_factor = 8;        // dual nodes per primal node and axis (>= 4)
  double slope_tol = -1.0;    // boundary slope slack; negative selects 1e-3 * diam
  double eps_D = -1.0;        // contact threshold; negative selects the default rule
  double sor_omega = 1.5;
  double tol_sor = 1e-10;     // relative to max(1, max |phi|)
  long max_iterations = 1000000;
};

struct EnvelopeResult {
  GridField phi_e;
  MaskField contact;
  std::string method;
  double residual = 0.0;
  long iterations = 0;
  double eps_D = 0.0;
  std::vector<double> residual_history;  // SOR: max update every 100 sweeps
  double sandwich_gap = 0.0;             // chart: error bar of the ring data
};

/// Exact discrete conjugate max_i (p x_i - f_i) for every p in `ps`.
/// xs and ps must be strictly increasing; +inf entries of fs are excluded.
/// Monotone-argmax divide and conquer, O((N + M) log M).
std::vector<double> conjugate_1d(std::span<const double> xs, std::span<const double> fs, std::span<const double> ps);

/// Uniform grid over the bounding box of the polytope with factor*(N-1)+1
/// nodes per axis, N the primal node count on that axis.
GridDomain make_dual_grid(const GridDomain& primal, const LatticePolytope& polytope, int factor);

/// u*(p) = max over primal nodes of <p, v> - u(v). Dual nodes outside the
/// polytope are skipped when the field is used by biconjugate().
GridField legendre_conjugate(const GridField& u, const GridDomain& dual);

/// max over dual nodes p in the polytope of <p, v> - u*(p), on the primal grid.
GridField biconjugate(const GridField& u_star, const LatticePolytope& polytope, const GridDomain& primal);

/// Toric equilibrium potential by biconjugation. Throws NumericalError when
/// the boundary slopes of u do not reach the boundary of the polytope.
EnvelopeResult toric_equilibrium(const GridField& u, const LatticePolytope& polytope, const EnvelopeOptions& opt = {});

/// Lower convex hull of (xs, fs) evaluated at xs (monotone chain).
std::vector<double> convex_envelope_1d(std::span<const double> xs, std::span<const double> fs);

/// Default contact threshold: max(10 * residual, h^2 * kappa / 2) with kappa
/// the largest interior second difference of phi.
double default_eps_D(const GridField& phi, double residual);

MaskField contact_set(const GridField& phi, const GridField& phi_e, double eps_D);

/// Projected red-black SOR for the obstacle problem on a chart grid: the
/// largest discretely subharmonic psi <= phi with psi fixed on the first and
/// last ring. `ring` supplies those values (other nodes are ignored).
EnvelopeResult sor_envelope(const GridField& phi, const GridField& ring, const EnvelopeOptions& opt = {});

/// Envelope of a radial chart weight g(v), v = ln|zeta|^2: the largest convex
/// minorant with slopes in [0, 1], sampled on a uniform v-grid.
struct RadialEnvelope {
  std::vector<double> v, g, e;

  /// Linear interpolation; clamps to the end values outside the grid.
  double operator()(double v) const;
};

RadialEnvelope radial_envelope(const std::function<double(double)>& g, double v_lo, double v_hi, std::size_t n);

/// Radial reference envelopes for a chart weight on a chart grid: the exact
/// envelope for S^1-invariant weights, otherwise the envelopes of the
/// angular minimum and maximum of phi.
struct RadialSandwich {
  RadialEnvelope lower;
  RadialEnvelope upper;
  double gap = 0.0;  // max of upper - lower over the chart rings
};

RadialSandwich radial_sandwich(const WeightSpec& weight, const GridDomain& chart);

/// Chart equilibrium: ring data from the radial sandwich, interior by SOR.
EnvelopeResult chart_equilibrium(const WeightSpec& weight, const GridDomain& chart, const EnvelopeOptions& opt = {});

/// Second-difference bounds of phi_e across nested refinements.
struct RegularityLevel {
  double spacing = 0.0;
  double max_second_difference = 0.0;
  double lipschitz_first_difference = 0.0;
  double phi_max_second_difference = 0.0;
};

struct RegularityReport {
  std::vector<RegularityLevel> levels;
  double max_ratio = 0.0;
  bool pass = false;
};

/// Inputs are the envelopes and weights at spacings h, h/2, h/4 (same box).
/// Only nodes of the central `window` fraction of each axis are probed.
RegularityReport regularity_probe(std::span<const GridField> phi_e, std::span<const GridField> phi,
                                  double tol = 1e-6, double window = 0.6, double ratio_bound = 1.2);

}  // namespace plurikit
