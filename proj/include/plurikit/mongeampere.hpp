#pragma once

// Grid Monge-Ampere densities relative to a reference potential, the
// equilibrium measure 1_D max(MA(phi), 0), and volume bookkeeping.
//
// v-grids use Hessian determinants (u'' for n = 1); chart grids use the
// (s, theta) Laplacian, where the conformal factor cancels in the ratio.

#include <cstddef>
#include <string>
#include <vector>

#include "plurikit/envelope.hpp"
#include "plurikit/geometry.hpp"

namespace plurikit {

/// det Hess u / det Hess reference node-wise. Throws std::domain_error naming
/// the node when the reference is degenerate at a trusted node; untrusted
/// (boundary) nodes with a degenerate reference get ratio 0.
GridField ma_ratio(const GridField& u, const GridField& reference);

/// Same ratio against the analytic reference curvature of a weight: det Hess
/// phi_Delta on v-grids, the (s, theta) Laplacian of ln(1 + |zeta|^2) on
/// charts. Never degenerate, so it is the form used for 2-D toric grids, where
/// finite differences cannot resolve det Hess phi_Delta near the
/// asymptotic cone of the polytope's edges.
GridField ma_ratio(const GridField& u, const WeightSpec& reference);

/// Density of the reference measure per unit grid cell: det Hess ref (v-grid)
/// or Laplacian(ref) / 4 pi (chart, unit mass for Fubini-Study).
GridField reference_density(const GridField& reference);
GridField reference_density(const WeightSpec& reference, const GridDomain& domain);

struct EquilibriumMeasure {
  GridField density;                 // relative to the reference measure
  double mass = 0.0;
  double off_contact_mass = 0.0;     // |MA(phi_e)| mass outside D
  double clamped_mass = 0.0;         // negative MA(phi) mass removed on D
  double contact_l1_mismatch = 0.0;  // int_D |ratio(phi_e) - ratio(phi)|
  double matching_failure_fraction = 0.0;
  std::size_t interior_contact_nodes = 0;
};

/// `match_tol` bounds |ratio(phi_e) - ratio(phi)| on interior contact nodes
/// (contact within two nodes in every grid direction); negative selects 10 h.
EquilibriumMeasure equilibrium_measure(const EnvelopeResult& env, const GridField& phi, const GridField& reference,
                                       double match_tol = -1.0);
EquilibriumMeasure equilibrium_measure(const EnvelopeResult& env, const GridField& phi, const WeightSpec& reference,
                                       double match_tol = -1.0);

struct VolumeRow {
  long k = 0;
  std::size_t dim = 0;
  double normalized_dim = 0.0;  // k^{-n} dim
  double mass = 0.0;
  double volume = 0.0;
  double gap = 0.0;             // normalized_dim - mass
};

struct VolumeReport {
  std::vector<VolumeRow> rows;
  double relative_mass_error = 0.0;
  bool monotone = false;
  bool pass = false;
};

/// `n` is the complex dimension; `volume` the exact value (vol of the
/// polytope, 1 for the chart). PASS needs a strictly decreasing gap and
/// |mass - volume| <= rel_tol * volume.
VolumeReport volume_report(int n, double volume, double mass, const std::vector<long>& ks,
                           const std::vector<std::size_t>& dims, double rel_tol = 0.01);

}  // namespace plurikit
