#pragma once

// Quantitative checks of the large-k behaviour of Bergman functions against
// the equilibrium data computed by the envelope module.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "plurikit/envelope.hpp"
#include "plurikit/hilbert.hpp"
#include "plurikit/mongeampere.hpp"

namespace plurikit {

/// Envelope data at arbitrary toric points: phi_e by (bi)linear interpolation
/// on the envelope grid, phi itself outside that grid.
class EnvelopeView {
 public:
  EnvelopeView(WeightSpec weight, EnvelopeResult env);

  const WeightSpec& weight() const noexcept { return weight_; }
  const EnvelopeResult& envelope() const noexcept { return env_; }

  double phi_e(const Vec2& v) const;
  /// max(phi - phi_e, 0).
  double gap(const Vec2& v) const;
  bool contact(const Vec2& v) const;
  /// 1_D max(det Hess phi / det Hess phi_Delta, 0), analytic derivatives.
  double target_density(const Vec2& v) const;
  /// det Hess phi / det Hess phi_Delta (signed).
  double curvature_ratio(const Vec2& v) const;
  /// Largest phi - phi_e over the envelope grid.
  double sup_gap() const;

 private:
  WeightSpec weight_;
  EnvelopeResult env_;
  bool inside(const Vec2& v) const;
};

struct ConvergenceRow {
  long k = 0;
  double l1_error = 0.0;        // || k^-n B_k - target ||_{L1(dmu)}
  double sup_ratio = 0.0;       // max k^-n B_k / target over target > 0
  double normalized_dim = 0.0;  // k^-n dim
  double target_mass = 0.0;
};

/// L1 errors integrate over each model's own quadrature nodes; sup ratios
/// run over the interior nodes of `eval`.
std::vector<ConvergenceRow> convergence_table(std::span<const BergmanModel> models, const EnvelopeView& view,
                                              const GridDomain& eval);

struct DecayProfile {
  GridField profile;  // -(1/k) ln(k^-n B_k)
  GridField gap;      // phi - phi_e
  double fitted_C = 0.0;
  std::size_t excluded = 0;  // nodes with ln B_k < -708
  std::size_t window_nodes = 0;
};

/// Fits the smallest C >= 0 with -C/k <= profile - gap <= (n ln k + C)/k on
/// the central `window` fraction of `eval`.
DecayProfile decay_profile(const BergmanModel& model, const EnvelopeView& view, const GridDomain& eval,
                           double window = 0.6);

/// phi + (1/k) ln B_k, the Bergman metric in the fixed trivialization.
GridField bergman_metric_field(const BergmanModel& model, const GridDomain& eval);

/// Largest |field - phi_e| over the central `window` fraction of the grid.
double metric_distance(const GridField& field, const EnvelopeView& view, double window = 0.6);

struct VolumeFormDistance {
  double sup_cdf = 0.0;        // max |F_k - F_inf| over the grid
  double mass_k = 0.0;         // F_k(end) - F_k(start)
  double mass_limit = 0.0;
  std::size_t repaired = 0;    // slopes raised by the running maximum
};

/// n = 1 toric grids: F_k = running-max forward slopes of the metric field,
/// F_inf = forward slopes of phi_e (both sampled on `field`'s grid).
VolumeFormDistance bergman_volume_distance(const GridField& field, const EnvelopeView& view);

struct TzcReport {
  std::vector<long> ks;
  std::vector<Vec2> window;
  /// b_hat[p][i]: Richardson estimate from the pair (ks[p], ks[p+1]) at window[i].
  std::vector<std::vector<double>> b_hat;
  double b1 = 0.0;      // mean of the last estimate over the window
  double spread = 0.0;  // max |b_hat[p+1] - b_hat[p]| / max |b_hat[last]|
};

/// Models must have strictly dyadic levels k, 2k, 4k, ... The window must lie
/// inside D with Hessian eigen-minimum of phi above `margin` and contact on
/// every grid node within `clearance`; otherwise std::domain_error.
TzcReport tzc_fit(std::span<const BergmanModel> models, const EnvelopeView& view, std::span<const Vec2> window,
                  double margin = 1e-3, double clearance = 0.05);

/// Smooth test function on a chart grid: (1 - q)^3 for q < 1 with
/// q = ((s - s0) / s_radius)^2 + (dtheta / theta_radius)^2 in log-polar
/// coordinates, dtheta wrapped to [-pi, pi]. theta_radius <= 0 drops the
/// angular term (a ring).
struct TestFunction {
  double s = 0.0;
  double theta = 0.0;
  double s_radius = 1.0;
  double theta_radius = 1.0;

  double operator()(double s_at, double theta_at) const;
};

struct OffdiagResult {
  double value = 0.0;   // k^-1 double integral of |K|^2 f g
  double oracle = 0.0;  // integral of f g against the equilibrium measure
};

/// Chart models only. `mu` must live on `chart`.
OffdiagResult offdiag_concentration(const BergmanModel& model, const TestFunction& f, const TestFunction& g,
                                    const GridDomain& chart, const EquilibriumMeasure& mu);

struct TchebishevRow {
  long k = 0;
  double estimate = 0.0;  // (inf B_k)^{1/k}
};

struct TchebishevReport {
  std::vector<TchebishevRow> rows;
  double extrapolated = 0.0;   // fit of ln estimate = c + (a ln k + b) / k, >= 3 levels
  double reference = 0.0;      // e^{-sup (phi - phi_e)}
  double relative_gap = 0.0;   // at the largest k
  std::string convention;
};

TchebishevReport tchebishev_estimate(std::span<const BergmanModel> models, const EnvelopeView& view,
                                     const GridDomain& eval);

/// Nodes of the central `window` fraction of a grid (n = 1 or 2).
std::vector<std::size_t> window_nodes(const GridDomain& d, double window);

}  // namespace plurikit
