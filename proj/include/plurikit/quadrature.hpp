#pragma once

#include <span>
#include <vector>

namespace plurikit {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Composite Gauss-Legendre rule over [breaks.front(), breaks.back()].
///
/// Each segment between consecutive breakpoints is split into equal panels
/// no wider than `max_width`; panels never straddle a breakpoint, so
/// integrands that are only C^2 across a breakpoint keep spectral accuracy
/// inside each panel. `order` is one of 8, 16, 20.
QuadratureRule composite_gauss_legendre(std::span<const double> breaks, double max_width, int order);

/// Sorted, de-duplicated breakpoints of [lo, hi] with interior cuts clipped in.
std::vector<double> breakpoints(double lo, double hi, std::span<const double> cuts);

}  // namespace plurikit
