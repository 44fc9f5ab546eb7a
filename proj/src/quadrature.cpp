#include "plurikit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace plurikit {

namespace {

// Full node/weight set on [-1, 1] from boost's half-range tables.
template <int N>
void reference_rule(std::vector<double>& x, std::vector<double>& w) {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& a = rule::abscissa();
  const auto& b = rule::weights();
  x.clear();
  w.clear();
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] == 0.0) continue;
    x.push_back(-a[i]);
    w.push_back(b[i]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    x.push_back(a[i]);
    w.push_back(b[i]);
  }
}

}  // namespace

QuadratureRule composite_gauss_legendre(std::span<const double> breaks, double max_width, int order) {
  if (breaks.size() < 2) throw std::invalid_argument("composite_gauss_legendre: need >= 2 breakpoints");
  if (!(max_width > 0.0)) throw std::invalid_argument("composite_gauss_legendre: panel width must be positive");
  std::vector<double> x, w;
  switch (order) {
    case 8: reference_rule<8>(x, w); break;
    case 16: reference_rule<16>(x, w); break;
    case 20: reference_rule<20>(x, w); break;
    default: throw std::invalid_argument("composite_gauss_legendre: order must be 8, 16 or 20");
  }
  QuadratureRule rule;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    if (!(b > a)) continue;
    const auto panels = static_cast<std::size_t>(std::ceil((b - a) / max_width));
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double lo = a + static_cast<double>(p) * h;
      for (std::size_t i = 0; i < x.size(); ++i) {
        rule.nodes.push_back(lo + 0.5 * h * (x[i] + 1.0));
        rule.weights.push_back(0.5 * h * w[i]);
      }
    }
  }
  return rule;
}

std::vector<double> breakpoints(double lo, double hi, std::span<const double> cuts) {
  std::vector<double> b{lo, hi};
  for (double c : cuts) {
    if (c > lo && c < hi) b.push_back(c);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

}  // namespace plurikit
