#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "plurikit/asymptotics.hpp"

using namespace plurikit;

namespace {

const WeightSpec& fs_segment() {
  static const WeightSpec w = WeightSpec::toric(LatticePolytope::segment(0, 1));
  return w;
}

// phi is convex with gradient image (0, 1), so phi_e = phi exactly.
EnvelopeView fs_view(const GridDomain& d) {
  EnvelopeResult env;
  env.phi_e = eval_weight(fs_segment(), d);
  env.contact = MaskField{d, std::vector<std::uint8_t>(d.size(), 1)};
  env.method = "exact";
  return {fs_segment(), env};
}

WeightSpec double_well(double amplitude = 0.4) {
  return WeightSpec::perturbed_toric(LatticePolytope::segment(-1, 1), {Bump{{0, 0}, 1.0, amplitude, 3}});
}

EnvelopeView double_well_view(double amplitude = 0.4) {
  const auto w = double_well(amplitude);
  const auto d = GridDomain::vbox1(-14.0, 14.0, 28001);
  return {w, toric_equilibrium(eval_weight(w, d), w.polytope())};
}

std::vector<BergmanModel> models(const WeightSpec& w, std::initializer_list<long> ks) {
  std::vector<BergmanModel> out;
  for (long k : ks) out.emplace_back(HilbertSpaceSpec{w, k, {}, {}});
  return out;
}

}  // namespace

TEST_CASE("envelope view interpolates and falls back to the weight") {
  const auto d = GridDomain::vbox1(-10.0, 10.0, 2001);
  const auto view = fs_view(d);
  CHECK(view.phi_e({0.3, 0.0}) == doctest::Approx(std::log1p(std::exp(0.3))).epsilon(1e-6));
  CHECK(view.phi_e({12.0, 0.0}) == doctest::Approx(std::log1p(std::exp(12.0))));
  CHECK(view.contact({0.0, 0.0}));
  CHECK(view.target_density({1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(view.sup_gap() == 0.0);
  const EnvelopeView computed(fs_segment(), toric_equilibrium(eval_weight(fs_segment(), d), fs_segment().polytope()));
  CHECK(computed.sup_gap() <= 1e-5);

  const auto dw = double_well_view();
  CHECK_FALSE(dw.contact({0.0, 0.0}));
  CHECK(dw.target_density({0.0, 0.0}) == 0.0);
  CHECK(dw.contact({2.0, 0.0}));
  CHECK(dw.gap({0.0, 0.0}) == doctest::Approx(dw.sup_gap()).epsilon(1e-6));
}

TEST_CASE("window nodes cover the central fraction") {
  const auto d = GridDomain::vbox1(-10.0, 10.0, 101);
  const auto w = window_nodes(d, 0.6);
  CHECK(w.size() == 61);
  CHECK(d.point(w.front())[0] == doctest::Approx(-6.0));
  const auto c = GridDomain::chart(-2.0, 2.0, 41, 16);
  CHECK(window_nodes(c, 0.5).size() == 21 * 16);
}

TEST_CASE("Fubini-Study closed forms") {
  const auto d = GridDomain::vbox1(-10.0, 10.0, 2001);
  const auto view = fs_view(d);
  const auto ms = models(fs_segment(), {2, 4, 8, 16, 32, 64});

  SUBCASE("convergence table: L1 = 1/k, sup ratio = (k+1)/k") {
    const auto rows = convergence_table(ms, view, d);
    for (const auto& r : rows) {
      const double k = static_cast<double>(r.k);
      CHECK(r.l1_error == doctest::Approx(1.0 / k).epsilon(1e-8));
      CHECK(r.sup_ratio == doctest::Approx((k + 1.0) / k).epsilon(1e-10));
      CHECK(r.target_mass == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(r.l1_error >= std::abs(r.normalized_dim - r.target_mass) - 1e-12);
    }
  }

  SUBCASE("decay profile and metric field") {
    for (const auto& m : ms) {
      const double k = static_cast<double>(m.k());
      const auto dp = decay_profile(m, view, d);
      CHECK(dp.excluded == 0);
      CHECK(dp.fitted_C == doctest::Approx(std::log1p(1.0 / k)).epsilon(1e-8));
      CHECK(dp.profile[1000] == doctest::Approx(-std::log1p(1.0 / k) / k).epsilon(1e-8));

      const auto f = bergman_metric_field(m, d);
      for (std::size_t i = 0; i < d.size(); i += 100) {
        CHECK(f[i] - view.phi_e(d.point(i)) == doctest::Approx(std::log(k + 1.0) / k).epsilon(1e-8));
      }
      CHECK(metric_distance(f, view) == doctest::Approx(std::log(k + 1.0) / k).epsilon(1e-8));

      const auto vd = bergman_volume_distance(f, view);
      CHECK(vd.sup_cdf <= 1e-8);
      CHECK(vd.repaired == 0);
      CHECK(vd.mass_k == doctest::Approx(1.0).epsilon(1e-3));
    }
  }

  SUBCASE("tzc fit is exact") {
    std::vector<Vec2> window;
    for (int i = -5; i <= 5; ++i) window.push_back({0.4 * i, 0.0});
    const auto rep = tzc_fit(ms, view, window);
    CHECK(rep.b_hat.size() == 5);
    for (const auto& row : rep.b_hat) {
      for (double b : row) CHECK(std::abs(b - 1.0) <= 1e-8);
    }
    CHECK(rep.b1 == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep.spread <= 1e-8);
  }

  SUBCASE("tchebishev: (k+1)^(1/k) against 1") {
    const auto rep = tchebishev_estimate(ms, view, d);
    CHECK(rep.reference == doctest::Approx(1.0));
    for (const auto& r : rep.rows) {
      const double k = static_cast<double>(r.k);
      CHECK(r.estimate == doctest::Approx(std::pow(k + 1.0, 1.0 / k)).epsilon(1e-10));
    }
    CHECK(rep.relative_gap == doctest::Approx(std::pow(65.0, 1.0 / 64.0) - 1.0).epsilon(1e-8));
    CHECK(std::abs(rep.extrapolated - 1.0) < std::abs(rep.rows.back().estimate - 1.0));
  }
}

TEST_CASE("zero amplitude control matches Fubini-Study") {
  const auto w = WeightSpec::perturbed_toric(LatticePolytope::segment(0, 1), {Bump{{0, 0}, 1.0, 0.0, 3}});
  const auto d = GridDomain::vbox1(-10.0, 10.0, 2001);
  const EnvelopeView view(w, toric_equilibrium(eval_weight(w, d), w.polytope()));
  const auto a = tchebishev_estimate(models(w, {4, 8, 16}), view, d);
  const auto b = tchebishev_estimate(models(fs_segment(), {4, 8, 16}), fs_view(d), d);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].estimate == doctest::Approx(b.rows[i].estimate).epsilon(1e-12));
  }
}

TEST_CASE("tzc preconditions") {
  const auto view = double_well_view();
  const auto ms = models(double_well(), {32, 64});
  const std::vector<Vec2> bridge{{0.0, 0.0}};
  CHECK_THROWS_AS(tzc_fit(ms, view, bridge), std::domain_error);
  const std::vector<Vec2> edge{{0.73, 0.0}};
  CHECK_THROWS_AS(tzc_fit(ms, view, edge), std::domain_error);
  const auto odd = models(double_well(), {32, 48});
  const std::vector<Vec2> inside{{2.5, 0.0}};
  CHECK_THROWS_AS(tzc_fit(odd, view, inside), std::invalid_argument);
  CHECK_NOTHROW(tzc_fit(ms, view, inside));
}

TEST_CASE("double-well asymptotics") {
  const auto view = double_well_view();
  const auto eval = GridDomain::vbox1(-12.0, 12.0, 2401);
  const auto ms = models(double_well(), {64, 128, 256});
  const auto rows = convergence_table(ms, view, eval);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].l1_error >= std::abs(rows[i].normalized_dim - rows[i].target_mass));
    CHECK(rows[i].target_mass == doctest::Approx(2.0).epsilon(0.02));
    if (i > 0) {
      CHECK(rows[i].l1_error < rows[i - 1].l1_error);
      CHECK(rows[i].sup_ratio <= rows[i - 1].sup_ratio);
    }
  }

  // Off D: B_k / k <= e^{-k (phi - phi_e) / 2} at the bridge midpoint.
  const auto& m = ms.back();
  const double gap = view.gap({0.0, 0.0});
  CHECK(m.log_bergman({0.0, 0.0}) - std::log(256.0) < -128.0 * gap);

  // Decay bracket: profile approaches the gap from above, within (ln k + C)/k.
  double previous = 1.0;
  for (const auto& mk : ms) {
    const auto dp = decay_profile(mk, view, eval);
    const double k = static_cast<double>(mk.k());
    const double mid = dp.profile[1200];
    CHECK(mid > gap);
    CHECK(mid - gap <= (std::log(k) + dp.fitted_C) / k);
    CHECK(mid - gap < previous);
    previous = mid - gap;
    CHECK(dp.excluded == 0);
  }

  // Metric field stays below phi + ln(C k)/k and approaches phi_e.
  double dist = 1.0;
  for (const auto& mk : ms) {
    const auto f = bergman_metric_field(mk, eval);
    const double d = metric_distance(f, view);
    CHECK(d < dist);
    dist = d;
    const auto vd = bergman_volume_distance(f, view);
    CHECK(vd.mass_k == doctest::Approx(2.0).epsilon(1e-3));
  }
}

TEST_CASE("exclusion counts nodes beyond the underflow range") {
  // Single monomial z^0 at k = 4096: ln B = -k ln(1 + e^v) + const.
  const auto d = GridDomain::vbox1(-10.0, 10.0, 2001);
  const auto view = fs_view(d);
  const BergmanModel m({fs_segment(), 4096, {}, std::vector<Lattice2>{{0, 0}}});
  const auto eval = GridDomain::vbox1(-10.0, 1.0, 12);
  const auto dp = decay_profile(m, view, eval, 1.0);
  CHECK(dp.excluded > 0);
  CHECK(dp.window_nodes > 0);
  CHECK(dp.excluded + dp.window_nodes == 12);
  for (double p : dp.profile.values()) CHECK(std::isfinite(p));
}

TEST_CASE("off-diagonal concentration on the chart") {
  const auto chart = GridDomain::chart(-3.0, 3.0, 96, 96);
  const auto fs = WeightSpec::fs_chart();
  const auto env = chart_equilibrium(fs, chart);
  const auto mu = equilibrium_measure(env, eval_weight(fs, chart), fs);
  const TestFunction ring{0.0, 0.0, 1.5, 0.0};
  const TestFunction east{0.0, 0.0, 1.0, 1.0};
  const TestFunction west{0.0, std::numbers::pi, 1.0, 1.0};
  CHECK(ring(0.0, 2.0) == doctest::Approx(1.0));
  CHECK(east(0.0, 1.0) == 0.0);
  CHECK(west(0.0, -std::numbers::pi + 0.5) == doctest::Approx(std::pow(0.75, 3)));

  double previous = 1.0;
  for (long k : {8, 16, 32}) {
    const BergmanModel m({fs, k, {}, {}});
    const auto on = offdiag_concentration(m, ring, ring, chart, mu);
    const double rel = std::abs(on.value / on.oracle - 1.0);
    CHECK(on.value < on.oracle);
    CHECK(rel < previous);
    previous = rel;
    const auto off = offdiag_concentration(m, east, west, chart, mu);
    CHECK(off.oracle == 0.0);
    CHECK(off.value < 1e-3);
  }
  CHECK(previous < 0.1);

  const BergmanModel toric({fs_segment(), 4, {}, {}});
  CHECK_THROWS_AS(offdiag_concentration(toric, ring, ring, chart, mu), std::invalid_argument);
}
