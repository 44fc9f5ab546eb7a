#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "plurikit/mongeampere.hpp"

using namespace plurikit;

namespace {

WeightSpec double_well(double amplitude) {
  return WeightSpec::perturbed_toric(LatticePolytope::segment(-1, 1), {Bump{{0, 0}, 1.0, amplitude, 3}});
}

}  // namespace

TEST_CASE("ma_ratio basics") {
  const auto d = GridDomain::vbox1(-12.0, 12.0, 4801);
  const auto ref = eval_weight(WeightSpec::toric(LatticePolytope::segment(-1, 1)), d);
  const auto one = ma_ratio(ref, ref);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(one[i] == doctest::Approx(1.0));
  std::vector<double> aff;
  for (std::size_t i = 0; i < d.size(); ++i) aff.push_back(0.4 * d.point(i)[0] - 1.0);
  const auto zero = ma_ratio(GridField(d, aff), ref);
  // Rounding in the affine samples is amplified by 1/phi_ref'' in the tails.
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::abs(d.point(i)[0]) <= 6.0) CHECK(std::abs(zero[i]) <= 1e-6);
  }

  // Bump center: (phi_ref'' + chi'') / phi_ref''. phi_ref''(0) = 2/3, chi''(0) = -6a.
  const auto u = eval_weight(double_well(0.4), d);
  const double expect = (2.0 / 3.0 - 6.0 * 0.4) / (2.0 / 3.0);
  CHECK(ma_ratio(u, ref)[2400] == doctest::Approx(expect).epsilon(1e-3));

  std::vector<double> flat(d.size(), 1.0);
  CHECK_THROWS_AS(ma_ratio(ref, GridField(d, flat)), std::domain_error);
}

TEST_CASE("equilibrium mass of convex toric weights is the polytope volume") {
  SUBCASE("segment") {
    const auto d = GridDomain::vbox1(-20.0, 20.0, 1601);
    const auto seg = LatticePolytope::segment(0, 1);
    const auto u = eval_weight(WeightSpec::toric(seg), d);
    const auto env = toric_equilibrium(u, seg);
    const auto mu = equilibrium_measure(env, u, u);
    CHECK(mu.mass == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(mu.off_contact_mass == 0.0);
  }
  SUBCASE("tails beyond double precision are rejected") {
    const auto d = GridDomain::vbox1(-30.0, 30.0, 2401);
    const auto u = eval_weight(WeightSpec::toric(LatticePolytope::segment(0, 1)), d);
    CHECK_THROWS_AS(ma_ratio(u, u), std::domain_error);
  }
  SUBCASE("simplex") {
    const auto tri = LatticePolytope::polygon({{0, 0}, {1, 0}, {0, 1}});
    const auto d = GridDomain::vbox2({-10, -10}, {10, 10}, {201, 201});
    const auto u = eval_weight(WeightSpec::toric(tri), d);
    const auto env = toric_equilibrium(u, tri);
    CHECK_THROWS_AS(equilibrium_measure(env, u, u), std::domain_error);
    const auto mu = equilibrium_measure(env, u, WeightSpec::toric(tri));
    CHECK(mu.mass == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(mu.clamped_mass <= 1e-3);
  }
}

TEST_CASE("double-well equilibrium mass") {
  const auto d = GridDomain::vbox1(-14.0, 14.0, 28001);
  const auto seg = LatticePolytope::segment(-1, 1);
  const auto ref = eval_weight(WeightSpec::toric(seg), d);
  for (double a : {0.2, 0.4, 0.6}) {
    const auto u = eval_weight(double_well(a), d);
    const auto env = toric_equilibrium(u, seg);
    const auto mu = equilibrium_measure(env, u, ref);
    CHECK(mu.mass == doctest::Approx(2.0).epsilon(1e-2));
    CHECK(mu.off_contact_mass <= 0.01 * mu.mass);
    CHECK(mu.clamped_mass <= 1e-12);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(mu.density[i] >= 0.0);
  }
}

TEST_CASE("chart equilibrium mass") {
  const auto chart = GridDomain::chart(-3.0, 3.0, 121, 64);
  const auto fs = WeightSpec::fs_chart();
  const auto ref = eval_weight(fs, chart);
  const auto env = chart_equilibrium(fs, chart);
  const auto mu = equilibrium_measure(env, ref, ref);
  CHECK(equilibrium_measure(env, ref, fs).mass == doctest::Approx(mu.mass).epsilon(1e-3));
  // FS measure of the annulus e^{-3} <= |zeta| <= e^{3}.
  const double t_in = std::exp(-6.0) / (1 + std::exp(-6.0)), t_out = std::exp(6.0) / (1 + std::exp(6.0));
  CHECK(mu.mass == doctest::Approx(t_out - t_in).epsilon(1e-3));
}

TEST_CASE("volume report") {
  const std::vector<long> ks{4, 8, 16};
  const auto seg = volume_report(1, 1.0, 1.0, ks, {5, 9, 17});
  CHECK(seg.pass);
  CHECK(seg.rows[1].gap == doctest::Approx(1.0 / 8.0));
  const auto tri = volume_report(2, 0.5, 0.5, ks, {15, 45, 153});
  CHECK(tri.rows[2].gap == doctest::Approx((3.0 * 16 + 2) / (2.0 * 256)));
  CHECK(tri.pass);
  CHECK_FALSE(volume_report(1, 2.0, 1.9, ks, {9, 17, 33}).pass);
}
