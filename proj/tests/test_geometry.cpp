#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "plurikit/geometry.hpp"

using namespace plurikit;

TEST_CASE("segment and polygon construction") {
  CHECK_THROWS_AS(LatticePolytope::segment(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(LatticePolytope::polygon({{0, 0}, {1, 1}, {2, 2}}), std::invalid_argument);
  const auto tri = LatticePolytope::polygon({{0, 0}, {1, 0}, {0, 1}, {0, 0}});
  CHECK(tri.vertices().size() == 3);
  CHECK(lattice_volume(tri) == doctest::Approx(0.5));
  const auto sq = LatticePolytope::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {1, 0}});
  CHECK(sq.vertices().size() == 4);
  CHECK(lattice_volume(sq) == doctest::Approx(1.0));
}

TEST_CASE("lattice point counts") {
  const auto seg = LatticePolytope::segment(-1, 1);
  CHECK(lattice_points(seg, 5).size() == 11);
  const auto tri = LatticePolytope::polygon({{0, 0}, {1, 0}, {0, 1}});
  for (long k : {1, 2, 7, 20}) {
    CHECK(lattice_points(tri, k).size() == static_cast<std::size_t>((k + 1) * (k + 2) / 2));
  }
  const auto sq = LatticePolytope::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CHECK(lattice_points(sq, 4).size() == 25);
  CHECK(tri.contains_scaled({3, 4}, 7));
  CHECK_FALSE(tri.contains_scaled({4, 4}, 7));
}

TEST_CASE("boundary distance") {
  const auto tri = LatticePolytope::polygon({{0, 0}, {1, 0}, {0, 1}});
  CHECK(tri.signed_boundary_distance({0.25, 0.25}) == doctest::Approx(0.25));
  CHECK(tri.signed_boundary_distance({-0.5, 0.2}) == doctest::Approx(-0.5));
  CHECK(tri.contains({0.5, 0.5}, 1e-12));
  CHECK_FALSE(tri.contains({0.6, 0.5}, 1e-12));
}

TEST_CASE("toric potential of the segment") {
  const auto w = WeightSpec::toric(LatticePolytope::segment(0, 1));
  for (double v : {-30.0, -2.0, 0.0, 1.5, 40.0}) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    CHECK(w.value({v, 0}) == doctest::Approx(std::log1p(std::exp(v))).epsilon(1e-14));
    CHECK(w.gradient({v, 0})[0] == doctest::Approx(s).epsilon(1e-14));
    CHECK(w.hessian_det({v, 0}) == doctest::Approx(s * (1.0 - s)).epsilon(1e-13));
  }
}

TEST_CASE("tail determinant keeps relative precision") {
  const auto w = WeightSpec::toric(LatticePolytope::polygon({{0, 0}, {1, 0}, {0, 1}}));
  // det Hess ln(1 + e^x + e^y) = e^{x+y} / (1 + e^x + e^y)^3.
  for (Vec2 v : {Vec2{-40.0, -35.0}, Vec2{30.0, -20.0}, Vec2{0.3, 0.7}, Vec2{25.0, 25.0}}) {
    const double l = std::log(1.0 + std::exp(v[0]) + std::exp(v[1]));
    const double expect = std::exp(v[0] + v[1] - 3.0 * l);
    CHECK(w.reference_hessian_det(v) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("bump derivatives match finite differences") {
  const Bump b{{0.2, -0.1}, 0.8, 0.4, 3};
  const Vec2 x{0.35, 0.05};
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    Vec2 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    CHECK(b.gradient(x, 2)[i] == doctest::Approx((b.value(xp, 2) - b.value(xm, 2)) / (2 * h)).epsilon(1e-8));
    for (int j = 0; j < 2; ++j) {
      const double fd = (b.gradient(xp, 2)[j] - b.gradient(xm, 2)[j]) / (2 * h);
      CHECK(b.hessian(x, 2)(i, j) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  CHECK(b.value({5.0, 5.0}, 2) == 0.0);
  CHECK_THROWS(WeightSpec::perturbed_toric(LatticePolytope::segment(0, 1), {Bump{{0, 0}, 1.0, 0.1, 2}}));
}

TEST_CASE("chart weight") {
  const auto fs = WeightSpec::fs_chart();
  CHECK(fs.value({1.0, 1.0}) == doctest::Approx(std::log(3.0)));
  CHECK(fs.laplacian({0.0, 0.0}) == doctest::Approx(4.0));
  CHECK(fs.s1_invariant());
  const auto off = WeightSpec::perturbed_chart({Bump{{0.5, 0.0}, 0.3, 0.2, 3}});
  CHECK_FALSE(off.s1_invariant());
}

TEST_CASE("grid geometry") {
  const auto g = GridDomain::vbox1(-1.0, 1.0, 5);
  CHECK(g.spacing(0) == doctest::Approx(0.5));
  CHECK(g.point(4)[0] == 1.0);
  const auto c = GridDomain::chart(-1.0, 1.0, 3, 8);
  CHECK(c.periodic(1));
  CHECK(c.point(c.index(2, 2))[1] == doctest::Approx(std::exp(1.0)));
  double total = 0.0;
  for (double w : trapezoid_weights(c)) total += w;
  CHECK(total == doctest::Approx(2.0 * 2.0 * M_PI));
  CHECK_THROWS_AS(GridField(g, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(GridField(g, {1, 2, NAN, 4, 5}), std::invalid_argument);
}

TEST_CASE("finite-difference Hessian") {
  SUBCASE("exact on cubics in the interior") {
    const auto g = GridDomain::vbox1(-1.0, 2.0, 31);
    std::vector<double> u;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = g.point(i)[0];
      u.push_back(v * v * v - 2 * v * v + v);
    }
    const auto h = hessian_field(GridField(g, u));
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      CHECK(h.det[i] == doctest::Approx(6 * g.point(i)[0] - 4).epsilon(1e-9));
      CHECK(h.trusted[i] == 1);
    }
    CHECK(h.trusted[0] == 0);
  }
  SUBCASE("second-order convergence on a quartic and a sinusoid") {
    auto err = [](std::size_t n, auto f, auto f2) {
      const auto g = GridDomain::vbox1(-1.0, 1.0, n);
      std::vector<double> u;
      for (std::size_t i = 0; i < g.size(); ++i) u.push_back(f(g.point(i)[0]));
      const auto h = hessian_field(GridField(g, u));
      double e = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (h.trusted[i]) e = std::max(e, std::abs(h.det[i] - f2(g.point(i)[0])));
      }
      return e;
    };
    auto q = [](double v) { return v * v * v * v; };
    auto q2 = [](double v) { return 12 * v * v; };
    auto s = [](double v) { return std::sin(3 * v); };
    auto s2 = [](double v) { return -9 * std::sin(3 * v); };
    CHECK(err(41, q, q2) / err(81, q, q2) >= 3.5);
    CHECK(err(41, s, s2) / err(81, s, s2) >= 3.5);
  }
  SUBCASE("2-D determinant and smallest eigenvalue") {
    const auto g = GridDomain::vbox2({-1, -1}, {1, 1}, {21, 21});
    std::vector<double> u;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto p = g.point(i);
      u.push_back(2 * p[0] * p[0] + p[0] * p[1] + p[1] * p[1]);
    }
    const auto h = hessian_field(GridField(g, u));
    // Hessian [[4, 1], [1, 2]].
    const std::size_t c = g.index(10, 10);
    CHECK(h.det[c] == doctest::Approx(7.0));
    CHECK(h.eigmin[c] == doctest::Approx(3.0 - std::sqrt(2.0)));
  }
}

TEST_CASE("log-polar Laplacian") {
  const auto g = GridDomain::chart(-1.0, 1.0, 81, 64);
  // |zeta|^2 = e^{2s}: Laplacian in (s, theta) is 4 e^{2s}.
  std::vector<double> u;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto z = g.point(i);
    u.push_back(z[0] * z[0] + z[1] * z[1]);
  }
  const auto l = laplacian_field(GridField(g, u));
  for (std::size_t i = 1; i + 1 < g.count[0]; ++i) {
    const double s = g.coord(0, i);
    CHECK(l.laplacian[g.index(i, 3)] == doctest::Approx(4 * std::exp(2 * s)).epsilon(1e-3));
  }
}
