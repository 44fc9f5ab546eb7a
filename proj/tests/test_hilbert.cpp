#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "plurikit/errors.hpp"
#include "plurikit/hilbert.hpp"
#include "plurikit/parallel.hpp"

using namespace plurikit;

namespace {

HilbertSpaceSpec fs_segment(long k) { return {WeightSpec::toric(LatticePolytope::segment(0, 1)), k, {}, {}}; }

}  // namespace

TEST_CASE("Fubini-Study segment Gram entries are Beta values") {
  const auto g = gram_matrix(fs_segment(2));
  REQUIRE(g.diagonal);
  CHECK(g.diagonal_entry(1) == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
  CHECK(g.diagonal_entry(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  for (long k : {5L, 40L}) {
    const auto gk = gram_matrix(fs_segment(k));
    for (long a = 0; a <= k; ++a) {
      const double expect = std::log(oracles::beta(a + 1.0, k - a + 1.0));
      CHECK(gk.log_diagonal[static_cast<std::size_t>(a)] == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("Fubini-Study Bergman function is constant") {
  for (long k : {2L, 17L}) {
    const BergmanModel m(fs_segment(k));
    for (double v : {-8.0, -1.0, 0.0, 0.4, 6.0}) {
      CHECK(m.bergman({v, 0.0}) == doctest::Approx(k + 1.0).epsilon(1e-9));
    }
    CHECK(m.bergman_mass() == doctest::Approx(k + 1.0).epsilon(1e-9));
  }
}

TEST_CASE("simplex Gram matches the factorial formula") {
  const long k = 6;
  HilbertSpaceSpec spec{WeightSpec::toric(LatticePolytope::polygon({{0, 0}, {1, 0}, {0, 1}})), k, {}, {}};
  const BergmanModel m(spec);
  CHECK(m.dimension() == 28);
  for (std::size_t i = 0; i < m.basis().size(); ++i) {
    const auto a = m.basis()[i];
    CHECK(m.gram().log_diagonal[i] ==
          doctest::Approx(std::log(oracles::simplex_fs_norm(a[0], a[1], k))).epsilon(1e-9));
  }
  CHECK(m.bergman({0.3, -1.2}) == doctest::Approx((k + 1.0) * (k + 2.0)).epsilon(1e-8));
}

TEST_CASE("orthonormalize") {
  SUBCASE("identity") {
    const Eigen::MatrixXcd g = Eigen::MatrixXcd::Identity(3, 3);
    const std::vector<double> d{1, 1, 1};
    const auto o = orthonormalize(g, d);
    CHECK((o.coefficients - g).norm() < 1e-14);
    CHECK(o.condition == doctest::Approx(1.0));
    CHECK_FALSE(o.eigen_fallback);
  }
  SUBCASE("diagonal Beta values") {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(3, 3);
    g(0, 0) = 1.0 / 3;
    g(1, 1) = 1.0 / 6;
    g(2, 2) = 1.0 / 3;
    const std::vector<double> d{1, 1, 1};
    const auto o = orthonormalize(g, d);
    CHECK(o.coefficients(0, 0).real() == doctest::Approx(std::sqrt(3.0)));
    CHECK(o.coefficients(1, 1).real() == doctest::Approx(std::sqrt(6.0)));
    CHECK(o.coefficients(2, 2).real() == doctest::Approx(std::sqrt(3.0)));
  }
  SUBCASE("dense Hermitian") {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(5, 5);
    const Eigen::MatrixXcd g = a * a.adjoint() + Eigen::MatrixXcd::Identity(5, 5);
    const std::vector<double> d{1, 2, 0.5, 1, 3};
    const auto o = orthonormalize(g, d);
    Eigen::VectorXd dv(5);
    for (int i = 0; i < 5; ++i) dv(i) = d[static_cast<std::size_t>(i)];
    const Eigen::MatrixXcd h = dv.asDiagonal() * g * dv.asDiagonal();
    CHECK((o.coefficients * h * o.coefficients.adjoint() - Eigen::MatrixXcd::Identity(5, 5)).norm() < 1e-10);
  }
  SUBCASE("rank deficient falls back to the eigen path") {
    Eigen::MatrixXcd v(3, 2);
    v << 1, 0, 1, 1, 0, 1;
    const Eigen::MatrixXcd g = v * v.adjoint();
    const std::vector<double> d{1, 1, 1};
    const auto o = orthonormalize(g, d);
    CHECK(o.eigen_fallback);
    CHECK(o.discarded == 1);
    CHECK((o.coefficients * g * o.coefficients.adjoint() - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-10);
  }
  SUBCASE("non-Hermitian input is rejected") {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Identity(2, 2);
    g(0, 1) = 0.5;
    const std::vector<double> d{1, 1};
    CHECK_THROWS_AS(orthonormalize(g, d), NumericalError);
  }
  SUBCASE("zero matrix is rejected") {
    const Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(2, 2);
    const std::vector<double> d{1, 1};
    CHECK_THROWS_AS(orthonormalize(g, d), NumericalError);
  }
}

TEST_CASE("chart Fubini-Study model") {
  const long k = 8;
  const BergmanModel m({WeightSpec::fs_chart(), k, {}, {}});
  CHECK(m.dimension() == 9);
  for (std::size_t j = 0; j <= static_cast<std::size_t>(k); ++j) {
    const double expect = oracles::beta(j + 1.0, k - j + 1.0);
    CHECK(m.gram().dense(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)).real() ==
          doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(m.gram().dense.cwiseAbs().maxCoeff() == doctest::Approx(m.gram().dense.diagonal().cwiseAbs().maxCoeff()));
  for (Vec2 z : {Vec2{0.0, 0.0}, Vec2{0.3, -0.8}, Vec2{4.0, 1.0}}) {
    CHECK(m.bergman(z) == doctest::Approx(k + 1.0).epsilon(1e-9));
  }
  CHECK(m.reproducing_integral({0.2, 0.1}) == doctest::Approx(m.bergman({0.2, 0.1})).epsilon(1e-8));
  CHECK(bergman_kernel_norm(m, {0.5, 0.0}, {0.5, 0.0}) == doctest::Approx(std::pow(k + 1.0, 2)).epsilon(1e-9));
}

TEST_CASE("chart model with an off-center bump reproduces itself") {
  const long k = 10;
  const BergmanModel m({WeightSpec::perturbed_chart({Bump{{0.6, 0.2}, 0.5, 0.3, 3}}), k, {}, {}});
  const Vec2 x{0.5, 0.3};
  CHECK(m.reproducing_integral(x) == doctest::Approx(m.bergman(x)).epsilon(1e-8));
  CHECK(m.bergman_mass() == doctest::Approx(static_cast<double>(m.retained())).epsilon(1e-8));
}

TEST_CASE("toric reproducing identity with a bump") {
  HilbertSpaceSpec spec{WeightSpec::perturbed_toric(LatticePolytope::segment(-1, 1), {Bump{{0, 0}, 1.0, 0.4, 3}}), 12,
                        {}, {}};
  const BergmanModel m(spec);
  CHECK(m.bergman_mass() == doctest::Approx(25.0).epsilon(1e-9));
  CHECK(m.reproducing_integral({0.3, 0}) == doctest::Approx(m.bergman({0.3, 0})).epsilon(1e-9));
}

TEST_CASE("results do not depend on the worker count") {
  const auto spec = fs_segment(30);
  set_workers(1);
  const auto a = gram_matrix(spec);
  set_workers(3);
  const auto b = gram_matrix(spec);
  set_workers(1);
  CHECK(a.log_diagonal == b.log_diagonal);
}

TEST_CASE("explicit basis subset and invalid k") {
  HilbertSpaceSpec spec = fs_segment(6);
  spec.basis = std::vector<Lattice2>{{2, 0}, {3, 0}};
  const BergmanModel m(spec);
  CHECK(m.dimension() == 2);
  HilbertSpaceSpec bad = fs_segment(0);
  CHECK_THROWS(BergmanModel(bad));
}
