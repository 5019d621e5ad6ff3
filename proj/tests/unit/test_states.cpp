#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "nelcorr/error.hpp"
#include "nelcorr/states.hpp"
#include "unit/fixtures.hpp"

using namespace nelcorr;

TEST_CASE("build_composite_state validates the energy constraint") {
  const auto s = fixtures::exchange_state();
  CHECK(s.energy() == doctest::Approx(2.0));
  CHECK(s.terms()[0].coefficient == doctest::Approx(1 / std::sqrt(2.0)));

  const auto es = fixtures::oscillator();
  const auto g = build_composite_state({es, es}, {{1.0, {0, 0}}});
  CHECK(g.energy() == doctest::Approx(1.0));

  const double c = 1 / std::sqrt(2.0);
  CHECK_THROWS_AS(build_composite_state({es, es}, {{c, {0, 1}}, {c, {2, 0}}}), InconsistentStateError);
  CHECK_THROWS_AS(build_composite_state({es, es}, {{c, {0, 1}}, {c, {0, 1}}}), ParameterError);
  CHECK_THROWS_AS(build_composite_state({es, es}, {}), ParameterError);
  CHECK_THROWS_AS(build_composite_state({es, es}, {{0.0, {0, 0}}}), ParameterError);
  CHECK_THROWS_AS(build_composite_state({es, es}, {{1.0, {0, 9}}}), ParameterError);
}

TEST_CASE("coefficients are normalized") {
  const auto es = fixtures::oscillator();
  const auto s = build_composite_state({es, es}, {{3.0, {0, 1}}, {4.0, {1, 0}}});
  CHECK(s.terms()[0].coefficient == doctest::Approx(0.6));
  CHECK(s.terms()[1].coefficient == doctest::Approx(0.8));
}

TEST_CASE("density examples") {
  const auto g = fixtures::ground_product();
  // (omega / pi)^{1/2} per factor, squared twice.
  CHECK(density(g, std::vector<double>{0.0, 0.0}) == doctest::Approx(1 / std::numbers::pi).epsilon(1e-4));

  const auto s = fixtures::exchange_state();
  const auto& p0 = s.clusters()[0].eigenfunctions[0];
  const auto& p1 = s.clusters()[0].eigenfunctions[1];
  for (double x : {-1.1, 0.3, 2.4}) {
    for (double y : {-0.7, 0.9}) {
      const double direct = (p0(x) * p1(y) + p1(x) * p0(y)) / std::sqrt(2.0);
      CHECK(density(s, std::vector<double>{x, y}) == doctest::Approx(direct * direct).epsilon(1e-12));
    }
  }
  // The antisymmetric combination vanishes on the diagonal.
  const auto a = fixtures::exchange_state(1.0, -1.0);
  CHECK(std::abs(density(a, std::vector<double>{0.8, 0.8})) < 1e-30);
  CHECK_THROWS_AS(density(s, std::vector<double>{0.0, 40.0}), DomainError);
}

TEST_CASE("exchange symmetry and marginal normalization on a 401x401 grid") {
  const auto es = harmonic_eigensystem(1.0, 2, Grid(-9.0, 9.0, 401));
  const double c = 1 / std::sqrt(2.0);
  const auto s = build_composite_state({es, es}, {{c, {0, 1}}, {c, {1, 0}}});
  const Grid& g = es.grid;
  std::vector<double> rows(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<double> row(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      row[j] = density(s, std::vector<double>{g[i], g[j]});
      const double mirrored = density(s, std::vector<double>{g[j], g[i]});
      if (std::abs(row[j] - mirrored) > 1e-12) FAIL("density not exchange symmetric");
    }
    rows[i] = simpson(row, g.spacing());
  }
  CHECK(std::abs(simpson(rows, g.spacing()) - 1.0) < 1e-6);
  const auto m = marginal_density(s, 0);
  CHECK(std::abs(simpson(m, g.spacing()) - 1.0) < 1e-10);
  CHECK(m[200] == doctest::Approx(0.5 * es.eigenfunctions[0].values[200] * es.eigenfunctions[0].values[200]));
}

TEST_CASE("is_product") {
  CHECK(is_product(fixtures::ground_product()));
  CHECK_FALSE(is_product(fixtures::exchange_state()));
  CHECK_FALSE(is_product(fixtures::box_singlet()));
  // A non-trivial factorizable combination requires degenerate levels; with
  // non-degenerate clusters it is rejected before is_product is reached.
  const auto es = fixtures::oscillator();
  CHECK_THROWS_AS(build_composite_state({es, es}, {{0.6, {0, 0}}, {0.8, {0, 1}}}), InconsistentStateError);
}

TEST_CASE("is_product on synthetic degenerate clusters") {
  // Rank-1 tensor c_ab = u_a v_b over artificially degenerate levels.
  auto es = fixtures::oscillator();
  const double e = 1.0 / 2.0;
  auto flat = es;
  flat.energies = {e, e, e, e};  // synthetic degenerate cluster
  const auto s = build_composite_state({flat, flat}, {{0.36, {0, 0}}, {0.48, {0, 1}}, {0.48, {1, 0}}, {0.64, {1, 1}}});
  CHECK(is_product(s));
  const auto t = build_composite_state({flat, flat}, {{0.5, {0, 0}}, {0.5, {1, 1}}});
  CHECK_FALSE(is_product(t));
}
