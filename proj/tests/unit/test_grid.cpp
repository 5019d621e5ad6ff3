#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "nelcorr/error.hpp"
#include "nelcorr/grid.hpp"

using namespace nelcorr;

TEST_CASE("grid spacing and invariants") {
  const Grid g(-1.0, 1.0, 5);
  CHECK(g.spacing() == doctest::Approx(0.5));
  CHECK(g[4] == doctest::Approx(1.0));
  CHECK(g.symmetric());
  CHECK(g.cell(1.0) == 3);
  CHECK(g.cell(-7.0) == 0);
  CHECK_THROWS_AS(Grid(0.0, 1.0, 2), ParameterError);
  CHECK_THROWS_AS(Grid(1.0, 1.0, 10), ParameterError);
}

TEST_CASE("simpson is exact for cubics with either interval parity") {
  for (std::size_t n : {5u, 6u, 7u, 10u, 4u}) {
    const Grid g(0.0, 2.0, n);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = g[i] * g[i] * g[i] - g[i];
    CHECK(simpson(f, g.spacing()) == doctest::Approx(2.0).epsilon(1e-13));
  }
}

TEST_CASE("quadrature rejects mismatched samples") {
  const Grid g(0.0, 1.0, 11);
  std::vector<double> f(11, 1.0), bad(10, 1.0);
  CHECK(quadrature(f, f, g) == doctest::Approx(1.0));
  CHECK_THROWS_AS(quadrature(f, bad, g), ParameterError);
}

TEST_CASE("cumulative integral ends at the simpson value") {
  const Grid g(0.0, std::numbers::pi, 201);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(g[i]);
  const auto c = cumulative_integral(f, g.spacing());
  CHECK(c.back() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(c[100] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("hermite interpolation and derivative samples") {
  const Grid g(-2.0, 2.0, 401);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::exp(-g[i] * g[i]);
  const auto df = derivative_samples(f, g.spacing());
  CHECK(df[200] == doctest::Approx(0.0));
  CHECK(df[300] == doctest::Approx(-2.0 * std::exp(-1.0)).epsilon(1e-9));
  const auto v = interpolate_hermite(f, df, g, 0.4567);
  CHECK(v.value == doctest::Approx(std::exp(-0.4567 * 0.4567)).epsilon(1e-9));
  CHECK(v.derivative == doctest::Approx(-2 * 0.4567 * std::exp(-0.4567 * 0.4567)).epsilon(1e-6));
  CHECK_THROWS_AS(interpolate_linear(f, g, 2.5), DomainError);
}
