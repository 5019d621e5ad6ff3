#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "nelcorr/error.hpp"
#include "nelcorr/spectral.hpp"

using namespace nelcorr;
using std::numbers::pi;

namespace {

// Number of sign changes among samples above the node tolerance.
std::size_t sign_changes(const Wavefunction& f) {
  const double thr = 1e-9 * f.max_abs();
  std::size_t count = 0;
  int last = 0;
  for (double v : f.values) {
    if (std::abs(v) <= thr) continue;
    const int s = v > 0 ? 1 : -1;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

}  // namespace

TEST_CASE("harmonic eigensystem: analytic energies and psi_1") {
  const Grid g = default_harmonic_grid(1.0);
  const auto es = harmonic_eigensystem(1.0, 2, g);
  CHECK(es.energies[0] == 0.5);
  CHECK(es.energies[1] == 1.5);
  CHECK(es.eigenfunctions[1].parity == Parity::odd);
  const double c = std::pow(4.0 / pi, 0.25);
  for (double x : {-1.3, 0.2, 2.0}) {
    CHECK(es.eigenfunctions[1](x) == doctest::Approx(c * x * std::exp(-x * x / 2)).epsilon(1e-4));
  }
  CHECK(orthonormality_defect(es) < 1e-8);
}

TEST_CASE("harmonic ground-state second moment matches the Gaussian oracle") {
  // <x^2> = 1/(2 omega) for omega = 2.
  const double omega = 2.0;
  const Grid g = default_harmonic_grid(omega);
  const auto es = harmonic_eigensystem(omega, 1, g);
  std::vector<double> x2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) x2[i] = g[i] * g[i];
  const auto& psi = es.eigenfunctions[0].values;
  CHECK(quadrature(psi, psi, g, std::span<const double>(x2)) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("harmonic eigensystem rejects truncated grids") {
  CHECK_THROWS_AS(harmonic_eigensystem(1.0, 2, Grid(-5.0, 5.0, 500)), DomainTruncationError);
  // Wide enough span but a high level leaks past the edge.
  CHECK_THROWS_AS(harmonic_eigensystem(1.0, 40, Grid(-8.0, 8.0, 1600)), DomainTruncationError);
}

TEST_CASE("box eigensystem") {
  const Grid g = default_box_grid(1.0);
  const auto es = box_eigensystem(1.0, 2, g);
  CHECK(es.energies[0] == doctest::Approx(pi * pi / 8));
  CHECK(es.energies[1] == doctest::Approx(pi * pi / 2));
  CHECK(es.eigenfunctions[0].parity == Parity::even);
  CHECK(es.eigenfunctions[1].parity == Parity::odd);
  CHECK(es.eigenfunctions[0](0.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(box_eigensystem(1.0, 1000, g), ParameterError);
}

TEST_CASE("finite-difference solver reproduces the oscillator ladder") {
  const Grid g(-10.0, 10.0, 2000);
  const auto es = solve_eigensystem(Potential::harmonic(1.0), g, 4);
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(std::abs(es.energies[n] - (n + 0.5)) < 1e-4);
  }
  CHECK(orthonormality_defect(es) < 1e-6);
  CHECK(es.eigenfunctions[0].parity == Parity::even);
  CHECK(es.eigenfunctions[3].parity == Parity::odd);
}

TEST_CASE("finite-difference box matches the analytic well") {
  const Grid g(-1.0, 1.0, 2001);
  const Potential flat = Potential::tabulated(g, std::vector<double>(g.size(), 0.0));
  const auto es = solve_eigensystem(flat, g, 2);
  CHECK(std::abs(es.energies[0] - pi * pi / 8) < 1e-3);
  CHECK(std::abs(es.energies[1] - pi * pi / 2) < 1e-3);
  // Infinite-well potential on a wider grid behaves the same.
  const auto wide = solve_eigensystem(Potential::infinite_well(1.0), Grid(-1.5, 1.5, 3001), 2);
  CHECK(std::abs(wide.energies[0] - pi * pi / 8) < 1e-2);
}

TEST_CASE("solver parameter errors") {
  const Grid g(-1.0, 1.0, 11);
  CHECK_THROWS_AS(solve_eigensystem(Potential::harmonic(1.0), g, 10), ParameterError);
  CHECK_THROWS_AS(solve_eigensystem(Potential::harmonic(1.0), g, 0), ParameterError);
  CHECK_THROWS_AS(Potential::harmonic(-1.0), ParameterError);
  CHECK_THROWS_AS(Potential::infinite_well(0.0), ParameterError);
}

TEST_CASE("second-order convergence under grid refinement") {
  const auto coarse = solve_eigensystem(Potential::harmonic(1.0), Grid(-10, 10, 1001), 3);
  const auto fine = solve_eigensystem(Potential::harmonic(1.0), Grid(-10, 10, 2001), 3);
  for (std::size_t n = 0; n < 3; ++n) {
    const double e_coarse = std::abs(coarse.energies[n] - (n + 0.5));
    const double e_fine = std::abs(fine.energies[n] - (n + 0.5));
    CHECK(e_fine < e_coarse / 3.0);
    CHECK(e_fine > e_coarse / 5.0);
  }
}

TEST_CASE("Sturm oscillation: eigenfunction n has n nodes") {
  const auto es = solve_eigensystem(Potential::harmonic(1.0), Grid(-10, 10, 2000), 7);
  const auto dw = solve_eigensystem(Potential::double_well(4.0, 3.0), Grid(-6, 6, 1500), 7);
  for (std::size_t n = 0; n < 7; ++n) {
    CHECK(sign_changes(es.eigenfunctions[n]) == n);
    CHECK(find_nodes(es.eigenfunctions[n]).size() == n);
    CHECK(sign_changes(dw.eigenfunctions[n]) == n);
  }
}

TEST_CASE("find_nodes on oscillator states") {
  const Grid g = default_harmonic_grid(1.0);
  const auto es = harmonic_eigensystem(1.0, 3, g);
  CHECK(find_nodes(es.eigenfunctions[0]).empty());
  const auto n1 = find_nodes(es.eigenfunctions[1]);
  REQUIRE(n1.size() == 1);
  CHECK(std::abs(n1[0]) < g.spacing());
  // Roots of H_2(x) = 4x^2 - 2.
  const auto n2 = find_nodes(es.eigenfunctions[2]);
  REQUIRE(n2.size() == 2);
  CHECK(std::abs(n2[0] + 1 / std::sqrt(2.0)) < g.spacing());
  CHECK(std::abs(n2[1] - 1 / std::sqrt(2.0)) < g.spacing());
}

TEST_CASE("Dirichlet restriction at the node of psi_1 doubles the odd levels") {
  const Grid g = default_harmonic_grid(1.0);
  const auto es = harmonic_eigensystem(1.0, 2, g);
  const Potential v = Potential::harmonic(1.0);
  const auto r = dirichlet_restricted_eigensystem(v, es.eigenfunctions[1], g, 4);
  REQUIRE(r.size() == 4);
  const double expected[] = {1.5, 1.5, 3.5, 3.5};
  for (std::size_t n = 0; n < 4; ++n) CHECK(std::abs(r.energies[n] - expected[n]) < 1e-3);
  CHECK(r.boundary.kind == Boundary::Kind::dirichlet_at_nodes);
  CHECK(r.eigenfunctions[0].parity == Parity::even);
  CHECK(r.eigenfunctions[1].parity == Parity::odd);
  CHECK(r.domain_level[0] == 0);
  CHECK(r.domain_level[2] == 1);
  CHECK(orthonormality_defect(r) < 1e-6);
  // Even-sector ground function is |psi_1|.
  std::vector<double> diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    diff[i] = r.eigenfunctions[0].values[i] - std::abs(es.eigenfunctions[1].values[i]);
  }
  CHECK(std::sqrt(quadrature(diff, diff, g)) < 1e-4);
}

TEST_CASE("Dirichlet restriction without nodes equals the unrestricted spectrum") {
  const Grid g = default_harmonic_grid(1.0);
  const auto es = harmonic_eigensystem(1.0, 1, g);
  const Potential v = Potential::harmonic(1.0);
  const auto r = dirichlet_restricted_eigensystem(v, es.eigenfunctions[0], g, 4);
  const auto u = solve_eigensystem(v, g, 4);
  for (std::size_t n = 0; n < 4; ++n) CHECK(r.energies[n] == doctest::Approx(u.energies[n]));
}

TEST_CASE("Dirichlet restriction with off-centre nodes uses per-domain ladders") {
  const Grid g(-10.0, 10.0, 2000);
  const auto es = harmonic_eigensystem(1.0, 3, g);
  const auto r = dirichlet_restricted_eigensystem(Potential::harmonic(1.0), es.eigenfunctions[2], g, 6);
  // Three nodal domains, each with ground energy E_2 = 2.5.
  std::size_t grounds = 0;
  for (std::size_t n = 0; n < r.size(); ++n) {
    if (r.domain_level[n] == 0) {
      ++grounds;
      CHECK(std::abs(r.energies[n] - 2.5) < 2e-3);
    }
  }
  CHECK(grounds == 3);
  CHECK(orthonormality_defect(r) < 1e-6);
}

TEST_CASE("quadrature examples") {
  const Grid g = default_harmonic_grid(1.0);
  const auto es = harmonic_eigensystem(1.0, 2, g);
  const auto& p0 = es.eigenfunctions[0].values;
  const auto& p1 = es.eigenfunctions[1].values;
  CHECK(std::abs(quadrature(p0, p0, g) - 1.0) < 1e-10);
  CHECK(std::abs(quadrature(p0, p1, g)) < 1e-10);

  // sign(x) * psi_0 psi_1 on the unit box; oracle from the antiderivative of
  // cos(pi x / 2) sin(pi x): 2 * int_0^1 = 8 / (3 pi).
  const Grid b = default_box_grid(1.0);
  const auto box = box_eigensystem(1.0, 2, b);
  std::vector<double> sign(b.size()), prod(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    sign[i] = b[i] > 0 ? 1.0 : (b[i] < 0 ? -1.0 : 0.0);
    prod[i] = box.eigenfunctions[0].values[i] * box.eigenfunctions[1].values[i];
  }
  CHECK(std::abs(std::abs(quadrature(sign, prod, b)) - 8 / (3 * pi)) < 1e-8);
}
