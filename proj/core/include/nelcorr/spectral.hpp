#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "nelcorr/grid.hpp"

namespace nelcorr {

enum class Parity { even, odd, none };

const char* to_string(Parity p);

// V(x) = omega^2 x^2 / 2.
struct Harmonic {
  double omega;
};
// V = 0 on [-L, L], infinite outside.
struct InfiniteWell {
  double half_width;
};
// V(x) = h (x^2 - w^2)^2 / w^4 with minima at +-w, w = well_separation / 2.
struct DoubleWell {
  double barrier_height;
  double well_separation;
};
// Linear interpolation of samples; undefined outside the sample grid.
struct Tabulated {
  Grid grid;
  std::vector<double> values;
};

class Potential {
 public:
  using Kind = std::variant<Harmonic, InfiniteWell, DoubleWell, Tabulated>;

  explicit Potential(Kind kind);

  static Potential harmonic(double omega) { return Potential(Harmonic{omega}); }
  static Potential infinite_well(double half_width) { return Potential(InfiniteWell{half_width}); }
  static Potential double_well(double barrier_height, double well_separation) {
    return Potential(DoubleWell{barrier_height, well_separation});
  }
  static Potential tabulated(Grid grid, std::vector<double> values) {
    return Potential(Tabulated{std::move(grid), std::move(values)});
  }

  const Kind& kind() const { return kind_; }
  // +infinity outside an infinite well; DomainError outside a tabulated grid.
  double operator()(double x) const;
  // Mirror symmetry V(x) = V(-x); tabulated potentials are checked sample-wise.
  bool symmetric() const;
  std::optional<double> harmonic_omega() const;

 private:
  Kind kind_;
};

struct Wavefunction {
  Grid grid;
  std::vector<double> values;
  Parity parity = Parity::none;

  double norm() const;
  double max_abs() const;
  // Linear interpolation; DomainError outside the grid.
  double operator()(double x) const;
};

struct Boundary {
  enum class Kind { whole_line, dirichlet_at_nodes };
  Kind kind = Kind::whole_line;
  std::vector<double> nodes;
};

// Ordered eigenpairs on a common grid.  For node-restricted systems the
// energies are only non-decreasing (each nodal domain contributes its own
// ladder) and domain_level[i] is the index of eigenfunction i inside its
// domain's ladder; level 0 marks a domain ground state.
struct EigenSystem {
  Grid grid;
  std::vector<double> energies;
  std::vector<Wavefunction> eigenfunctions;
  Boundary boundary;
  std::vector<std::size_t> domain_level;
  std::optional<Potential> potential;

  std::size_t size() const { return energies.size(); }
};

// Default grids: [-10/sqrt(omega), 10/sqrt(omega)] with 2000 points for the
// oscillator, [-L, L] with 2001 points for the well (node at the origin).
Grid default_harmonic_grid(double omega);
Grid default_box_grid(double half_width);

// Hermite-function eigensystem sampled on the grid, E_n = (n + 1/2) omega.
// Throws DomainTruncationError when the grid misses [-8/sqrt(w), 8/sqrt(w)] or
// any requested eigenfunction has more than 1e-10 of its mass off the grid.
EigenSystem harmonic_eigensystem(double omega, std::size_t k, const Grid& grid);

// Particle in [-L, L] with Dirichlet walls, E_n = pi^2 (n+1)^2 / (8 L^2).
EigenSystem box_eigensystem(double half_width, std::size_t k, const Grid& grid);

// Second-order finite differences with Dirichlet endpoints.  Points where the
// potential is infinite are treated as walls.
EigenSystem solve_eigensystem(const Potential& potential, const Grid& grid, std::size_t k);

// Interior sign changes of f located by linear interpolation.  Samples with
// |f| below tol * max|f| carry no sign.  Crossings closer than 2h are dropped
// pairwise.
std::vector<double> find_nodes(const Wavefunction& f, double tol = 1e-9);

// Eigensystem of the Hamiltonian restricted to the nodal domains of `state`
// with Dirichlet conditions at its nodes and at the grid ends.  A single node
// at the centre of a symmetric problem yields even/odd continuations of the
// half-line eigenfunctions.
EigenSystem dirichlet_restricted_eigensystem(const Potential& potential, const Wavefunction& state,
                                             const Grid& grid, std::size_t k);

// Convenience wrapper over quadrature() for two wave functions on one grid.
double inner_product(const Wavefunction& a, const Wavefunction& b);

// Largest deviation of the Gram matrix from the identity.
double orthonormality_defect(const EigenSystem& es);

}  // namespace nelcorr
