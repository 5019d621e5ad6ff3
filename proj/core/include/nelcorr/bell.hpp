#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nelcorr/observable.hpp"
#include "nelcorr/spectral.hpp"

namespace nelcorr {

using Matrix2 = std::array<std::array<double, 2>, 2>;

struct ChshTimes {
  double t1;
  double t2;
  double s1;
  double s2;
};

// t1 = 0, t2 = pi/(2w), s1 = pi/(4w), s2 = 3pi/(4w).
ChshTimes standard_times(double omega);

// <psi_0, f psi_1> by quadrature.  Requires psi_0 even, psi_1 odd and f odd on
// a symmetric grid, and checks that both diagonal elements vanish within 1e-8;
// otherwise ParameterError.
double alpha(const EigenSystem& es, const Observable& f);

// E[i][j] = -alpha^2 cos(omega (t_i - s_j)) for the singlet-like two-level state.
Matrix2 chsh_correlations(double alpha, double omega, const ChshTimes& times);

// S = E11 + E22 + E21 - E12.  ParameterError for entries outside [-1, 1].
double chsh_value(const Matrix2& e);

// Joint distribution over (sigma1, sigma2, tau1, tau2) in {-1, 1}^4.  Atom k
// has sigma1 = bit 0, sigma2 = bit 1, tau1 = bit 2, tau2 = bit 3 (set = +1).
struct ClassicalModel {
  std::array<double, 16> atoms{};

  // Non-negative and summing to 1 within 1e-12.
  bool valid() const;
  Matrix2 correlations() const;           // E[i][j] = <sigma_i tau_j>
  std::array<double, 4> marginals() const;  // <sigma1>, <sigma2>, <tau1>, <tau2>
};

// One CHSH-type inequality s11 E11 + s12 E12 + s21 E21 + s22 E22 <= 2 with an
// odd number of negative signs.
struct ChshInequality {
  std::array<std::array<int, 2>, 2> signs;
  double value;
};

// All eight inequalities evaluated on E.
std::vector<ChshInequality> chsh_inequalities(const Matrix2& e);

struct Realizability {
  bool feasible;
  std::optional<ClassicalModel> model;       // witness when feasible
  std::optional<ChshInequality> violated;    // most violated inequality, if any
  bool inequalities_hold;                    // all eight <= 2 + 1e-12
};

// Exact phase-one simplex over the 16 atoms (Bland's rule, pivot tolerance
// 1e-12) with the four marginals and four correlations as equalities.
// ParameterError for entries outside [-1, 1].
Realizability classical_realizability(const Matrix2& e, const std::array<double, 4>& marginals);

struct ChshReport {
  double alpha;
  double omega;
  ChshTimes times;
  Matrix2 correlations;
  std::array<double, 4> marginals;
  double S;
  bool classical_feasible;
  std::optional<ChshInequality> violated;
};

// alpha from quadrature, omega = E_1 - E_0, standard times unless given.
ChshReport chsh_report(const EigenSystem& es, const Observable& f,
                       const std::optional<ChshTimes>& times = std::nullopt);

// Finite distribution of one arrangement of mutually compatible observables.
struct Arrangement {
  std::vector<std::string> observables;
  std::vector<double> probabilities;  // over the arrangement's joint outcomes
};

struct ProductModel {
  std::vector<std::size_t> shape;       // outcome count per arrangement
  std::vector<double> probabilities;    // row-major, first arrangement slowest
  double max_marginal_error = 0.0;
};

// Product measure over pairwise disjoint arrangements; every marginal is
// checked against its input within 1e-12.  Throws TransitivityError when two
// arrangements share an observable and ParameterError for invalid distributions.
ProductModel product_classical_model(const std::vector<Arrangement>& arrangements);

}  // namespace nelcorr
