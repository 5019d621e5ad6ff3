#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nelcorr/spectral.hpp"

namespace nelcorr {

// One product term c_s * prod_i psi_i^{k(i,s)}(x_i).
struct Term {
  double coefficient;
  std::vector<std::size_t> indices;  // eigenfunction index per cluster
};

// Stationary state of non-interacting one-dimensional clusters.  Immutable
// once built; coefficients are real and normalized.
class CompositeState {
 public:
  const std::vector<EigenSystem>& clusters() const { return clusters_; }
  const std::vector<Term>& terms() const { return terms_; }
  double energy() const { return energy_; }
  std::size_t cluster_count() const { return clusters_.size(); }

  const Wavefunction& factor(std::size_t term, std::size_t cluster) const {
    return clusters_[cluster].eigenfunctions[terms_[term].indices[cluster]];
  }
  double level_energy(std::size_t term, std::size_t cluster) const {
    return clusters_[cluster].energies[terms_[term].indices[cluster]];
  }

  // psi at one point (one coordinate per cluster), linear interpolation.
  double amplitude(std::span<const double> point) const;
  // Upper bound of |psi| from per-factor maxima.
  double amplitude_bound() const;

 private:
  friend CompositeState build_composite_state(std::vector<EigenSystem>, std::vector<Term>);
  std::vector<EigenSystem> clusters_;
  std::vector<Term> terms_;
  double energy_ = 0.0;
};

// Normalizes coefficients and checks sum_i lambda_i^{k(i,s)} = E for every term
// (tolerance 1e-6).  Throws ParameterError for malformed input and
// InconsistentStateError when the energy constraint fails.
CompositeState build_composite_state(std::vector<EigenSystem> clusters, std::vector<Term> terms);

// |psi|^2 at each point; DomainError when a coordinate leaves its cluster grid.
std::vector<double> density(const CompositeState& state, const std::vector<std::vector<double>>& points);
double density(const CompositeState& state, std::span<const double> point);

// True iff the coefficient tensor factorizes (all 2x2 minors of every
// cluster-vs-rest unfolding vanish within 1e-12).
bool is_product(const CompositeState& state);

// Single-cluster marginal of |psi|^2 sampled on that cluster's grid.
std::vector<double> marginal_density(const CompositeState& state, std::size_t cluster);

}  // namespace nelcorr
