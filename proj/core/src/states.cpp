#include "nelcorr/states.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "nelcorr/error.hpp"

namespace nelcorr {

CompositeState build_composite_state(std::vector<EigenSystem> clusters, std::vector<Term> terms) {
  if (clusters.empty()) throw ParameterError("composite state needs at least one cluster");
  if (terms.empty()) throw ParameterError("composite state needs at least one term");
  double norm2 = 0.0;
  std::set<std::vector<std::size_t>> seen;
  for (const auto& t : terms) {
    if (!std::isfinite(t.coefficient)) throw ParameterError("term coefficient is not finite");
    if (t.indices.size() != clusters.size()) {
      throw ParameterError("term has " + std::to_string(t.indices.size()) + " indices for " +
                           std::to_string(clusters.size()) + " clusters");
    }
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (t.indices[i] >= clusters[i].size()) {
        throw ParameterError("index " + std::to_string(t.indices[i]) + " not available in cluster " +
                             std::to_string(i) + " (" + std::to_string(clusters[i].size()) +
                             " levels)");
      }
    }
    if (!seen.insert(t.indices).second) throw ParameterError("duplicate index tuple in state terms");
    norm2 += t.coefficient * t.coefficient;
  }
  if (!(norm2 > 0.0)) throw ParameterError("state coefficients are all zero");
  const double scale = 1.0 / std::sqrt(norm2);
  for (auto& t : terms) t.coefficient *= scale;

  CompositeState s;
  s.clusters_ = std::move(clusters);
  s.terms_ = std::move(terms);
  auto term_energy = [&](const Term& t) {
    double e = 0.0;
    for (std::size_t i = 0; i < s.clusters_.size(); ++i) e += s.clusters_[i].energies[t.indices[i]];
    return e;
  };
  s.energy_ = term_energy(s.terms_.front());
  for (const auto& t : s.terms_) {
    const double e = term_energy(t);
    if (std::abs(e - s.energy_) > 1e-6) {
      throw InconsistentStateError("term energies differ: " + std::to_string(e) + " vs " +
                                   std::to_string(s.energy_) + "; not an eigenstate");
    }
  }
  return s;
}

double CompositeState::amplitude(std::span<const double> point) const {
  if (point.size() != clusters_.size()) {
    throw ParameterError("point dimension does not match cluster count");
  }
  double psi = 0.0;
  for (std::size_t s = 0; s < terms_.size(); ++s) {
    double prod = terms_[s].coefficient;
    for (std::size_t i = 0; i < clusters_.size(); ++i) prod *= factor(s, i)(point[i]);
    psi += prod;
  }
  return psi;
}

double CompositeState::amplitude_bound() const {
  double bound = 0.0;
  for (std::size_t s = 0; s < terms_.size(); ++s) {
    double prod = std::abs(terms_[s].coefficient);
    for (std::size_t i = 0; i < clusters_.size(); ++i) prod *= factor(s, i).max_abs();
    bound += prod;
  }
  return bound;
}

double density(const CompositeState& state, std::span<const double> point) {
  const double psi = state.amplitude(point);
  return psi * psi;
}

std::vector<double> density(const CompositeState& state,
                            const std::vector<std::vector<double>>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(density(state, p));
  return out;
}

bool is_product(const CompositeState& state) {
  const auto& terms = state.terms();
  if (terms.size() == 1) return true;
  const std::size_t n = state.cluster_count();
  for (std::size_t i = 0; i < n; ++i) {
    // Unfold: row = index in cluster i, column = remaining indices.
    std::map<std::size_t, std::map<std::vector<std::size_t>, double>> m;
    std::set<std::vector<std::size_t>> columns;
    for (const auto& t : terms) {
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) rest.push_back(t.indices[j]);
      }
      m[t.indices[i]][rest] = t.coefficient;
      columns.insert(rest);
    }
    auto entry = [&](std::size_t row, const std::vector<std::size_t>& col) {
      const auto& r = m[row];
      const auto it = r.find(col);
      return it == r.end() ? 0.0 : it->second;
    };
    std::vector<std::size_t> rows;
    for (const auto& [r, _] : m) rows.push_back(r);
    const std::vector<std::vector<std::size_t>> cols(columns.begin(), columns.end());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
          for (std::size_t d = c + 1; d < cols.size(); ++d) {
            const double minor = entry(rows[a], cols[c]) * entry(rows[b], cols[d]) -
                                 entry(rows[a], cols[d]) * entry(rows[b], cols[c]);
            if (std::abs(minor) > 1e-12) return false;
          }
        }
      }
    }
  }
  return true;
}

std::vector<double> marginal_density(const CompositeState& state, std::size_t cluster) {
  if (cluster >= state.cluster_count()) throw ParameterError("cluster index out of range");
  const auto& terms = state.terms();
  const std::size_t n = state.cluster_count();
  const Grid& grid = state.clusters()[cluster].grid;
  std::vector<double> rho(grid.size(), 0.0);
  for (std::size_t s = 0; s < terms.size(); ++s) {
    for (std::size_t p = 0; p < terms.size(); ++p) {
      // Orthonormality of the other clusters' eigenfunctions kills mixed pairs.
      double overlap = terms[s].coefficient * terms[p].coefficient;
      for (std::size_t j = 0; j < n && overlap != 0.0; ++j) {
        if (j != cluster && terms[s].indices[j] != terms[p].indices[j]) overlap = 0.0;
      }
      if (overlap == 0.0) continue;
      const auto& a = state.factor(s, cluster).values;
      const auto& b = state.factor(p, cluster).values;
      for (std::size_t k = 0; k < grid.size(); ++k) rho[k] += overlap * a[k] * b[k];
    }
  }
  return rho;
}

}  // namespace nelcorr
