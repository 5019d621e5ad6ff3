#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nelcorr/observable.hpp"
#include "nelcorr/spectral.hpp"
#include "nelcorr/states.hpp"

namespace nelcorr {

// One decoupled 1D degree of freedom: psi factors as sign * prod_c factor_c(y_c).
struct Channel {
  Potential potential;
  Wavefunction factor;
  double energy;
};

// Coordinates y in which the state is a single product.  Cluster coordinates
// are x_i = sum_c rotation[i][c] * y_c with an orthogonal rotation.
struct SeparableForm {
  std::vector<Channel> channels;
  std::vector<std::vector<double>> rotation;
  double sign = 1.0;

  std::vector<double> to_clusters(const std::vector<double>& y) const;
  std::vector<double> to_channels(const std::vector<double>& x) const;
};

struct SeparationResult {
  std::optional<SeparableForm> form;
  std::string reason;  // why the state is outside the supported family
};

// Product states separate trivially.  Two-term states
// (psi_0 psi_1 +- psi_1 psi_0)/sqrt(2) of identical harmonic clusters separate
// in the normal coordinates (x_i +- x_j)/sqrt(2).  The candidate form is
// verified pointwise against the state before it is returned.
SeparationResult separate(const CompositeState& state);

// Throws UnsupportedStateError with the diagnostic when separation fails.
SeparableForm separate_or_throw(const CompositeState& state);

// Observable written in channel coordinates: sum_k coefficient_k * prod_c u_kc(y_c),
// where an empty sample vector means the constant 1.
struct ChannelTerm {
  double coefficient;
  std::vector<std::vector<double>> factors;  // per channel, sampled on the channel grid
  std::vector<std::string> labels;           // per channel, "1" or a description
};

// Throws UnsupportedStateError when f mixes rotated channels non-linearly.
std::vector<ChannelTerm> to_channel_terms(const SeparableForm& form, const Observable& f);

}  // namespace nelcorr
