#pragma once

#include <cmath>
#include <vector>

#include "nelcorr/spectral.hpp"
#include "nelcorr/states.hpp"

namespace fixtures {

inline nelcorr::EigenSystem oscillator(double omega = 1.0, std::size_t levels = 4) {
  return nelcorr::harmonic_eigensystem(omega, levels, nelcorr::default_harmonic_grid(omega));
}

// (psi_0(x1) psi_1(x2) + sign * psi_1(x1) psi_0(x2)) / sqrt(2)
inline nelcorr::CompositeState exchange_state(double omega = 1.0, double sign = 1.0) {
  const auto es = oscillator(omega);
  const double c = 1.0 / std::sqrt(2.0);
  return nelcorr::build_composite_state({es, es}, {{c, {0, 1}}, {sign * c, {1, 0}}});
}

inline nelcorr::CompositeState ground_product(double omega = 1.0) {
  const auto es = oscillator(omega);
  return nelcorr::build_composite_state({es, es}, {{1.0, {0, 0}}});
}

// Singlet-like box state (psi_0 psi_1 - psi_1 psi_0) / sqrt(2) on [-L, L].
inline nelcorr::CompositeState box_singlet(double half_width = 1.0) {
  const auto es = nelcorr::box_eigensystem(half_width, 2, nelcorr::default_box_grid(half_width));
  const double c = 1.0 / std::sqrt(2.0);
  return nelcorr::build_composite_state({es, es}, {{c, {0, 1}}, {-c, {1, 0}}});
}

}  // namespace fixtures
