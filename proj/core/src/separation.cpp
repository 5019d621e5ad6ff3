#include "nelcorr/separation.hpp"

#include <cmath>
#include <string>

#include "nelcorr/error.hpp"

namespace nelcorr {
namespace {

bool same_oscillator(const EigenSystem& a, const EigenSystem& b) {
  if (!a.potential || !b.potential) return false;
  const auto wa = a.potential->harmonic_omega();
  const auto wb = b.potential->harmonic_omega();
  return wa && wb && *wa == *wb && a.grid == b.grid;
}

// Max |psi(x) - sign * prod factor(y)| over a deterministic probe set.
double separation_defect(const CompositeState& state, const SeparableForm& form) {
  const std::size_t n = state.cluster_count();
  double worst = 0.0;
  for (int probe = 0; probe < 64; ++probe) {
    std::vector<double> x(n);
    bool inside = true;
    for (std::size_t i = 0; i < n; ++i) {
      const Grid& g = state.clusters()[i].grid;
      const double u = std::fmod(0.618033988749895 * (probe + 1) * (i + 1) + 0.1 * probe, 1.0);
      // Stay in the bulk of the state.
      x[i] = 0.5 * (g.x_min() + g.x_max()) + (u - 0.5) * 0.5 * (g.x_max() - g.x_min()) * 0.5;
      inside = inside && g.contains(x[i]);
    }
    if (!inside) continue;
    const auto y = form.to_channels(x);
    double prod = form.sign;
    for (std::size_t c = 0; c < form.channels.size(); ++c) {
      const Grid& g = form.channels[c].factor.grid;
      if (!g.contains(y[c])) {
        prod = std::nan("");
        break;
      }
      prod *= form.channels[c].factor(y[c]);
    }
    if (std::isnan(prod)) continue;
    worst = std::max(worst, std::abs(state.amplitude(x) - prod));
  }
  return worst;
}

}  // namespace

std::vector<double> SeparableForm::to_clusters(const std::vector<double>& y) const {
  std::vector<double> x(rotation.size(), 0.0);
  for (std::size_t i = 0; i < rotation.size(); ++i) {
    for (std::size_t c = 0; c < y.size(); ++c) x[i] += rotation[i][c] * y[c];
  }
  return x;
}

std::vector<double> SeparableForm::to_channels(const std::vector<double>& x) const {
  std::vector<double> y(rotation.empty() ? 0 : rotation[0].size(), 0.0);
  for (std::size_t i = 0; i < rotation.size(); ++i) {
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += rotation[i][c] * x[i];
  }
  return y;
}

SeparationResult separate(const CompositeState& state) {
  const std::size_t n = state.cluster_count();
  const auto& terms = state.terms();
  SeparableForm form;
  form.rotation.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) form.rotation[i][i] = 1.0;

  auto channel_for = [&](std::size_t cluster, std::size_t level) {
    const EigenSystem& es = state.clusters()[cluster];
    if (!es.potential) {
      throw UnsupportedStateError("cluster " + std::to_string(cluster) + " carries no potential");
    }
    return Channel{*es.potential, es.eigenfunctions[level], es.energies[level]};
  };

  if (terms.size() == 1) {
    for (std::size_t i = 0; i < n; ++i) form.channels.push_back(channel_for(i, terms[0].indices[i]));
    form.sign = terms[0].coefficient > 0.0 ? 1.0 : -1.0;
    return {std::move(form), {}};
  }
  if (terms.size() != 2) {
    return {std::nullopt, "states with " + std::to_string(terms.size()) +
                              " terms have no decoupling rotation; use the Monte Carlo backend"};
  }
  const auto& t0 = terms[0].indices;
  const auto& t1 = terms[1].indices;
  std::vector<std::size_t> differ;
  for (std::size_t i = 0; i < n; ++i) {
    if (t0[i] != t1[i]) differ.push_back(i);
  }
  if (differ.size() != 2) {
    return {std::nullopt, "two-term state is not an exchange of two clusters"};
  }
  const std::size_t i = differ[0];
  const std::size_t j = differ[1];
  if (!(t0[i] == t1[j] && t0[j] == t1[i])) {
    return {std::nullopt, "two-term state does not swap levels between clusters"};
  }
  if (!((t0[i] == 0 && t0[j] == 1) || (t0[i] == 1 && t0[j] == 0))) {
    return {std::nullopt, "exchange of levels other than {0, 1} does not separate in normal coordinates"};
  }
  if (!same_oscillator(state.clusters()[i], state.clusters()[j])) {
    return {std::nullopt, "exchange-coupled clusters must be identical harmonic oscillators"};
  }
  const double ci = terms[0].coefficient;
  const double cj = terms[1].coefficient;
  if (std::abs(std::abs(ci) - std::abs(cj)) > 1e-12) {
    return {std::nullopt, "exchange coefficients differ in magnitude"};
  }
  // c01 multiplies psi_0(x_i) psi_1(x_j).
  const double c01 = t0[i] == 0 ? ci : cj;
  const double c10 = t0[i] == 0 ? cj : ci;
  const double r = 1.0 / std::sqrt(2.0);
  // u = (x_i + x_j)/sqrt2 on channel i, v = (x_i - x_j)/sqrt2 on channel j.
  form.rotation[i][i] = r;
  form.rotation[i][j] = r;
  form.rotation[j][i] = r;
  form.rotation[j][j] = -r;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) {
      form.channels.push_back(channel_for(i, c01 * c10 > 0.0 ? 1 : 0));
    } else if (k == j) {
      form.channels.push_back(channel_for(j, c01 * c10 > 0.0 ? 0 : 1));
    } else {
      form.channels.push_back(channel_for(k, t0[k]));
    }
  }
  // Fix the overall sign numerically so it is independent of eigenfunction
  // sign conventions, then verify the factorization.
  form.sign = 1.0;
  const double plus = separation_defect(state, form);
  form.sign = -1.0;
  const double minus = separation_defect(state, form);
  form.sign = plus <= minus ? 1.0 : -1.0;
  const double defect = std::min(plus, minus);
  // Linear interpolation limits the pointwise check to O(h^2); a wrong
  // factorization misses by O(1).
  if (defect > 1e-3 * state.amplitude_bound()) {
    return {std::nullopt, "normal-coordinate product does not reproduce the state (defect " +
                              std::to_string(defect) + ")"};
  }
  return {std::move(form), {}};
}

SeparableForm separate_or_throw(const CompositeState& state) {
  auto result = separate(state);
  if (!result.form) throw UnsupportedStateError(result.reason);
  return std::move(*result.form);
}

std::vector<ChannelTerm> to_channel_terms(const SeparableForm& form, const Observable& f) {
  const std::size_t channels = form.channels.size();
  const std::size_t cluster = f.cluster();
  if (cluster >= form.rotation.size()) throw ParameterError("observable addresses a missing cluster");
  auto blank = [&] {
    ChannelTerm t{1.0, std::vector<std::vector<double>>(channels), std::vector<std::string>(channels, "1")};
    return t;
  };
  if (f.kind() == Observable::Kind::constant) {
    ChannelTerm t = blank();
    t.coefficient = f(0.0);
    return {t};
  }
  const auto& row = form.rotation[cluster];
  std::vector<std::size_t> involved;
  for (std::size_t c = 0; c < channels; ++c) {
    if (row[c] != 0.0) involved.push_back(c);
  }
  if (involved.size() == 1 && row[involved[0]] == 1.0) {
    const std::size_t c = involved[0];
    ChannelTerm t = blank();
    t.factors[c] = f.sample(form.channels[c].factor.grid);
    t.labels[c] = f.describe();
    return {t};
  }
  if (f.kind() != Observable::Kind::position) {
    throw UnsupportedStateError("observable " + f.describe() +
                                " is not separable in the normal coordinates of this state");
  }
  std::vector<ChannelTerm> out;
  for (std::size_t c : involved) {
    ChannelTerm t = blank();
    t.coefficient = row[c];
    t.factors[c] = form.channels[c].factor.grid.points();
    t.labels[c] = "position";
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace nelcorr
