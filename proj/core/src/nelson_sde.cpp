#include "nelcorr/nelson_sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "nelcorr/correlators.hpp"
#include "nelcorr/error.hpp"
#include "nelcorr/rng.hpp"

namespace nelcorr {
namespace {

// Below this fraction of max |psi| the sampled log-derivative is too noisy to
// extrapolate from.
constexpr double kTrust = 1e-3;
constexpr double kNearNodeCells = 20.0;

std::size_t steps_for(double span, double dt, const char* what) {
  const double ratio = span / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(ratio - static_cast<double>(n)) > 1e-6 * std::max(1.0, ratio)) {
    throw ParameterError(std::string(what) + " must be a positive multiple of dt");
  }
  return n;
}

}  // namespace

void DriftField::to_clusters(std::span<const double> y, std::span<double> x) const {
  std::copy(y.begin(), y.end(), x.begin());
}

void DriftField::to_simulation(std::span<const double> x, std::span<double> y) const {
  std::copy(x.begin(), x.end(), y.begin());
}

std::uint64_t DriftField::region(std::span<const double>) const { return 0; }

void FlippedDrift::drift(std::span<const double> y, std::span<double> out) const {
  base_.drift(y, out);
  for (double& b : out) b = -b;
}

double RegularizedDrift::table_drift(const ChannelTable& t, double y) const {
  const Grid& g = t.grid;
  const double x_lo = g[t.trusted_lo];
  const double x_hi = g[t.trusted_hi];
  // Beyond the trusted range the log-derivative is continued linearly, which
  // is exact for Gaussian tails.
  if (y <= x_lo) return t.log_derivative[t.trusted_lo] + t.log_slope[t.trusted_lo] * (y - x_lo);
  if (y >= x_hi) return t.log_derivative[t.trusted_hi] + t.log_slope[t.trusted_hi] * (y - x_hi);
  const std::size_t i = g.cell(y);
  double dist = std::numeric_limits<double>::infinity();
  for (double node : t.nodes) dist = std::min(dist, std::abs(y - node));
  // Close to a node psi is nearly linear and its own Hermite interpolant is
  // accurate, while psi'/psi varies too fast to interpolate.
  const bool trusted = t.log_derivative[i] != 0.0 && t.log_derivative[i + 1] != 0.0;
  if (dist < t.near_node || !trusted) {
    const auto hv = interpolate_hermite(t.psi, t.dpsi, g, y);
    return hv.value == 0.0 ? 0.0 : hv.derivative / hv.value;
  }
  return interpolate_hermite(t.log_derivative, t.log_slope, g, y).value;
}

double RegularizedDrift::channel_drift(std::size_t channel, double y) const {
  for (const auto& p : patches_) {
    if (p.channel != channel || std::abs(y - p.node) >= epsilon_) continue;
    const PatchSide& side = y < p.node ? p.left : p.right;
    return side.b * std::tanh(side.b * (y - p.node));
  }
  return table_drift(channels_[channel], y);
}

double RegularizedDrift::channel_amplitude(std::size_t channel, double y) const {
  for (const auto& p : patches_) {
    if (p.channel != channel || std::abs(y - p.node) >= epsilon_) continue;
    const PatchSide& side = y < p.node ? p.left : p.right;
    return side.a * std::cosh(side.b * (y - p.node));
  }
  const ChannelTable& t = channels_[channel];
  if (!t.grid.contains(y)) return 0.0;
  return std::abs(interpolate_hermite(t.psi, t.dpsi, t.grid, y).value);
}

void RegularizedDrift::drift(std::span<const double> y, std::span<double> out) const {
  if (form_) {
    for (std::size_t c = 0; c < dim_; ++c) out[c] = channel_drift(c, y[c]);
    return;
  }
  // psi grad psi / (psi^2 + eps^2 |grad psi|^2) from Hermite-interpolated factors.
  const CompositeState& s = *state_;
  double psi = 0.0;
  std::vector<double> grad(dim_, 0.0);
  std::vector<double> v(dim_);
  std::vector<double> d(dim_);
  for (std::size_t c = 0; c < dim_; ++c) {
    if (!s.clusters()[c].grid.contains(y[c])) {
      throw NumericError("path left the grid of cluster " + std::to_string(c));
    }
  }
  for (const auto& term : s.terms()) {
    for (std::size_t c = 0; c < dim_; ++c) {
      const auto& f = factors_[c][term.indices[c]];
      const auto hv = interpolate_hermite(f.psi, f.dpsi, s.clusters()[c].grid, y[c]);
      v[c] = hv.value;
      d[c] = hv.derivative;
    }
    double prod = term.coefficient;
    for (std::size_t c = 0; c < dim_; ++c) prod *= v[c];
    psi += prod;
    for (std::size_t c = 0; c < dim_; ++c) {
      double p = term.coefficient * d[c];
      for (std::size_t j = 0; j < dim_; ++j) {
        if (j != c) p *= v[j];
      }
      grad[c] += p;
    }
  }
  double g2 = 0.0;
  for (double gi : grad) g2 += gi * gi;
  const double denom = psi * psi + epsilon_ * epsilon_ * g2;
  for (std::size_t c = 0; c < dim_; ++c) out[c] = denom > 0.0 ? psi * grad[c] / denom : 0.0;
}

void RegularizedDrift::to_clusters(std::span<const double> y, std::span<double> x) const {
  if (!form_) return DriftField::to_clusters(y, x);
  const auto& r = form_->rotation;
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) acc += r[i][c] * y[c];
    x[i] = acc;
  }
}

void RegularizedDrift::to_simulation(std::span<const double> x, std::span<double> y) const {
  if (!form_) return DriftField::to_simulation(x, y);
  const auto& r = form_->rotation;
  for (std::size_t c = 0; c < dim_; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) acc += r[i][c] * x[i];
    y[c] = acc;
  }
}

std::uint64_t RegularizedDrift::region(std::span<const double> y) const {
  if (form_) {
    std::uint64_t id = 0;
    for (std::size_t c = 0; c < dim_; ++c) {
      const auto& nodes = channels_[c].nodes;
      const auto below = static_cast<std::uint64_t>(std::lower_bound(nodes.begin(), nodes.end(), y[c]) - nodes.begin());
      id = id * 1024 + below;
    }
    return id;
  }
  const CompositeState& s = *state_;
  for (std::size_t c = 0; c < dim_; ++c) {
    if (!s.clusters()[c].grid.contains(y[c])) return 2;
  }
  return s.amplitude(y) < 0.0 ? 1 : 0;
}

RegularizedDrift regularized_drift(const CompositeState& state, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ParameterError("epsilon must be positive");
  RegularizedDrift out;
  out.dim_ = state.cluster_count();
  out.epsilon_ = epsilon;
  auto sep = separate(state);
  if (!sep.form) {
    out.state_ = state;
    out.factors_.resize(state.cluster_count());
    for (std::size_t c = 0; c < state.cluster_count(); ++c) {
      const auto& es = state.clusters()[c];
      for (const auto& wf : es.eigenfunctions) {
        out.factors_[c].push_back({wf.values, derivative_samples(wf.values, es.grid.spacing())});
      }
    }
    return out;
  }
  out.form_ = std::move(*sep.form);
  for (std::size_t c = 0; c < out.form_->channels.size(); ++c) {
    const Channel& ch = out.form_->channels[c];
    const Grid& g = ch.factor.grid;
    RegularizedDrift::ChannelTable t{g, ch.factor.values, derivative_samples(ch.factor.values, g.spacing()),
                                     {}, {}, find_nodes(ch.factor), 0, 0, kNearNodeCells * g.spacing()};
    const double max = ch.factor.max_abs();
    t.log_derivative.assign(g.size(), 0.0);
    t.log_slope.assign(g.size(), 0.0);
    bool any = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(std::abs(t.psi[i]) >= kTrust * max)) continue;
      const double l = t.dpsi[i] / t.psi[i];
      const double v = ch.potential(g[i]);
      t.log_derivative[i] = l == 0.0 ? std::numeric_limits<double>::min() : l;
      t.log_slope[i] = std::isfinite(v) ? 2.0 * (v - ch.energy) - l * l : 0.0;
      if (!any) t.trusted_lo = i;
      t.trusted_hi = i;
      any = true;
    }
    if (!any || t.trusted_hi <= t.trusted_lo) throw NumericError("channel wave function vanishes on its grid");
    for (std::size_t k = 0; k + 1 < t.nodes.size(); ++k) {
      if (epsilon >= 0.5 * (t.nodes[k + 1] - t.nodes[k])) {
        throw ParameterError("epsilon " + std::to_string(epsilon) + " is not below half the node spacing " +
                             std::to_string(0.5 * (t.nodes[k + 1] - t.nodes[k])));
      }
    }
    for (double node : t.nodes) {
      if (!g.contains(node - epsilon) || !g.contains(node + epsilon)) {
        throw ParameterError("epsilon patch around node " + std::to_string(node) + " leaves the grid");
      }
    }
    out.channels_.push_back(std::move(t));
  }
  // Cosh patches: b tanh(b eps) = |psi|'/|psi| at node +- eps, then a from the value.
  for (std::size_t c = 0; c < out.channels_.size(); ++c) {
    const auto& t = out.channels_[c];
    for (double node : t.nodes) {
      NodePatch patch{c, node, {}, {}};
      for (int s : {-1, 1}) {
        const double p = node + s * epsilon;
        const auto hv = interpolate_hermite(t.psi, t.dpsi, t.grid, p);
        const double kappa = s * (hv.derivative / hv.value);
        auto residual = [&](double b) { return b * std::tanh(b * epsilon) - kappa; };
        double lo = 0.1 / epsilon;
        double hi = 100.0 / epsilon;
        if (!(residual(lo) < 0.0 && residual(hi) > 0.0)) {
          throw RegularizationError("no cosh patch matches |psi| at node " + std::to_string(node) +
                                    " with epsilon " + std::to_string(epsilon));
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          (residual(mid) < 0.0 ? lo : hi) = mid;
        }
        const double b = 0.5 * (lo + hi);
        const PatchSide side{std::abs(hv.value) / std::cosh(b * epsilon), b};
        (s < 0 ? patch.left : patch.right) = side;
      }
      out.patches_.push_back(patch);
    }
  }
  return out;
}

std::vector<std::vector<double>> sample_stationary(const CompositeState& state, std::size_t n,
                                                   std::uint64_t seed) {
  if (n == 0) throw ParameterError("sample count must be at least 1");
  const std::size_t dim = state.cluster_count();
  double envelope = 0.0;
  if (dim <= 2) {
    // The interpolated amplitude is multilinear per cell, so its maximum sits
    // on grid nodes.
    const Grid& g0 = state.clusters()[0].grid;
    const std::size_t n1 = dim == 2 ? state.clusters()[1].grid.size() : 1;
    std::vector<double> row(n1);
    for (std::size_t i = 0; i < g0.size(); ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t s = 0; s < state.terms().size(); ++s) {
        const double a = state.terms()[s].coefficient * state.factor(s, 0).values[i];
        if (dim == 1) {
          row[0] += a;
        } else {
          const auto& f1 = state.factor(s, 1).values;
          for (std::size_t j = 0; j < n1; ++j) row[j] += a * f1[j];
        }
      }
      for (double v : row) envelope = std::max(envelope, v * v);
    }
  } else {
    envelope = state.amplitude_bound() * state.amplitude_bound();
  }
  envelope *= 1.01;
  double volume = 1.0;
  for (const auto& es : state.clusters()) volume *= es.grid.x_max() - es.grid.x_min();
  const double expected = 1.0 / (volume * envelope);
  if (expected < 1e-4) {
    throw EnvelopeError("rejection acceptance rate " + std::to_string(expected) +
                        " is below 1e-4; refine the proposal box");
  }

  const CounterRng rng(seed, Stream::sampling);
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  const std::size_t blocks = (dim + 1 + 1) / 2;
  std::vector<double> u(2 * blocks);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t attempt = 0;; ++attempt) {
      if (attempt > 1000000) throw EnvelopeError("rejection sampler made no progress");
      for (std::size_t b = 0; b < blocks; ++b) {
        const auto w = CounterRng::uniforms(rng.block(i, attempt, static_cast<std::uint32_t>(b)));
        u[2 * b] = w[0];
        u[2 * b + 1] = w[1];
      }
      auto& x = out[i];
      for (std::size_t c = 0; c < dim; ++c) {
        const Grid& g = state.clusters()[c].grid;
        x[c] = g.x_min() + u[c] * (g.x_max() - g.x_min());
      }
      const double psi = state.amplitude(x);
      if (u[dim] * envelope < psi * psi) break;
    }
  }
  return out;
}

std::size_t Ensemble::time_index(double t) const {
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (std::abs(t_grid[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
  }
  throw ParameterError("time " + std::to_string(t) + " is not a recorded ensemble time");
}

Ensemble simulate_ensemble(const DriftField& drift, const std::vector<std::vector<double>>& init,
                           const SimulationOptions& options, double epsilon) {
  if (!(options.dt > 0.0) || !std::isfinite(options.dt)) throw ParameterError("dt must be positive");
  if (!(options.horizon >= options.dt)) throw ParameterError("horizon must be at least dt");
  if (init.empty()) throw ParameterError("no initial positions");
  const std::size_t dim = drift.dimension();
  for (const auto& row : init) {
    if (row.size() != dim) throw ParameterError("initial position dimension differs from the drift");
  }
  const std::size_t steps = steps_for(options.horizon, options.dt, "horizon");
  const std::size_t every =
      options.record_interval > 0.0 ? steps_for(options.record_interval, options.dt, "record interval") : 1;

  Ensemble e;
  e.n_paths = init.size();
  e.n_clusters = dim;
  e.dt = options.dt;
  e.seed = options.seed;
  e.epsilon = epsilon;
  for (std::size_t k = 0; k <= steps; k += every) e.t_grid.push_back(static_cast<double>(k) * options.dt);
  const std::size_t n_times = e.t_grid.size();
  e.positions.assign(e.n_paths * n_times * dim, 0.0);

  const double sqdt = std::sqrt(options.dt);
  const double cap = 10.0 * sqdt;
  const CounterRng rng(options.seed, Stream::noise);
  const std::size_t blocks = (dim + 1) / 2;

  struct Tally {
    std::uint64_t clamped = 0;
    std::uint64_t crossed = 0;
    bool bad = false;
  };
  auto run = [&](std::size_t begin, std::size_t end, Tally& tally) {
    std::vector<double> y(dim), b(dim), x(dim), xi(2 * blocks);
    for (std::size_t path = begin; path < end; ++path) {
      drift.to_simulation(init[path], y);
      const std::uint64_t start_region = drift.region(y);
      bool crossed = false;
      std::size_t slot = 0;
      auto record = [&] {
        drift.to_clusters(y, x);
        std::copy(x.begin(), x.end(), e.positions.begin() + static_cast<std::ptrdiff_t>((path * n_times + slot) * dim));
        ++slot;
      };
      record();
      for (std::size_t n = 0; n < steps; ++n) {
        drift.drift(y, b);
        for (std::size_t k = 0; k < blocks; ++k) {
          const auto z = CounterRng::normals(rng.block(path, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(k)));
          xi[2 * k] = z[0];
          xi[2 * k + 1] = z[1];
        }
        bool clamped = false;
        for (std::size_t c = 0; c < dim; ++c) {
          double step = b[c] * options.dt;
          if (std::abs(step) > cap || std::isnan(step)) {
            if (std::isnan(step)) {
              tally.bad = true;
              return;
            }
            step = std::copysign(cap, step);
            clamped = true;
          }
          y[c] += step + sqdt * xi[c];
          if (!std::isfinite(y[c])) {
            tally.bad = true;
            return;
          }
        }
        if (clamped) ++tally.clamped;
        if (!crossed && drift.region(y) != start_region) crossed = true;
        if ((n + 1) % every == 0) record();
      }
      if (crossed) ++tally.crossed;
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(e.n_paths)));
  std::vector<Tally> tallies(threads);
  if (threads == 1) {
    run(0, e.n_paths, tallies[0]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (e.n_paths + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(e.n_paths, t * chunk);
      const std::size_t end = std::min(e.n_paths, begin + chunk);
      pool.emplace_back([&, begin, end, t] {
        try {
          run(begin, end, tallies[t]);
        } catch (...) {
          tallies[t].bad = true;
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::uint64_t crossed = 0;
  for (const auto& t : tallies) {
    if (t.bad) throw NumericError("non-finite position or drift during simulation");
    e.clamped_steps += t.clamped;
    crossed += t.crossed;
  }
  e.steps = static_cast<std::uint64_t>(steps) * e.n_paths;
  e.clamp_rate = static_cast<double>(e.clamped_steps) / static_cast<double>(e.steps);
  e.sign_change_fraction = static_cast<double>(crossed) / static_cast<double>(e.n_paths);
  if (e.clamp_rate > 0.01) {
    throw StepSizeError("drift clamp hit on " + std::to_string(100.0 * e.clamp_rate) +
                        "% of steps; reduce dt or increase epsilon");
  }
  return e;
}

Estimate estimate_two_time(const Ensemble& ensemble, const Observable& f, const Observable& g, double t,
                           double s) {
  if (f.cluster() >= ensemble.n_clusters || g.cluster() >= ensemble.n_clusters) {
    throw ParameterError("observable addresses a missing cluster");
  }
  const std::size_t ti = ensemble.time_index(t);
  const std::size_t si = ensemble.time_index(s);
  const std::size_t n = ensemble.n_paths;
  std::vector<double> v(n);
  double mean = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    v[p] = f(ensemble.at(p, ti, f.cluster())) * g(ensemble.at(p, si, g.cluster()));
    mean += v[p];
  }
  mean /= static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, sd / std::sqrt(static_cast<double>(n))};
}

std::vector<double> stationarity_distance(const Ensemble& ensemble, const CompositeState& state, double t) {
  if (ensemble.n_clusters != state.cluster_count()) throw ParameterError("ensemble and state differ in clusters");
  const std::size_t ti = ensemble.time_index(t);
  std::vector<double> out;
  for (std::size_t c = 0; c < state.cluster_count(); ++c) {
    const Grid& g = state.clusters()[c].grid;
    auto cdf = cumulative_integral(marginal_density(state, c), g.spacing());
    const double total = cdf.back();
    for (double& v : cdf) v /= total;
    std::vector<double> xs(ensemble.n_paths);
    for (std::size_t p = 0; p < ensemble.n_paths; ++p) xs[p] = ensemble.at(p, ti, c);
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double F = 0.0;
      if (xs[i] >= g.x_max()) {
        F = 1.0;
      } else if (xs[i] > g.x_min()) {
        F = interpolate_linear(cdf, g, xs[i]);
      }
      d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    out.push_back(d);
  }
  return out;
}

Ensemble run_nelson_mc(const CompositeState& state, double epsilon, const McParams& params, double horizon,
                       double record_interval) {
  if (params.n_paths == 0) throw ParameterError("n_paths must be positive");
  const auto drift = regularized_drift(state, epsilon);
  const auto init = sample_stationary(state, params.n_paths, params.seed);
  SimulationOptions opts{params.dt, horizon, record_interval, params.seed, params.threads};
  return simulate_ensemble(drift, init, opts, epsilon);
}

std::vector<EpsilonRow> epsilon_convergence_study(const CompositeState& state, const Observable& f,
                                                  const Observable& g, double t,
                                                  const std::vector<double>& epsilons, const McParams& params) {
  if (epsilons.empty()) throw ParameterError("epsilon list is empty");
  for (std::size_t i = 1; i < epsilons.size(); ++i) {
    if (!(epsilons[i] < epsilons[i - 1])) throw ParameterError("epsilons must be strictly decreasing");
  }
  if (!(t > 0.0)) throw ParameterError("study time must be positive");
  double ref = std::numeric_limits<double>::quiet_NaN();
  try {
    ref = nelson_semigroup_correlation(state, f, g, t);
  } catch (const UnsupportedStateError&) {
  }
  // Validate every epsilon before spending time on simulation.
  for (double eps : epsilons) (void)regularized_drift(state, eps);
  std::vector<EpsilonRow> rows;
  for (double eps : epsilons) {
    const Ensemble e = run_nelson_mc(state, eps, params, t, t);
    const Estimate est = estimate_two_time(e, f, g, t, 0.0);
    rows.push_back({eps, est.value, est.stderr_value, ref, std::abs(est.value - ref)});
  }
  return rows;
}

}  // namespace nelcorr
