#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nelcorr/observable.hpp"
#include "nelcorr/separation.hpp"
#include "nelcorr/states.hpp"

namespace nelcorr {

// Drift of an Ito diffusion dX = b(X) dt + dW.  Simulation may run in rotated
// coordinates; to_clusters/to_simulation translate (both orthogonal maps).
class DriftField {
 public:
  virtual ~DriftField() = default;
  virtual std::size_t dimension() const = 0;
  virtual void drift(std::span<const double> y, std::span<double> out) const = 0;
  virtual void to_clusters(std::span<const double> y, std::span<double> x) const;
  virtual void to_simulation(std::span<const double> x, std::span<double> y) const;
  // Label of the nodal region containing y; a change marks a node crossing.
  virtual std::uint64_t region(std::span<const double> y) const;
};

// Cosh patch g(x) = a cosh(b (x - node)) on one side of a node.
struct PatchSide {
  double a;
  double b;
};

struct NodePatch {
  std::size_t channel;
  double node;
  PatchSide left;   // on [node - eps, node]
  PatchSide right;  // on [node, node + eps]
};

// Carlen-regularized Nelson drift d/dx log |psi|.  Separable states are driven
// channel by channel with cosh patches of half-width epsilon at every node;
// other states use b = psi grad psi / (psi^2 + eps^2 |grad psi|^2).
class RegularizedDrift final : public DriftField {
 public:
  std::size_t dimension() const override { return dim_; }
  void drift(std::span<const double> y, std::span<double> out) const override;
  void to_clusters(std::span<const double> y, std::span<double> x) const override;
  void to_simulation(std::span<const double> x, std::span<double> y) const override;
  std::uint64_t region(std::span<const double> y) const override;

  double epsilon() const { return epsilon_; }
  bool separable() const { return form_.has_value(); }
  const std::vector<NodePatch>& patches() const { return patches_; }

  // Separable case only: drift and regularized |psi_c| of one channel.
  double channel_drift(std::size_t channel, double y) const;
  double channel_amplitude(std::size_t channel, double y) const;

 private:
  friend RegularizedDrift regularized_drift(const CompositeState& state, double epsilon);

  struct ChannelTable {
    Grid grid;
    std::vector<double> psi;
    std::vector<double> dpsi;
    std::vector<double> log_derivative;  // psi'/psi where trusted
    std::vector<double> log_slope;       // d/dx (psi'/psi) = 2 (V - E) - L^2
    std::vector<double> nodes;
    std::size_t trusted_lo = 0;
    std::size_t trusted_hi = 0;
    double near_node = 0.0;
  };
  struct FactorTable {
    std::vector<double> psi;
    std::vector<double> dpsi;
  };

  double table_drift(const ChannelTable& t, double y) const;

  std::size_t dim_ = 0;
  double epsilon_ = 0.0;
  std::optional<SeparableForm> form_;
  std::vector<ChannelTable> channels_;
  std::vector<NodePatch> patches_;
  // Non-separable fallback.
  std::optional<CompositeState> state_;
  std::vector<std::vector<FactorTable>> factors_;  // [cluster][eigen index]
};

// Throws ParameterError for epsilon <= 0 or at least half the smallest node
// spacing and RegularizationError when a patch cannot be matched.
RegularizedDrift regularized_drift(const CompositeState& state, double epsilon);

// Drift from a plain per-point function in cluster coordinates.
class FunctionDrift final : public DriftField {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionDrift(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  std::size_t dimension() const override { return dim_; }
  void drift(std::span<const double> y, std::span<double> out) const override { fn_(y, out); }

 private:
  std::size_t dim_;
  Fn fn_;
};

// Reverses another drift; a negative control for stationarity checks.
class FlippedDrift final : public DriftField {
 public:
  explicit FlippedDrift(const DriftField& base) : base_(base) {}
  std::size_t dimension() const override { return base_.dimension(); }
  void drift(std::span<const double> y, std::span<double> out) const override;
  void to_clusters(std::span<const double> y, std::span<double> x) const override {
    base_.to_clusters(y, x);
  }
  void to_simulation(std::span<const double> x, std::span<double> y) const override {
    base_.to_simulation(x, y);
  }
  std::uint64_t region(std::span<const double> y) const override { return base_.region(y); }

 private:
  const DriftField& base_;
};

// n joint draws from |psi|^2 in cluster coordinates, rows = samples.
// Throws EnvelopeError when the acceptance rate falls below 1e-4.
std::vector<std::vector<double>> sample_stationary(const CompositeState& state, std::size_t n,
                                                   std::uint64_t seed);

struct SimulationOptions {
  double dt = 1e-3;
  double horizon = 1.0;
  double record_interval = 0.0;  // 0 records every step; else a multiple of dt
  std::uint64_t seed = 0;
  unsigned threads = 1;  // results do not depend on it
};

struct Ensemble {
  std::size_t n_paths = 0;
  std::size_t n_clusters = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  std::vector<double> t_grid;     // recorded times
  std::vector<double> positions;  // [path][time][cluster], cluster coordinates
  std::uint64_t steps = 0;        // path-steps simulated
  std::uint64_t clamped_steps = 0;
  double clamp_rate = 0.0;
  double sign_change_fraction = 0.0;  // paths that crossed a node at least once

  double at(std::size_t path, std::size_t time, std::size_t cluster) const {
    return positions[(path * t_grid.size() + time) * n_clusters + cluster];
  }
  // Index of a recorded time; ParameterError when t is not on the grid.
  std::size_t time_index(double t) const;
};

// Euler-Maruyama with per-step drift clamp |b dt| <= 10 sqrt(dt).  Noise for
// (path, step) comes from a counter stream keyed by the seed, so results are
// bitwise identical for any thread count.  Throws StepSizeError when more than
// 1% of steps are clamped and NumericError on non-finite positions.
Ensemble simulate_ensemble(const DriftField& drift, const std::vector<std::vector<double>>& init,
                           const SimulationOptions& options, double epsilon = 0.0);

struct Estimate {
  double value;
  double stderr_value;
};

// Mean of f(x_f(t)) g(x_g(s)) over paths with standard error sd / sqrt(n).
Estimate estimate_two_time(const Ensemble& ensemble, const Observable& f, const Observable& g, double t,
                           double s);

// One-sample Kolmogorov-Smirnov statistic of each cluster's time-t marginal
// against the |psi|^2 marginal.
std::vector<double> stationarity_distance(const Ensemble& ensemble, const CompositeState& state, double t);

struct McParams {
  std::size_t n_paths = 100000;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Stationary start, regularized drift and simulation up to `horizon`.
Ensemble run_nelson_mc(const CompositeState& state, double epsilon, const McParams& params, double horizon,
                       double record_interval);

struct EpsilonRow {
  double epsilon;
  double value;
  double stderr_value;
  double spectral_ref;  // NaN when the spectral backend does not cover the state
  double abs_dev;
};

// One Monte Carlo estimate of <f(x(t)) g(x(0))> per epsilon, all sharing the
// same seed (common random numbers).  Epsilons must be strictly decreasing.
std::vector<EpsilonRow> epsilon_convergence_study(const CompositeState& state, const Observable& f,
                                                  const Observable& g, double t,
                                                  const std::vector<double>& epsilons, const McParams& params);

}  // namespace nelcorr
