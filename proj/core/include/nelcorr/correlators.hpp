#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "nelcorr/observable.hpp"
#include "nelcorr/separation.hpp"
#include "nelcorr/states.hpp"

namespace nelcorr {

enum class Method { qm, bohm, nelson_spectral, nelson_mc };

const char* to_string(Method m);

struct CorrelationSeries {
  std::vector<double> lags;
  std::vector<double> values;
  Method method = Method::qm;
  std::optional<std::vector<double>> stderr_values;  // only for nelson_mc
};

// Checks strictly increasing lags and the stderr/method pairing.
void validate(const CorrelationSeries& series);

// One cos(omega * lag) component of a QM two-time series.
struct TrigComponent {
  double amplitude;
  double omega;  // >= 0
};

struct QmSeries {
  CorrelationSeries series;
  std::vector<TrigComponent> components;  // sorted by omega
};

// <psi, f_1(x_1(t_1)) ... f_k(x_k(t_k)) psi> for observables on distinct
// clusters.  Throws CompatibilityError when two non-constant observables share
// a cluster and NumericError when the imaginary part exceeds 1e-10.
double qm_multitime_correlation(const CompositeState& state, const std::vector<Observable>& observables,
                                const std::vector<double>& times);

// <f(x(lag)) g(x(0))> over the lags together with its trigonometric decomposition.
QmSeries qm_two_time_series(const CompositeState& state, const Observable& f, const Observable& g,
                            const std::vector<double>& lags);

// Bohm trajectories are frozen on real stationary states: the value is the
// QM equal-time correlation whatever the times.
double bohm_multitime_correlation(const CompositeState& state, const std::vector<Observable>& observables,
                                  const std::vector<double>& times);
CorrelationSeries bohm_two_time_series(const CompositeState& state, const Observable& f,
                                       const Observable& g, const std::vector<double>& lags);

// Im d/dx_i log psi by centred differences, one row per point.  DomainError
// at points where |psi| <= 1e-8 * amplitude_bound() or outside the grids.
std::vector<std::vector<double>> bohm_velocity_field(const CompositeState& state,
                                                     const std::vector<std::vector<double>>& points);

// Spectral data of one channel factor C(u, v)(t) = sum_n p_n(u) p_n(v) e^{-r_n t}.
struct ChannelSeries {
  std::size_t channel;
  std::string f_label;
  std::string g_label;
  std::vector<double> rates;
  std::vector<double> f_coefficients;  // p_n(u) = <phi_n, u |psi_c|>
  std::vector<double> g_coefficients;
  double f_tail;  // sum-rule deficit of u after truncation
  double g_tail;
};

// Nelson two-time correlation <f(x(t)) g(x(0))> = sum_n amplitudes[n] e^{-rates[n] t}.
struct ModeExpansion {
  std::vector<double> rates;       // non-decreasing, rates[0] == 0
  std::vector<double> amplitudes;  // merged weights
  std::vector<ChannelSeries> channels;
  std::vector<std::vector<double>> weights;  // |psi_c| per channel on its grid
  double truncation_tail = 0.0;              // largest channel sum-rule deficit

  double operator()(double t) const;
};

// Exact semigroup expansion for product states and for the two-term exchange
// family.  Throws UnsupportedStateError outside that family.
ModeExpansion nelson_mode_expansion(const CompositeState& state, const Observable& f, const Observable& g);

// Caches expansions per (state, f, g).  Readers share the lock; a miss is
// computed outside the lock and the first inserted value wins.
class ExpansionCache {
 public:
  std::shared_ptr<const ModeExpansion> get(const CompositeState& state, const Observable& f,
                                           const Observable& g);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const ModeExpansion>> entries_;
};

// Stable content key for a state; equal states give equal keys.
std::string fingerprint(const CompositeState& state);

// Negative lags use |t|.
double nelson_semigroup_correlation(const CompositeState& state, const Observable& f, const Observable& g,
                                    double t, ExpansionCache* cache = nullptr);
CorrelationSeries nelson_spectral_series(const CompositeState& state, const Observable& f,
                                         const Observable& g, const std::vector<double>& lags,
                                         ExpansionCache* cache = nullptr);

struct TheoryComparison {
  CorrelationSeries qm;
  CorrelationSeries bohm;
  std::optional<CorrelationSeries> nelson;
  std::string nelson_unavailable;  // reason when nelson is empty
  double max_abs_dev_qm_bohm = 0.0;
  double max_abs_dev_qm_nelson = 0.0;
  double equal_time_spread = 0.0;  // max pairwise difference at lag 0
};

// Runs every backend over the lags.  Throws NumericError when the backends
// disagree at lag 0 by more than 1e-6.
TheoryComparison compare_theories(const CompositeState& state, const Observable& f, const Observable& g,
                                  const std::vector<double>& lags, ExpansionCache* cache = nullptr);

}  // namespace nelcorr
