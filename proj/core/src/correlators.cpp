#include "nelcorr/correlators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <string>

#include "nelcorr/error.hpp"

namespace nelcorr {
namespace {

constexpr std::size_t kInitialModes = 64;
constexpr std::size_t kMaxModes = 200;
constexpr double kDeficitTarget = 1e-6;

void check_lags(const std::vector<double>& lags) {
  if (lags.empty()) throw ParameterError("lag list is empty");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (!std::isfinite(lags[i])) throw ParameterError("lags must be finite");
    if (i > 0 && !(lags[i] > lags[i - 1])) throw ParameterError("lags must be strictly increasing");
  }
}

void check_cluster(const CompositeState& state, const Observable& o) {
  if (o.cluster() >= state.cluster_count()) {
    throw ParameterError("observable " + o.describe() + " addresses cluster " + std::to_string(o.cluster()) +
                         " of a " + std::to_string(state.cluster_count()) + "-cluster state");
  }
}

// Matrix elements <psi_a, f psi_b> on one cluster, computed on demand.
class MatrixElements {
 public:
  MatrixElements(const EigenSystem& es, const Observable& f) : es_(es), f_(f.sample(es.grid)) {}

  double operator()(std::size_t a, std::size_t b) {
    const auto key = std::minmax(a, b);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = quadrature(es_.eigenfunctions[a].values, es_.eigenfunctions[b].values, es_.grid,
                                std::span<const double>(f_));
    cache_.emplace(key, v);
    return v;
  }

 private:
  const EigenSystem& es_;
  std::vector<double> f_;
  std::map<std::pair<std::size_t, std::size_t>, double> cache_;
};

struct PreparedObservable {
  std::size_t cluster;
  double time;
  std::unique_ptr<MatrixElements> elements;
};

// Splits observables into a scalar factor (constants) and per-cluster operators.
double prepare(const CompositeState& state, const std::vector<Observable>& observables,
               const std::vector<double>& times, std::vector<PreparedObservable>& out) {
  if (observables.size() != times.size()) {
    throw ParameterError("need one time per observable (" + std::to_string(observables.size()) +
                         " observables, " + std::to_string(times.size()) + " times)");
  }
  double scalar = 1.0;
  std::vector<bool> used(state.cluster_count(), false);
  for (std::size_t k = 0; k < observables.size(); ++k) {
    const Observable& o = observables[k];
    check_cluster(state, o);
    if (!std::isfinite(times[k])) throw ParameterError("times must be finite");
    if (o.kind() == Observable::Kind::constant) {
      scalar *= o(0.0);
      continue;
    }
    if (used[o.cluster()]) {
      throw CompatibilityError("two observables on cluster " + std::to_string(o.cluster()) +
                               ": positions of one cluster at different times do not commute");
    }
    used[o.cluster()] = true;
    out.push_back({o.cluster(), times[k],
                   std::make_unique<MatrixElements>(state.clusters()[o.cluster()], o)});
  }
  return scalar;
}

std::complex<double> pair_amplitude(const CompositeState& state, std::vector<PreparedObservable>& ops,
                                    std::size_t s, std::size_t p) {
  const auto& ts = state.terms()[s];
  const auto& tp = state.terms()[p];
  std::complex<double> z = ts.coefficient * tp.coefficient;
  std::vector<bool> has_op(state.cluster_count(), false);
  for (auto& op : ops) {
    const std::size_t i = op.cluster;
    has_op[i] = true;
    const std::size_t a = ts.indices[i];
    const std::size_t b = tp.indices[i];
    const double phase = (state.clusters()[i].energies[a] - state.clusters()[i].energies[b]) * op.time;
    z *= (*op.elements)(a, b) * std::polar(1.0, phase);
  }
  for (std::size_t i = 0; i < state.cluster_count(); ++i) {
    if (!has_op[i] && ts.indices[i] != tp.indices[i]) return 0.0;
  }
  return z;
}

double real_checked(std::complex<double> z, double scale) {
  if (std::abs(z.imag()) > 1e-10 * std::max(1.0, scale)) {
    throw NumericError("QM correlation has imaginary part " + std::to_string(z.imag()));
  }
  return z.real();
}

// ---- Nelson spectral backend ----

struct ChannelBasis {
  std::vector<std::vector<double>> modes;  // orthonormal on the channel grid
  std::vector<double> rates;
  std::vector<double> weight;  // |psi_c|
};

double grid_dot(const std::vector<double>& a, const std::vector<double>& b, const Grid& g) {
  return quadrature(a, b, g);
}

// Dirichlet-restricted eigenbasis of one channel.  The domain ground modes are
// replaced by |psi| restricted to each nodal domain so that the constant
// function is represented exactly and A(t)1 = 1 holds to rounding.
ChannelBasis channel_basis(const Channel& ch, std::size_t k) {
  const Grid& grid = ch.factor.grid;
  const EigenSystem es = dirichlet_restricted_eigensystem(ch.potential, ch.factor, grid, k);
  ChannelBasis basis;
  basis.weight.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) basis.weight[i] = std::abs(ch.factor.values[i]);

  const auto& nodes = es.boundary.nodes;
  std::vector<std::vector<double>> grounds(nodes.size() + 1, std::vector<double>(grid.size(), 0.0));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto d = static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), grid[i]) - nodes.begin());
    grounds[d][i] = basis.weight[i];
  }
  for (auto& gvec : grounds) {
    const double n2 = grid_dot(gvec, gvec, grid);
    if (n2 <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& v : gvec) v *= inv;
    basis.modes.push_back(std::move(gvec));
    basis.rates.push_back(0.0);
  }
  const std::size_t n_grounds = basis.modes.size();
  std::size_t skipped = 0;
  for (std::size_t j = 0; j < es.size(); ++j) {
    if (es.domain_level[j] == 0 && skipped < n_grounds) {
      ++skipped;
      continue;
    }
    std::vector<double> v = es.eigenfunctions[j].values;
    for (std::size_t g = 0; g < n_grounds; ++g) {
      const double p = grid_dot(v, basis.modes[g], grid);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * basis.modes[g][i];
    }
    const double n2 = grid_dot(v, v, grid);
    if (!(n2 > 0.5)) {
      throw NumericError("restricted eigenbasis lost an excited mode to the ground-state projection");
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : v) x *= inv;
    basis.modes.push_back(std::move(v));
    basis.rates.push_back(std::max(0.0, es.energies[j] - ch.energy));
  }
  return basis;
}

struct Projection {
  std::vector<double> coefficients;
  std::vector<double> weighted;  // u |psi_c|
  double norm2;
  double deficit;
};

Projection project(const ChannelBasis& basis, const std::vector<double>& u, const Grid& grid) {
  Projection p;
  p.weighted.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) p.weighted[i] = u[i] * basis.weight[i];
  p.norm2 = grid_dot(p.weighted, p.weighted, grid);
  double captured = 0.0;
  p.coefficients.reserve(basis.modes.size());
  for (const auto& m : basis.modes) {
    const double c = grid_dot(m, p.weighted, grid);
    p.coefficients.push_back(c);
    captured += c * c;
  }
  p.deficit = p.norm2 - captured;
  return p;
}

// Sparse exponential sum sum_n a_n e^{-r_n t}.
using Exponentials = std::vector<std::pair<double, double>>;  // (rate, amplitude)

Exponentials merge(Exponentials terms) {
  std::sort(terms.begin(), terms.end());
  Exponentials out;
  for (const auto& [r, a] : terms) {
    if (!out.empty() && r - out.back().first <= 1e-10 * (1.0 + r)) {
      out.back().second += a;
    } else {
      out.emplace_back(r, a);
    }
  }
  return out;
}

Exponentials multiply(const Exponentials& x, const Exponentials& y) {
  Exponentials out;
  out.reserve(x.size() * y.size());
  for (const auto& [rx, ax] : x) {
    for (const auto& [ry, ay] : y) out.emplace_back(rx + ry, ax * ay);
  }
  return merge(std::move(out));
}

struct ChannelData {
  ChannelBasis basis;
  std::map<std::string, Projection> projections;  // by label, "1" included
};

// Doubles the mode count until every projection meets the deficit target.
ChannelData channel_data(const Channel& ch, const std::map<std::string, std::vector<double>>& samples) {
  const Grid& grid = ch.factor.grid;
  const std::size_t limit = std::min(kMaxModes, grid.size() - 2);
  std::size_t k = std::min(kInitialModes, limit);
  for (;;) {
    ChannelData data{channel_basis(ch, k), {}};
    double worst = 0.0;
    for (const auto& [label, u] : samples) {
      auto p = project(data.basis, u, grid);
      worst = std::max(worst, p.deficit);
      data.projections.emplace(label, std::move(p));
    }
    if (worst < kDeficitTarget || k >= limit) return data;
    k = std::min(2 * k, limit);
  }
}

std::uint64_t fnv(std::uint64_t h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv_double(std::uint64_t h, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  return fnv(h, &bits, sizeof bits);
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::qm:
      return "qm";
    case Method::bohm:
      return "bohm";
    case Method::nelson_spectral:
      return "nelson_spectral";
    case Method::nelson_mc:
      return "nelson_mc";
  }
  return "unknown";
}

void validate(const CorrelationSeries& series) {
  check_lags(series.lags);
  if (series.values.size() != series.lags.size()) throw ParameterError("series: value count differs from lag count");
  const bool mc = series.method == Method::nelson_mc;
  if (mc != series.stderr_values.has_value()) {
    throw ParameterError("series: stderr must be present exactly for Monte Carlo estimates");
  }
  if (series.stderr_values) {
    if (series.stderr_values->size() != series.lags.size()) throw ParameterError("series: stderr count mismatch");
    for (double s : *series.stderr_values) {
      if (!(s >= 0.0)) throw ParameterError("series: stderr entries must be non-negative");
    }
  }
}

double qm_multitime_correlation(const CompositeState& state, const std::vector<Observable>& observables,
                                const std::vector<double>& times) {
  std::vector<PreparedObservable> ops;
  const double scalar = prepare(state, observables, times, ops);
  std::complex<double> sum = 0.0;
  double scale = 0.0;
  const std::size_t n = state.terms().size();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < n; ++p) {
      const auto z = pair_amplitude(state, ops, s, p);
      sum += z;
      scale += std::abs(z);
    }
  }
  return scalar * real_checked(sum, scale);
}

QmSeries qm_two_time_series(const CompositeState& state, const Observable& f, const Observable& g,
                            const std::vector<double>& lags) {
  check_lags(lags);
  std::vector<PreparedObservable> ops;
  const double scalar = prepare(state, {f, g}, {0.0, 0.0}, ops);
  const std::size_t n = state.terms().size();
  // Amplitude and frequency of every (s, p) pair at zero lag; only f carries a phase.
  struct Pair {
    std::complex<double> amplitude;
    double omega;
  };
  std::vector<Pair> pairs;
  double scale = 0.0;
  const bool f_moves = f.kind() != Observable::Kind::constant;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < n; ++p) {
      const auto z = scalar * pair_amplitude(state, ops, s, p);
      if (z == 0.0) continue;
      double omega = 0.0;
      if (f_moves) {
        const auto& es = state.clusters()[f.cluster()];
        omega = es.energies[state.terms()[s].indices[f.cluster()]] -
                es.energies[state.terms()[p].indices[f.cluster()]];
      }
      pairs.push_back({z, omega});
      scale += std::abs(z);
    }
  }

  QmSeries out;
  out.series.lags = lags;
  out.series.method = Method::qm;
  out.series.values.reserve(lags.size());
  for (double lag : lags) {
    std::complex<double> sum = 0.0;
    for (const auto& pr : pairs) sum += pr.amplitude * std::polar(1.0, pr.omega * lag);
    out.series.values.push_back(real_checked(sum, scale));
  }

  std::vector<std::pair<double, double>> raw;
  for (const auto& pr : pairs) raw.emplace_back(std::abs(pr.omega), pr.amplitude.real());
  std::sort(raw.begin(), raw.end());
  for (const auto& [w, a] : raw) {
    if (!out.components.empty() && w - out.components.back().omega <= 1e-9 * (1.0 + w)) {
      out.components.back().amplitude += a;
    } else {
      out.components.push_back({a, w});
    }
  }
  return out;
}

double bohm_multitime_correlation(const CompositeState& state, const std::vector<Observable>& observables,
                                  const std::vector<double>& times) {
  if (observables.size() != times.size()) throw ParameterError("need one time per observable");
  return qm_multitime_correlation(state, observables, std::vector<double>(times.size(), 0.0));
}

CorrelationSeries bohm_two_time_series(const CompositeState& state, const Observable& f, const Observable& g,
                                       const std::vector<double>& lags) {
  check_lags(lags);
  const double value = bohm_multitime_correlation(state, {f, g}, {0.0, 0.0});
  return CorrelationSeries{lags, std::vector<double>(lags.size(), value), Method::bohm, std::nullopt};
}

std::vector<std::vector<double>> bohm_velocity_field(const CompositeState& state,
                                                     const std::vector<std::vector<double>>& points) {
  const double floor = 1e-8 * state.amplitude_bound();
  std::vector<std::vector<double>> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    if (x.size() != state.cluster_count()) throw ParameterError("point dimension differs from cluster count");
    if (!(std::abs(state.amplitude(x)) > floor)) {
      throw DomainError("velocity field is singular at a node of the state");
    }
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = 0.5 * state.clusters()[i].grid.spacing();
      auto plus = x;
      auto minus = x;
      plus[i] += h;
      minus[i] -= h;
      const std::complex<double> lp = std::log(std::complex<double>(state.amplitude(plus)));
      const std::complex<double> lm = std::log(std::complex<double>(state.amplitude(minus)));
      v[i] = (lp - lm).imag() / (2.0 * h);
    }
    out.push_back(std::move(v));
  }
  return out;
}

double ModeExpansion::operator()(double t) const {
  const double s = std::abs(t);
  double sum = 0.0;
  for (std::size_t n = 0; n < rates.size(); ++n) sum += amplitudes[n] * std::exp(-rates[n] * s);
  return sum;
}

ModeExpansion nelson_mode_expansion(const CompositeState& state, const Observable& f, const Observable& g) {
  check_cluster(state, f);
  check_cluster(state, g);
  const SeparableForm form = separate_or_throw(state);
  const auto f_terms = to_channel_terms(form, f);
  const auto g_terms = to_channel_terms(form, g);
  const std::size_t channels = form.channels.size();

  std::vector<std::map<std::string, std::vector<double>>> needed(channels);
  for (const auto* terms : {&f_terms, &g_terms}) {
    for (const auto& t : *terms) {
      for (std::size_t c = 0; c < channels; ++c) {
        if (t.factors[c].empty()) continue;
        needed[c].emplace(t.labels[c], t.factors[c]);
      }
    }
  }
  ModeExpansion out;
  std::vector<std::optional<ChannelData>> data(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<double> w(form.channels[c].factor.values.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::abs(form.channels[c].factor.values[i]);
    out.weights.push_back(std::move(w));
    if (needed[c].empty()) continue;
    needed[c].emplace("1", std::vector<double>(form.channels[c].factor.grid.size(), 1.0));
    data[c] = channel_data(form.channels[c], needed[c]);
    for (const auto& [label, p] : data[c]->projections) {
      out.truncation_tail = std::max(out.truncation_tail, std::abs(p.deficit));
    }
  }

  std::map<std::tuple<std::size_t, std::string, std::string>, Exponentials> factor_cache;
  auto factor = [&](std::size_t c, const std::string& fl, const std::string& gl) -> const Exponentials& {
    const auto key = std::make_tuple(c, fl, gl);
    auto it = factor_cache.find(key);
    if (it != factor_cache.end()) return it->second;
    Exponentials e;
    if (fl == "1" && gl == "1") {
      e.emplace_back(0.0, 1.0);
    } else {
      const Grid& grid = form.channels[c].factor.grid;
      const auto& pf = data[c]->projections.at(fl);
      const auto& pg = data[c]->projections.at(gl);
      const auto& rates = data[c]->basis.rates;
      double captured = 0.0;
      for (std::size_t n = 0; n < rates.size(); ++n) {
        const double a = pf.coefficients[n] * pg.coefficients[n];
        captured += a;
        e.emplace_back(rates[n], a);
      }
      // The truncated tail decays at least as fast as the last retained mode;
      // lumping it there keeps the equal-time sum rule exact.
      const double tail = grid_dot(pf.weighted, pg.weighted, grid) - captured;
      e.emplace_back(rates.back(), tail);
      e = merge(std::move(e));
      out.channels.push_back({c, fl, gl, rates, pf.coefficients, pg.coefficients, pf.deficit, pg.deficit});
    }
    return factor_cache.emplace(key, std::move(e)).first->second;
  };

  Exponentials total;
  for (const auto& ft : f_terms) {
    for (const auto& gt : g_terms) {
      Exponentials prod{{0.0, ft.coefficient * gt.coefficient}};
      for (std::size_t c = 0; c < channels; ++c) {
        prod = multiply(prod, factor(c, ft.labels[c], gt.labels[c]));
      }
      total.insert(total.end(), prod.begin(), prod.end());
    }
  }
  total = merge(std::move(total));
  if (total.empty() || total.front().first != 0.0) total.insert(total.begin(), {0.0, 0.0});
  for (const auto& [r, a] : total) {
    out.rates.push_back(r);
    out.amplitudes.push_back(a);
  }
  return out;
}

std::string fingerprint(const CompositeState& state) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : state.terms()) {
    h = fnv_double(h, t.coefficient);
    for (std::size_t i : t.indices) h = fnv(h, &i, sizeof i);
  }
  for (std::size_t c = 0; c < state.cluster_count(); ++c) {
    const auto& es = state.clusters()[c];
    h = fnv_double(h, es.grid.x_min());
    h = fnv_double(h, es.grid.x_max());
    const std::size_t n = es.grid.size();
    h = fnv(h, &n, sizeof n);
    std::vector<bool> used(es.size(), false);
    for (const auto& t : state.terms()) used[t.indices[c]] = true;
    for (std::size_t k = 0; k < es.size(); ++k) {
      if (!used[k]) continue;
      h = fnv_double(h, es.energies[k]);
      for (double v : es.eigenfunctions[k].values) h = fnv_double(h, v);
    }
    if (es.potential) {
      const std::size_t kind = es.potential->kind().index();
      h = fnv(h, &kind, sizeof kind);
      for (double x : {-1.0, -0.3, 0.0, 0.7, 1.1}) {
        const double scaled = x * 0.5 * (es.grid.x_max() - es.grid.x_min());
        h = fnv_double(h, es.grid.contains(scaled) ? (*es.potential)(scaled) : 0.0);
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::shared_ptr<const ModeExpansion> ExpansionCache::get(const CompositeState& state, const Observable& f,
                                                         const Observable& g) {
  const std::string key = fingerprint(state) + "|" + f.describe() + "|" + g.describe();
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  auto value = std::make_shared<const ModeExpansion>(nelson_mode_expansion(state, f, g));
  std::unique_lock lock(mutex_);
  return entries_.emplace(key, std::move(value)).first->second;
}

std::size_t ExpansionCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

double nelson_semigroup_correlation(const CompositeState& state, const Observable& f, const Observable& g,
                                    double t, ExpansionCache* cache) {
  if (!std::isfinite(t)) throw ParameterError("time lag must be finite");
  if (cache) return (*cache->get(state, f, g))(t);
  return nelson_mode_expansion(state, f, g)(t);
}

CorrelationSeries nelson_spectral_series(const CompositeState& state, const Observable& f, const Observable& g,
                                         const std::vector<double>& lags, ExpansionCache* cache) {
  check_lags(lags);
  std::shared_ptr<const ModeExpansion> e =
      cache ? cache->get(state, f, g) : std::make_shared<const ModeExpansion>(nelson_mode_expansion(state, f, g));
  CorrelationSeries out{lags, {}, Method::nelson_spectral, std::nullopt};
  out.values.reserve(lags.size());
  for (double lag : lags) out.values.push_back((*e)(lag));
  return out;
}

TheoryComparison compare_theories(const CompositeState& state, const Observable& f, const Observable& g,
                                  const std::vector<double>& lags, ExpansionCache* cache) {
  TheoryComparison out;
  out.qm = qm_two_time_series(state, f, g, lags).series;
  out.bohm = bohm_two_time_series(state, f, g, lags);
  std::shared_ptr<const ModeExpansion> expansion;
  try {
    expansion = cache ? cache->get(state, f, g)
                      : std::make_shared<const ModeExpansion>(nelson_mode_expansion(state, f, g));
  } catch (const UnsupportedStateError& e) {
    out.nelson_unavailable = e.what();
  }
  const double qm0 = qm_multitime_correlation(state, {f, g}, {0.0, 0.0});
  const double bohm0 = bohm_multitime_correlation(state, {f, g}, {0.0, 0.0});
  out.equal_time_spread = std::abs(qm0 - bohm0);
  if (expansion) {
    CorrelationSeries n{lags, {}, Method::nelson_spectral, std::nullopt};
    for (double lag : lags) n.values.push_back((*expansion)(lag));
    const double n0 = (*expansion)(0.0);
    out.equal_time_spread = std::max({out.equal_time_spread, std::abs(qm0 - n0), std::abs(bohm0 - n0)});
    for (std::size_t i = 0; i < lags.size(); ++i) {
      out.max_abs_dev_qm_nelson = std::max(out.max_abs_dev_qm_nelson, std::abs(out.qm.values[i] - n.values[i]));
    }
    out.nelson = std::move(n);
  }
  for (std::size_t i = 0; i < lags.size(); ++i) {
    out.max_abs_dev_qm_bohm = std::max(out.max_abs_dev_qm_bohm, std::abs(out.qm.values[i] - out.bohm.values[i]));
  }
  if (out.equal_time_spread > 1e-6) {
    throw NumericError("backends disagree at equal times by " + std::to_string(out.equal_time_spread));
  }
  return out;
}

}  // namespace nelcorr
