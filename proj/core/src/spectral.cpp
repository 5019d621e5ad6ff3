#include "nelcorr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "nelcorr/error.hpp"
#include "nelcorr/tridiagonal.hpp"

namespace nelcorr {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void normalize_on_grid(std::vector<double>& v, const Grid& grid) {
  const double norm = std::sqrt(quadrature(v, v, grid));
  if (!(norm > 0.0)) throw NumericError("eigenfunction with zero norm");
  for (double& x : v) x /= norm;
}

// Flip so the first sample above the node tolerance is positive.
void fix_sign(std::vector<double>& v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  for (double x : v) {
    if (std::abs(x) > 1e-9 * peak) {
      if (x < 0.0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

Parity detect_parity(const std::vector<double>& v, const Grid& grid) {
  if (!grid.symmetric()) return Parity::none;
  const std::size_t n = v.size();
  double peak = 0.0;
  double even_defect = 0.0;
  double odd_defect = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    peak = std::max(peak, std::abs(v[i]));
    even_defect = std::max(even_defect, std::abs(v[i] - v[n - 1 - i]));
    odd_defect = std::max(odd_defect, std::abs(v[i] + v[n - 1 - i]));
  }
  if (even_defect <= 1e-10 * peak) return Parity::even;
  if (odd_defect <= 1e-10 * peak) return Parity::odd;
  return Parity::none;
}

struct RawPair {
  double energy;
  std::vector<double> values;  // on the full grid
  Parity parity;
};

// Finite-difference Hamiltonian on the active index range [lo, hi] of a grid.
struct ActiveProblem {
  std::size_t lo;
  std::size_t hi;
  std::vector<double> diag;
  double off;
};

ActiveProblem build_problem(const Potential& potential, const Grid& grid) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  std::vector<double> v(n);
  std::vector<bool> active(n, false);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    v[i] = potential(grid[i]);
    if (std::isnan(v[i])) throw ParameterError("potential is NaN at x = " + std::to_string(grid[i]));
    active[i] = std::isfinite(v[i]);
  }
  std::size_t lo = 1;
  while (lo + 1 < n && !active[lo]) ++lo;
  if (lo + 1 >= n) throw ParameterError("potential is infinite on the whole grid interior");
  std::size_t hi = lo;
  while (hi + 2 < n && active[hi + 1]) ++hi;
  for (std::size_t i = hi + 1; i + 1 < n; ++i) {
    if (active[i]) throw ParameterError("potential must be finite on one contiguous region");
  }
  ActiveProblem p{lo, hi, {}, -0.5 / (h * h)};
  p.diag.resize(hi - lo + 1);
  for (std::size_t i = lo; i <= hi; ++i) p.diag[i - lo] = 1.0 / (h * h) + v[i];
  return p;
}

// Eigenpairs of the full active block embedded into the grid.
std::vector<RawPair> solve_block(const ActiveProblem& p, std::size_t n_grid, std::size_t count) {
  const std::size_t m = p.diag.size();
  std::vector<double> off(m - 1, p.off);
  auto pairs = lowest_eigenpairs(p.diag, off, std::min(count, m));
  std::vector<RawPair> out;
  for (std::size_t j = 0; j < pairs.values.size(); ++j) {
    std::vector<double> full(n_grid, 0.0);
    for (std::size_t i = 0; i < m; ++i) full[p.lo + i] = pairs.vectors[j][i];
    out.push_back({pairs.values[j], std::move(full), Parity::none});
  }
  return out;
}

// Mirror-symmetric block split into even and odd sectors.
std::vector<RawPair> solve_sector(const ActiveProblem& p, std::size_t n_grid, Parity parity,
                                  std::size_t count) {
  const std::size_t m = p.diag.size();
  std::vector<double> diag;
  std::vector<double> off;
  bool centre_point = m % 2 == 1;
  const std::size_t half = m / 2;
  if (!centre_point) {
    diag.assign(p.diag.begin(), p.diag.begin() + static_cast<std::ptrdiff_t>(half));
    off.assign(half - 1, p.off);
    diag.back() += parity == Parity::even ? p.off : -p.off;
  } else if (parity == Parity::even) {
    diag.assign(p.diag.begin(), p.diag.begin() + static_cast<std::ptrdiff_t>(half + 1));
    off.assign(half, p.off);
    off.back() = std::sqrt(2.0) * p.off;
  } else {
    if (half == 0) return {};
    diag.assign(p.diag.begin(), p.diag.begin() + static_cast<std::ptrdiff_t>(half));
    off.assign(half - 1, p.off);
  }
  if (diag.empty()) return {};
  const double sign = parity == Parity::even ? 1.0 : -1.0;
  auto pairs = lowest_eigenpairs(diag, off, std::min(count, diag.size()));
  std::vector<RawPair> out;
  for (std::size_t j = 0; j < pairs.values.size(); ++j) {
    const auto& u = pairs.vectors[j];
    std::vector<double> full(n_grid, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
      full[p.lo + i] = u[i];
      full[p.hi - i] = sign * u[i];
    }
    if (centre_point && parity == Parity::even) full[p.lo + half] = std::sqrt(2.0) * u[half];
    out.push_back({pairs.values[j], std::move(full), parity});
  }
  return out;
}

EigenSystem finish(const Grid& grid, std::vector<RawPair> raw, std::size_t k,
                   std::optional<Potential> potential) {
  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawPair& a, const RawPair& b) { return a.energy < b.energy; });
  if (raw.size() > k) raw.resize(k);
  EigenSystem es{grid, {}, {}, {}, {}, std::move(potential)};
  for (std::size_t j = 0; j < raw.size(); ++j) {
    auto& r = raw[j];
    normalize_on_grid(r.values, grid);
    fix_sign(r.values);
    const Parity parity = r.parity != Parity::none ? r.parity : detect_parity(r.values, grid);
    es.energies.push_back(r.energy);
    es.eigenfunctions.push_back(Wavefunction{grid, std::move(r.values), parity});
    es.domain_level.push_back(j);
  }
  return es;
}

bool mirror_symmetric(const Potential& potential, const Grid& grid, const ActiveProblem& p) {
  return grid.symmetric() && potential.symmetric() && p.lo + p.hi == grid.size() - 1;
}

std::vector<double> hermite_functions_at(double omega, std::size_t k, double x) {
  std::vector<double> psi(k);
  const double s = std::sqrt(omega);
  psi[0] = std::pow(omega / kPi, 0.25) * std::exp(-0.5 * omega * x * x);
  if (k > 1) psi[1] = std::sqrt(2.0) * s * x * psi[0];
  for (std::size_t n = 2; n < k; ++n) {
    const double dn = static_cast<double>(n);
    psi[n] = std::sqrt(2.0 / dn) * s * x * psi[n - 1] - std::sqrt((dn - 1.0) / dn) * psi[n - 2];
  }
  return psi;
}

// Mass of each Hermite function beyond `edge`, integrated away from the grid.
std::vector<double> hermite_tail_mass(double omega, std::size_t k, double edge, double direction) {
  const double reach = (std::sqrt(2.0 * static_cast<double>(k) + 1.0) + 40.0) / std::sqrt(omega);
  constexpr std::size_t kPoints = 8001;
  const double h = reach / static_cast<double>(kPoints - 1);
  std::vector<std::vector<double>> samples(k, std::vector<double>(kPoints));
  for (std::size_t i = 0; i < kPoints; ++i) {
    const auto psi = hermite_functions_at(omega, k, edge + direction * h * static_cast<double>(i));
    for (std::size_t n = 0; n < k; ++n) samples[n][i] = psi[n] * psi[n];
  }
  std::vector<double> mass(k);
  for (std::size_t n = 0; n < k; ++n) mass[n] = simpson(samples[n], h);
  return mass;
}

}  // namespace

const char* to_string(Parity p) {
  switch (p) {
    case Parity::even:
      return "even";
    case Parity::odd:
      return "odd";
    case Parity::none:
      break;
  }
  return "none";
}

Potential::Potential(Kind kind) : kind_(std::move(kind)) {
  std::visit(Overloaded{
                 [](const Harmonic& h) {
                   if (!(h.omega > 0.0)) throw ParameterError("harmonic potential requires omega > 0");
                 },
                 [](const InfiniteWell& w) {
                   if (!(w.half_width > 0.0)) throw ParameterError("infinite well requires L > 0");
                 },
                 [](const DoubleWell& d) {
                   if (!(d.barrier_height > 0.0) || !(d.well_separation > 0.0)) {
                     throw ParameterError("double well requires positive barrier and separation");
                   }
                 },
                 [](const Tabulated& t) {
                   if (t.values.size() != t.grid.size()) {
                     throw ParameterError("tabulated potential: sample count does not match grid");
                   }
                   for (double v : t.values) {
                     if (!std::isfinite(v)) throw ParameterError("tabulated potential must be finite");
                   }
                 },
             },
             kind_);
}

double Potential::operator()(double x) const {
  return std::visit(Overloaded{
                        [x](const Harmonic& h) { return 0.5 * h.omega * h.omega * x * x; },
                        [x](const InfiniteWell& w) {
                          return std::abs(x) < w.half_width ? 0.0
                                                            : std::numeric_limits<double>::infinity();
                        },
                        [x](const DoubleWell& d) {
                          const double w = 0.5 * d.well_separation;
                          const double q = x * x - w * w;
                          return d.barrier_height * q * q / (w * w * w * w);
                        },
                        [x](const Tabulated& t) { return interpolate_linear(t.values, t.grid, x); },
                    },
                    kind_);
}

bool Potential::symmetric() const {
  if (const auto* t = std::get_if<Tabulated>(&kind_)) {
    if (!t->grid.symmetric()) return false;
    const std::size_t n = t->values.size();
    double scale = 0.0;
    for (double v : t->values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(t->values[i] - t->values[n - 1 - i]) > 1e-12 * std::max(scale, 1.0)) return false;
    }
  }
  return true;
}

std::optional<double> Potential::harmonic_omega() const {
  if (const auto* h = std::get_if<Harmonic>(&kind_)) return h->omega;
  return std::nullopt;
}

double Wavefunction::norm() const { return std::sqrt(quadrature(values, values, grid)); }

double Wavefunction::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double Wavefunction::operator()(double x) const { return interpolate_linear(values, grid, x); }

Grid default_harmonic_grid(double omega) {
  if (!(omega > 0.0)) throw ParameterError("omega must be positive");
  const double r = 10.0 / std::sqrt(omega);
  return Grid(-r, r, 2000);
}

Grid default_box_grid(double half_width) {
  if (!(half_width > 0.0)) throw ParameterError("half-width must be positive");
  return Grid(-half_width, half_width, 2001);
}

EigenSystem harmonic_eigensystem(double omega, std::size_t k, const Grid& grid) {
  if (!(omega > 0.0)) throw ParameterError("harmonic_eigensystem: omega must be positive");
  if (k == 0) throw ParameterError("harmonic_eigensystem: k must be at least 1");
  const double span = 8.0 / std::sqrt(omega);
  if (grid.x_min() > -span || grid.x_max() < span) {
    throw DomainTruncationError("harmonic grid must span at least [-8/sqrt(omega), 8/sqrt(omega)]");
  }
  const auto right = hermite_tail_mass(omega, k, grid.x_max(), 1.0);
  const auto left = hermite_tail_mass(omega, k, grid.x_min(), -1.0);
  for (std::size_t n = 0; n < k; ++n) {
    if (right[n] + left[n] > 1e-10) {
      throw DomainTruncationError("harmonic eigenfunction " + std::to_string(n) + " has tail mass " +
                                  std::to_string(right[n] + left[n]) + " outside the grid");
    }
  }
  const std::size_t n_grid = grid.size();
  std::vector<std::vector<double>> values(k, std::vector<double>(n_grid));
  for (std::size_t i = 0; i < n_grid; ++i) {
    const auto psi = hermite_functions_at(omega, k, grid[i]);
    for (std::size_t n = 0; n < k; ++n) values[n][i] = psi[n];
  }
  EigenSystem es{grid, {}, {}, {}, {}, Potential::harmonic(omega)};
  for (std::size_t n = 0; n < k; ++n) {
    normalize_on_grid(values[n], grid);
    const Parity parity =
        grid.symmetric() ? (n % 2 == 0 ? Parity::even : Parity::odd) : Parity::none;
    es.energies.push_back((static_cast<double>(n) + 0.5) * omega);
    es.eigenfunctions.push_back(Wavefunction{grid, std::move(values[n]), parity});
    es.domain_level.push_back(n);
  }
  return es;
}

EigenSystem box_eigensystem(double half_width, std::size_t k, const Grid& grid) {
  if (!(half_width > 0.0)) throw ParameterError("box_eigensystem: L must be positive");
  const double L = half_width;
  const double tol = 1e-12 * L;
  if (grid.x_min() > -L + tol || grid.x_max() < L - tol) {
    throw ParameterError("box_eigensystem: grid must cover [-L, L]");
  }
  // Resolution limit: at least 8 grid intervals per half wavelength.
  const double inside = 2.0 * L / grid.spacing();
  const auto limit = static_cast<std::size_t>(inside / 8.0);
  if (k == 0 || k > limit) {
    throw ParameterError("box_eigensystem: k = " + std::to_string(k) + " outside [1, " +
                         std::to_string(limit) + "] for this grid");
  }
  EigenSystem es{grid, {}, {}, {}, {}, Potential::infinite_well(L)};
  const bool symmetric = grid.symmetric();
  for (std::size_t n = 0; n < k; ++n) {
    const double q = static_cast<double>(n + 1) * kPi / (2.0 * L);
    std::vector<double> v(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid[i];
      if (std::abs(x) < L) v[i] = std::sin(q * (x + L)) / std::sqrt(L);
    }
    normalize_on_grid(v, grid);
    const Parity parity = symmetric ? (n % 2 == 0 ? Parity::even : Parity::odd) : Parity::none;
    es.energies.push_back(q * q / 2.0);
    es.eigenfunctions.push_back(Wavefunction{grid, std::move(v), parity});
    es.domain_level.push_back(n);
  }
  return es;
}

EigenSystem solve_eigensystem(const Potential& potential, const Grid& grid, std::size_t k) {
  if (k == 0) throw ParameterError("solve_eigensystem: k must be at least 1");
  if (k > grid.size() - 2) {
    throw ParameterError("solve_eigensystem: k = " + std::to_string(k) + " exceeds n - 2 = " +
                         std::to_string(grid.size() - 2));
  }
  const ActiveProblem p = build_problem(potential, grid);
  if (k > p.diag.size()) {
    throw ParameterError("solve_eigensystem: k exceeds the number of interior points");
  }
  std::vector<RawPair> raw;
  if (mirror_symmetric(potential, grid, p)) {
    raw = solve_sector(p, grid.size(), Parity::even, k);
    auto odd = solve_sector(p, grid.size(), Parity::odd, k);
    std::move(odd.begin(), odd.end(), std::back_inserter(raw));
  } else {
    raw = solve_block(p, grid.size(), k);
  }
  return finish(grid, std::move(raw), k, potential);
}

namespace {

struct NodeScan {
  std::vector<double> nodes;
  bool unstable = false;
};

NodeScan scan_nodes(const Wavefunction& f, double tol) {
  const auto& v = f.values;
  const Grid& g = f.grid;
  const double threshold = tol * f.max_abs();
  NodeScan out;
  std::vector<double> raw;
  std::size_t last = v.size();  // index of last significant sample
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) <= threshold) continue;
    if (last != v.size() && (v[i] > 0.0) != (v[last] > 0.0)) {
      const double x0 = g[last];
      const double x1 = g[i];
      raw.push_back(x0 + (x1 - x0) * v[last] / (v[last] - v[i]));
    }
    last = i;
  }
  const double min_sep = 2.0 * g.spacing();
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (j + 1 < raw.size() && raw[j + 1] - raw[j] < min_sep) {
      out.unstable = true;
      ++j;
      continue;
    }
    out.nodes.push_back(raw[j]);
  }
  return out;
}

// Cubic Hermite resampling of sub-grid values onto the main grid inside [a, b].
std::vector<double> resample(const std::vector<double>& sub, const Grid& sub_grid, const Grid& grid,
                             double a, double b) {
  const auto d = derivative_samples(sub, sub_grid.spacing());
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    if (x <= a || x >= b) continue;
    out[i] = interpolate_hermite(sub, d, sub_grid, x).value;
  }
  return out;
}

}  // namespace

std::vector<double> find_nodes(const Wavefunction& f, double tol) { return scan_nodes(f, tol).nodes; }

EigenSystem dirichlet_restricted_eigensystem(const Potential& potential, const Wavefunction& state,
                                             const Grid& grid, std::size_t k) {
  if (k == 0) throw ParameterError("dirichlet_restricted_eigensystem: k must be at least 1");
  if (!(state.grid == grid)) throw ParameterError("state and grid differ");
  const NodeScan scan = scan_nodes(state, 1e-9);
  if (scan.unstable) {
    throw NodeDetectionError("state has sign flips closer than two grid spacings; nodes are unstable");
  }
  const auto& nodes = scan.nodes;

  if (nodes.empty()) {
    EigenSystem es = solve_eigensystem(potential, grid, k);
    es.boundary = Boundary{Boundary::Kind::dirichlet_at_nodes, {}};
    return es;
  }

  const double h = grid.spacing();
  if (nodes.size() == 1 && std::abs(nodes[0]) <= 1e-9 * (grid.x_max() - grid.x_min())) {
    const ActiveProblem p = build_problem(potential, grid);
    if (mirror_symmetric(potential, grid, p)) {
      // Odd sector == Dirichlet at the origin.  Each odd eigenfunction is the
      // odd continuation; multiplying by sign(x) gives the even one.
      auto odd = solve_sector(p, grid.size(), Parity::odd, (k + 1) / 2);
      EigenSystem es{grid, {}, {}, Boundary{Boundary::Kind::dirichlet_at_nodes, nodes}, {},
                     potential};
      for (std::size_t j = 0; j < odd.size() && es.size() < k; ++j) {
        auto v = odd[j].values;
        normalize_on_grid(v, grid);
        fix_sign(v);
        std::vector<double> even(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
          even[i] = grid[i] < 0.0 ? v[i] : -v[i];
        }
        fix_sign(even);
        es.energies.push_back(odd[j].energy);
        es.eigenfunctions.push_back(Wavefunction{grid, std::move(even), Parity::even});
        es.domain_level.push_back(j);
        if (es.size() < k) {
          es.energies.push_back(odd[j].energy);
          es.eigenfunctions.push_back(Wavefunction{grid, std::move(v), Parity::odd});
          es.domain_level.push_back(j);
        }
      }
      return es;
    }
  }

  struct Mode {
    double energy;
    std::vector<double> values;
    std::size_t level;
  };
  std::vector<Mode> modes;
  std::vector<double> edges;
  edges.push_back(grid.x_min());
  edges.insert(edges.end(), nodes.begin(), nodes.end());
  edges.push_back(grid.x_max());
  for (std::size_t d = 0; d + 1 < edges.size(); ++d) {
    const double a = edges[d];
    const double b = edges[d + 1];
    const auto n_sub = std::max<std::size_t>(
        4, static_cast<std::size_t>(std::llround((b - a) / h)) + 1);
    const Grid sub_grid(a, b, n_sub);
    const std::size_t count = std::min(k, n_sub - 2);
    EigenSystem sub = solve_eigensystem(potential, sub_grid, count);
    for (std::size_t j = 0; j < sub.size(); ++j) {
      auto v = resample(sub.eigenfunctions[j].values, sub_grid, grid, a, b);
      normalize_on_grid(v, grid);
      fix_sign(v);
      modes.push_back({sub.energies[j], std::move(v), j});
    }
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& x, const Mode& y) { return x.energy < y.energy; });
  if (modes.size() > k) modes.resize(k);
  EigenSystem es{grid, {}, {}, Boundary{Boundary::Kind::dirichlet_at_nodes, nodes}, {}, potential};
  for (auto& m : modes) {
    es.energies.push_back(m.energy);
    es.eigenfunctions.push_back(Wavefunction{grid, std::move(m.values), Parity::none});
    es.domain_level.push_back(m.level);
  }
  return es;
}

double inner_product(const Wavefunction& a, const Wavefunction& b) {
  if (!(a.grid == b.grid)) throw ParameterError("inner_product: wave functions on different grids");
  return quadrature(a.values, b.values, a.grid);
}

double orthonormality_defect(const EigenSystem& es) {
  double worst = 0.0;
  for (std::size_t i = 0; i < es.size(); ++i) {
    for (std::size_t j = i; j < es.size(); ++j) {
      const double g = inner_product(es.eigenfunctions[i], es.eigenfunctions[j]);
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace nelcorr
