#include "nelcorr/bell.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "nelcorr/error.hpp"

namespace nelcorr {
namespace {

constexpr double kPivotTol = 1e-12;

int spin(std::size_t atom, int bit) { return (atom >> bit) & 1U ? 1 : -1; }

void check_unit(double v, const char* what) {
  if (!(std::abs(v) <= 1.0)) throw ParameterError(std::string(what) + " must lie in [-1, 1]");
}

// Largest |psi(x) - s psi(-x)| relative to max |psi| on a symmetric grid.
double parity_defect(const Wavefunction& w, double s) {
  const std::size_t n = w.values.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(w.values[i] - s * w.values[n - 1 - i]));
  return worst / w.max_abs();
}

// Phase-one simplex on A p = b, p >= 0 with Bland's rule.  Returns p when the
// artificial objective reaches zero.
std::optional<std::array<double, 16>> phase_one(std::vector<std::array<double, 16>> a, std::vector<double> b) {
  const std::size_t m = a.size();
  const std::size_t n = 16;
  const std::size_t cols = n + m;
  std::vector<std::vector<double>> t(m, std::vector<double>(cols + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t[i][j] = s * a[i][j];
    t[i][n + i] = 1.0;
    t[i][cols] = s * b[i];
    basis[i] = n + i;
  }
  std::vector<double> cost(cols + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= cols; ++j) {
      if (j < n || j == cols) cost[j] -= t[i][j];
    }
  }
  for (int iter = 0; iter < 10000; ++iter) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols; ++j) {
      if (cost[j] < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter == cols) break;
    std::size_t leave = m;
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] <= kPivotTol) continue;
      const double ratio = t[i][cols] / t[i][enter];
      if (leave == m || ratio < best - kPivotTol ||
          (std::abs(ratio - best) <= kPivotTol && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave == m) break;  // unbounded direction cannot occur in phase one
    const double pivot = t[leave][enter];
    for (double& v : t[leave]) v /= pivot;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave || t[i][enter] == 0.0) continue;
      const double f = t[i][enter];
      for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= f * t[leave][j];
    }
    const double f = cost[enter];
    for (std::size_t j = 0; j <= cols; ++j) cost[j] -= f * t[leave][j];
    basis[leave] = enter;
  }
  double infeasibility = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] >= n) infeasibility += std::abs(t[i][cols]);
  }
  if (infeasibility > 1e-10) return std::nullopt;
  std::array<double, 16> p{};
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) p[basis[i]] = std::max(0.0, t[i][cols]);
  }
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return p;
}

// Integral of a * f * b over a symmetric grid, split at the origin so that a
// jump of f there falls on a panel boundary.  Grids without a node at the
// origin are first resampled (cubic Hermite) onto one more point.
double split_quadrature(const std::vector<double>& a, const std::vector<double>& b, const Observable& f,
                        const Grid& grid) {
  Grid g = grid;
  std::vector<double> av = a;
  std::vector<double> bv = b;
  if (grid.size() % 2 == 0) {
    g = Grid(grid.x_min(), grid.x_max(), grid.size() + 1);
    const auto da = derivative_samples(a, grid.spacing());
    const auto db = derivative_samples(b, grid.spacing());
    av.assign(g.size(), 0.0);
    bv.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = std::clamp(g[i], grid.x_min(), grid.x_max());
      av[i] = interpolate_hermite(a, da, grid, x).value;
      bv[i] = interpolate_hermite(b, db, grid, x).value;
    }
  }
  const std::size_t mid = (g.size() - 1) / 2;
  const double nudge = 1e-9 * g.spacing();
  std::vector<double> left(mid + 1);
  std::vector<double> right(g.size() - mid);
  for (std::size_t i = 0; i <= mid; ++i) left[i] = av[i] * bv[i] * f(i == mid ? -nudge : g[i]);
  for (std::size_t i = mid; i < g.size(); ++i) right[i - mid] = av[i] * bv[i] * f(i == mid ? nudge : g[i]);
  return simpson(left, g.spacing()) + simpson(right, g.spacing());
}

}  // namespace

ChshTimes standard_times(double omega) {
  if (!(omega > 0.0)) throw ParameterError("omega must be positive");
  const double q = std::numbers::pi / omega;
  return {0.0, q / 2.0, q / 4.0, 3.0 * q / 4.0};
}

double alpha(const EigenSystem& es, const Observable& f) {
  if (es.size() < 2) throw ParameterError("alpha needs the two lowest eigenfunctions");
  if (!es.grid.symmetric()) throw ParameterError("alpha requires a grid symmetric about the origin");
  const auto& psi0 = es.eigenfunctions[0];
  const auto& psi1 = es.eigenfunctions[1];
  if (parity_defect(psi0, 1.0) > 1e-8) throw ParameterError("psi_0 is not even");
  if (parity_defect(psi1, -1.0) > 1e-8) throw ParameterError("psi_1 is not odd");
  if (!f.is_odd()) throw ParameterError("alpha requires an odd observable, got " + f.describe());
  const double d0 = split_quadrature(psi0.values, psi0.values, f, es.grid);
  const double d1 = split_quadrature(psi1.values, psi1.values, f, es.grid);
  if (std::abs(d0) > 1e-8 || std::abs(d1) > 1e-8) {
    throw ParameterError("diagonal matrix elements of f do not vanish");
  }
  return split_quadrature(psi0.values, psi1.values, f, es.grid);
}

Matrix2 chsh_correlations(double alpha_value, double omega, const ChshTimes& times) {
  if (!(omega > 0.0)) throw ParameterError("omega must be positive");
  const double t[2] = {times.t1, times.t2};
  const double s[2] = {times.s1, times.s2};
  Matrix2 e{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) e[i][j] = -alpha_value * alpha_value * std::cos(omega * (t[i] - s[j]));
  }
  return e;
}

double chsh_value(const Matrix2& e) {
  for (const auto& row : e) {
    for (double v : row) check_unit(v, "correlations");
  }
  return e[0][0] + e[1][1] + e[1][0] - e[0][1];
}

bool ClassicalModel::valid() const {
  double sum = 0.0;
  for (double p : atoms) {
    if (!(p >= 0.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= 1e-12;
}

Matrix2 ClassicalModel::correlations() const {
  Matrix2 e{};
  for (std::size_t k = 0; k < 16; ++k) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) e[i][j] += atoms[k] * spin(k, i) * spin(k, 2 + j);
    }
  }
  return e;
}

std::array<double, 4> ClassicalModel::marginals() const {
  std::array<double, 4> m{};
  for (std::size_t k = 0; k < 16; ++k) {
    for (int b = 0; b < 4; ++b) m[b] += atoms[k] * spin(k, b);
  }
  return m;
}

std::vector<ChshInequality> chsh_inequalities(const Matrix2& e) {
  std::vector<ChshInequality> out;
  for (int mask = 0; mask < 16; ++mask) {
    if (std::popcount(static_cast<unsigned>(mask)) % 2 == 0) continue;
    ChshInequality q{};
    q.value = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        q.signs[i][j] = (mask >> (2 * i + j)) & 1 ? -1 : 1;
        q.value += q.signs[i][j] * e[i][j];
      }
    }
    out.push_back(q);
  }
  return out;
}

Realizability classical_realizability(const Matrix2& e, const std::array<double, 4>& marginals) {
  for (const auto& row : e) {
    for (double v : row) check_unit(v, "correlations");
  }
  for (double m : marginals) check_unit(m, "marginals");

  Realizability r{false, std::nullopt, std::nullopt, true};
  for (const auto& q : chsh_inequalities(e)) {
    if (q.value > 2.0 + 1e-12) r.inequalities_hold = false;
    if (q.value > 2.0 && (!r.violated || q.value > r.violated->value)) r.violated = q;
  }

  // Independent spins reproduce the data whenever E factorizes; this gives the
  // uniform witness for E = 0 with zero marginals.
  bool independent = true;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (std::abs(e[i][j] - marginals[i] * marginals[2 + j]) > 1e-12) independent = false;
    }
  }
  if (independent) {
    ClassicalModel m;
    for (std::size_t k = 0; k < 16; ++k) {
      double p = 1.0;
      for (int b = 0; b < 4; ++b) p *= 0.5 * (1.0 + spin(k, b) * marginals[b]);
      m.atoms[k] = p;
    }
    r.feasible = true;
    r.model = m;
    return r;
  }

  std::vector<std::array<double, 16>> a;
  std::vector<double> b;
  std::array<double, 16> row{};
  row.fill(1.0);
  a.push_back(row);
  b.push_back(1.0);
  for (int bit = 0; bit < 4; ++bit) {
    for (std::size_t k = 0; k < 16; ++k) row[k] = spin(k, bit);
    a.push_back(row);
    b.push_back(marginals[bit]);
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 16; ++k) row[k] = spin(k, i) * spin(k, 2 + j);
      a.push_back(row);
      b.push_back(e[i][j]);
    }
  }
  if (auto p = phase_one(a, b)) {
    r.feasible = true;
    r.model = ClassicalModel{*p};
  }
  return r;
}

ChshReport chsh_report(const EigenSystem& es, const Observable& f, const std::optional<ChshTimes>& times) {
  const double a = alpha(es, f);
  const double omega = es.energies[1] - es.energies[0];
  const ChshTimes t = times ? *times : standard_times(omega);
  ChshReport r{a, omega, t, chsh_correlations(a, omega, t), {}, 0.0, false, std::nullopt};
  // Single-observable means in the two-level state: (f_00 + f_11) / 2, zero by parity.
  const double d0 = split_quadrature(es.eigenfunctions[0].values, es.eigenfunctions[0].values, f, es.grid);
  const double d1 = split_quadrature(es.eigenfunctions[1].values, es.eigenfunctions[1].values, f, es.grid);
  r.marginals.fill(0.5 * (d0 + d1));
  r.S = chsh_value(r.correlations);
  const auto real = classical_realizability(r.correlations, r.marginals);
  r.classical_feasible = real.feasible;
  r.violated = real.violated;
  return r;
}

ProductModel product_classical_model(const std::vector<Arrangement>& arrangements) {
  if (arrangements.empty()) throw ParameterError("no arrangements given");
  for (std::size_t i = 0; i < arrangements.size(); ++i) {
    const auto& p = arrangements[i].probabilities;
    if (p.empty()) throw ParameterError("arrangement " + std::to_string(i) + " has no outcomes");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw ParameterError("arrangement " + std::to_string(i) + " has a negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ParameterError("arrangement " + std::to_string(i) + " probabilities do not sum to 1");
    }
    for (std::size_t j = 0; j < i; ++j) {
      for (const auto& name : arrangements[i].observables) {
        const auto& other = arrangements[j].observables;
        if (std::find(other.begin(), other.end(), name) != other.end()) {
          throw TransitivityError("arrangements " + std::to_string(j) + " and " + std::to_string(i) +
                                  " share observable '" + name + "'; no joint product model exists");
        }
      }
    }
  }
  ProductModel model;
  std::size_t total = 1;
  for (const auto& a : arrangements) {
    model.shape.push_back(a.probabilities.size());
    total *= a.probabilities.size();
  }
  model.probabilities.assign(total, 1.0);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (std::size_t i = arrangements.size(); i-- > 0;) {
      const std::size_t n = model.shape[i];
      model.probabilities[k] *= arrangements[i].probabilities[rest % n];
      rest /= n;
    }
  }
  // Marginalize back onto each arrangement.
  std::size_t stride = total;
  for (std::size_t i = 0; i < arrangements.size(); ++i) {
    const std::size_t n = model.shape[i];
    stride /= n;
    std::vector<double> marginal(n, 0.0);
    for (std::size_t k = 0; k < total; ++k) marginal[(k / stride) % n] += model.probabilities[k];
    for (std::size_t o = 0; o < n; ++o) {
      model.max_marginal_error =
          std::max(model.max_marginal_error, std::abs(marginal[o] - arrangements[i].probabilities[o]));
    }
  }
  if (model.max_marginal_error > 1e-12) {
    throw NumericError("product model marginals deviate by " + std::to_string(model.max_marginal_error));
  }
  return model;
}

}  // namespace nelcorr
