#include "nelcorr/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nelcorr/error.hpp"

namespace nelcorr {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kInverseIterationCap = 8;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void normalize(std::vector<double>& v) {
  const double norm = std::sqrt(dot(v, v));
  for (double& x : v) x /= norm;
}

// Solves (T - shift) x = rhs in place by tridiagonal LU with partial pivoting.
void solve_shifted(std::span<const double> diag, std::span<const double> off, double shift,
                   double tiny, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (n == 1) {
    const double d0 = diag[0] - shift;
    rhs[0] /= d0 == 0.0 ? tiny : d0;
    return;
  }
  std::vector<double> d(n), dl(off.begin(), off.end()), du(off.begin(), off.end()), du2(n, 0.0);
  std::vector<bool> swapped(n, false);
  for (std::size_t i = 0; i < n; ++i) d[i] = diag[i] - shift;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = tiny;
      const double fact = dl[i] / d[i];
      dl[i] = fact;
      d[i + 1] -= fact * du[i];
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = fact;
      const double temp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = temp - fact * d[i + 1];
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
      swapped[i] = true;
    }
  }
  if (d[n - 1] == 0.0) d[n - 1] = tiny;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!swapped[i]) {
      rhs[i + 1] -= dl[i] * rhs[i];
    } else {
      const double temp = rhs[i];
      rhs[i] = rhs[i + 1];
      rhs[i + 1] = temp - dl[i] * rhs[i];
    }
  }
  rhs[n - 1] /= d[n - 1];
  rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
  for (std::size_t k = n - 2; k-- > 0;) {
    rhs[k] = (rhs[k] - du[k] * rhs[k + 1] - du2[k] * rhs[k + 2]) / d[k];
  }
  for (double& x : rhs) {
    if (!std::isfinite(x)) x = std::copysign(1.0 / tiny, x);
  }
}

}  // namespace

std::size_t sturm_count(std::span<const double> diag, std::span<const double> off, double lambda) {
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : off[i - 1] * off[i - 1];
    q = diag[i] - lambda - (i == 0 ? 0.0 : e2 / q);
    if (q == 0.0) q = -kEps * (std::abs(diag[i]) + std::abs(lambda) + 1.0);
    if (q < 0.0) ++count;
  }
  return count;
}

TridiagonalEigenpairs lowest_eigenpairs(std::span<const double> diag, std::span<const double> off,
                                        std::size_t count) {
  const std::size_t n = diag.size();
  if (n == 0 || off.size() + 1 != n) throw ParameterError("tridiagonal: inconsistent sizes");
  if (count == 0 || count > n) {
    throw ParameterError("tridiagonal: requested " + std::to_string(count) +
                         " eigenpairs of an order-" + std::to_string(n) + " matrix");
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double norm = std::max(std::abs(lo), std::abs(hi));
  const double pad = 2.0 * kEps * norm + std::numeric_limits<double>::min();
  lo -= pad;
  hi += pad;

  TridiagonalEigenpairs out;
  out.values.resize(count);
  // Bisection for the j-th eigenvalue: smallest lambda with sturm_count > j.
  double left = lo;
  for (std::size_t j = 0; j < count; ++j) {
    double a = left;
    double b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (sturm_count(diag, off, mid) > j) {
        b = mid;
      } else {
        a = mid;
      }
      if (b - a <= 2.0 * kEps * std::max(std::abs(a), std::abs(b))) break;
    }
    out.values[j] = 0.5 * (a + b);
    left = a;
  }

  const double tiny = kEps * norm;
  const double cluster_gap = 1e-7 * norm;
  out.vectors.reserve(count);
  std::size_t cluster_start = 0;
  for (std::size_t j = 0; j < count; ++j) {
    if (j > 0 && out.values[j] - out.values[j - 1] > cluster_gap) cluster_start = j;
    // Deterministic start vector that is not orthogonal to low modes.
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i + 1) * static_cast<double>(j + 1));
    }
    normalize(v);
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < kInverseIterationCap; ++it) {
      solve_shifted(diag, off, out.values[j], tiny, v);
      for (std::size_t k = cluster_start; k < j; ++k) {
        const double p = dot(v, out.vectors[k]);
        for (std::size_t i = 0; i < n; ++i) v[i] -= p * out.vectors[k][i];
      }
      normalize(v);
      residual = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double tv = diag[i] * v[i];
        if (i > 0) tv += off[i - 1] * v[i - 1];
        if (i + 1 < n) tv += off[i] * v[i + 1];
        residual = std::max(residual, std::abs(tv - out.values[j] * v[i]));
      }
      if (it >= 1 && residual <= 1e3 * kEps * norm) break;
    }
    if (!(residual <= 1e5 * kEps * norm)) {
      throw NumericError("inverse iteration did not converge for eigenvalue " + std::to_string(j) +
                         " (residual " + std::to_string(residual) + ")");
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace nelcorr
