#include "nelcorr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nelcorr/error.hpp"

namespace nelcorr {

Grid::Grid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
  if (n < 3) throw ParameterError("grid needs at least 3 points, got " + std::to_string(n));
  if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw ParameterError("grid requires finite x_min < x_max");
  }
  h_ = (x_max - x_min) / static_cast<double>(n - 1);
}

std::vector<double> Grid::points() const {
  std::vector<double> xs(n_);
  for (std::size_t i = 0; i < n_; ++i) xs[i] = (*this)[i];
  return xs;
}

bool Grid::contains(double x) const { return x >= x_min_ && x <= x_max_; }

bool Grid::symmetric() const {
  return std::abs(x_min_ + x_max_) <= 1e-12 * std::max(std::abs(x_min_), std::abs(x_max_));
}

std::size_t Grid::cell(double x) const {
  const double s = std::floor((x - x_min_) / h_);
  if (!(s > 0)) return 0;
  const auto i = static_cast<std::size_t>(s);
  return std::min(i, n_ - 2);
}

double simpson(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (f[0] + f[1]);
  const std::size_t intervals = n - 1;
  std::size_t simpson_end = intervals % 2 == 0 ? n - 1 : n - 4;
  double sum = 0.0;
  if (intervals == 3) {
    simpson_end = 0;
  } else {
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < simpson_end; ++i) (i % 2 == 1 ? odd : even) += f[i];
    sum = h / 3.0 * (f[0] + 4.0 * odd + 2.0 * even + f[simpson_end]);
  }
  if (intervals % 2 == 1) {
    const std::size_t j = simpson_end;
    sum += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
  }
  return sum;
}

double quadrature(std::span<const double> f, std::span<const double> g, const Grid& grid,
                  std::optional<std::span<const double>> weight) {
  const std::size_t n = grid.size();
  if (f.size() != n || g.size() != n || (weight && weight->size() != n)) {
    throw ParameterError("quadrature: samples do not match the grid");
  }
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = f[i] * g[i] * (weight ? (*weight)[i] : 1.0);
  return simpson(prod, grid.spacing());
}

std::vector<double> cumulative_integral(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  if (n == 2) {
    out[1] = 0.5 * h * (f[0] + f[1]);
    return out;
  }
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) {
    out[i + 1] = out[i] + h / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
    out[i + 2] = out[i] + h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  }
  if (i + 1 < n) out[i + 1] = out[i] + h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
  return out;
}

double interpolate_linear(std::span<const double> samples, const Grid& grid, double x) {
  if (!grid.contains(x)) {
    throw DomainError("point " + std::to_string(x) + " outside grid [" +
                      std::to_string(grid.x_min()) + ", " + std::to_string(grid.x_max()) + "]");
  }
  const std::size_t i = grid.cell(x);
  const double s = (x - grid[i]) / grid.spacing();
  return (1.0 - s) * samples[i] + s * samples[i + 1];
}

std::vector<double> derivative_samples(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 3 && i + 3 < n) {
      d[i] = (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2] +
              f[i + 3]) /
             (60.0 * h);
    } else if (i >= 2 && i + 2 < n) {
      d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    } else if (i >= 1 && i + 1 < n) {
      d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    } else if (i == 0) {
      d[i] = n >= 3 ? (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h) : (f[1] - f[0]) / h;
    } else {
      d[i] = n >= 3 ? (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
                    : (f[n - 1] - f[n - 2]) / h;
    }
  }
  return d;
}

}  // namespace nelcorr
