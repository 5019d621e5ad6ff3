#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nelcorr {

// Uniform 1D grid including both endpoints.
class Grid {
 public:
  Grid(double x_min, double x_max, std::size_t n);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  double operator[](std::size_t i) const { return x_min_ + static_cast<double>(i) * h_; }

  std::vector<double> points() const;
  bool contains(double x) const;
  // True when x_min == -x_max to rounding.
  bool symmetric() const;
  // Index i with x_i <= x < x_{i+1}, clamped to [0, n-2].
  std::size_t cell(double x) const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_ == b.n_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double h_;
};

// Composite Simpson integral of samples on a uniform grid with spacing h.
// An odd number of intervals is handled with Simpson 3/8 on the last three.
double simpson(std::span<const double> samples, double h);

// Simpson value of the integral of f * g (* weight) over the grid.
// Throws ParameterError when sample counts do not match the grid.
double quadrature(std::span<const double> f, std::span<const double> g, const Grid& grid,
                  std::optional<std::span<const double>> weight = std::nullopt);

// Running integral from x_min to every grid point; quadratic on each pair of
// intervals so that the last value equals simpson() when n is odd.
std::vector<double> cumulative_integral(std::span<const double> samples, double h);

// Piecewise-linear interpolation; throws DomainError outside the grid.
double interpolate_linear(std::span<const double> samples, const Grid& grid, double x);

// First derivative samples by sixth-order central differences, dropping to
// lower order near the ends.
std::vector<double> derivative_samples(std::span<const double> samples, double h);

struct HermiteValue {
  double value;
  double derivative;
};

// Cubic Hermite interpolation from value and derivative samples.
// Caller guarantees x inside the grid.
inline HermiteValue interpolate_hermite(std::span<const double> f, std::span<const double> df,
                                        const Grid& grid, double x) {
  const std::size_t i = grid.cell(x);
  const double h = grid.spacing();
  const double s = (x - grid[i]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  const double value = h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1];
  const double d00 = (6 * s2 - 6 * s) / h;
  const double d10 = 3 * s2 - 4 * s + 1;
  const double d01 = (-6 * s2 + 6 * s) / h;
  const double d11 = 3 * s2 - 2 * s;
  const double derivative = d00 * f[i] + d10 * df[i] + d01 * f[i + 1] + d11 * df[i + 1];
  return {value, derivative};
}

}  // namespace nelcorr
