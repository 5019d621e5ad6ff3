#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nelcorr/grid.hpp"

namespace nelcorr {

// Function of one cluster's position.
class Observable {
 public:
  enum class Kind { position, sign, indicator, tabulated, constant };

  static Observable position(std::size_t cluster);
  static Observable sign(std::size_t cluster);
  // 1 on [a, b), 0 elsewhere; requires a < b.
  static Observable indicator(std::size_t cluster, double a, double b);
  // Linear interpolation of samples, 0 outside the sample grid.
  static Observable tabulated(std::size_t cluster, Grid grid, std::vector<double> values);
  static Observable constant(std::size_t cluster, double value = 1.0);

  Kind kind() const { return kind_; }
  std::size_t cluster() const { return cluster_; }

  double operator()(double x) const;
  std::vector<double> sample(const Grid& grid) const;

  // |f| <= 1 everywhere; position is the only unbounded kind.
  bool bounded() const;
  // f(-x) = -f(x); tabulated samples are checked on a symmetric grid.
  bool is_odd() const;
  // Canonical text form, used as a cache key and in reports.
  std::string describe() const;

 private:
  Observable(Kind kind, std::size_t cluster) : kind_(kind), cluster_(cluster) {}

  Kind kind_;
  std::size_t cluster_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<double> samples_;
  double t_min_ = 0.0;
  double t_max_ = 1.0;
  std::size_t t_n_ = 0;
};

}  // namespace nelcorr
