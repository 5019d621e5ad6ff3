#include "nelcorr/observable.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "nelcorr/error.hpp"

namespace nelcorr {

Observable Observable::position(std::size_t cluster) { return {Kind::position, cluster}; }

Observable Observable::sign(std::size_t cluster) { return {Kind::sign, cluster}; }

Observable Observable::indicator(std::size_t cluster, double a, double b) {
  if (!(a < b)) throw ParameterError("indicator observable requires a < b");
  Observable o{Kind::indicator, cluster};
  o.a_ = a;
  o.b_ = b;
  return o;
}

Observable Observable::tabulated(std::size_t cluster, Grid grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw ParameterError("tabulated observable: sample count mismatch");
  for (double v : values) {
    if (!std::isfinite(v)) throw ParameterError("tabulated observable samples must be finite");
  }
  Observable o{Kind::tabulated, cluster};
  o.samples_ = std::move(values);
  o.t_min_ = grid.x_min();
  o.t_max_ = grid.x_max();
  o.t_n_ = grid.size();
  return o;
}

Observable Observable::constant(std::size_t cluster, double value) {
  if (!std::isfinite(value)) throw ParameterError("constant observable must be finite");
  Observable o{Kind::constant, cluster};
  o.a_ = value;
  return o;
}

double Observable::operator()(double x) const {
  switch (kind_) {
    case Kind::position:
      return x;
    case Kind::sign:
      return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Kind::indicator:
      return x >= a_ && x < b_ ? 1.0 : 0.0;
    case Kind::constant:
      return a_;
    case Kind::tabulated: {
      if (x < t_min_ || x > t_max_) return 0.0;
      return interpolate_linear(samples_, Grid(t_min_, t_max_, t_n_), x);
    }
  }
  return 0.0;
}

std::vector<double> Observable::sample(const Grid& grid) const {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = (*this)(grid[i]);
  return out;
}

bool Observable::bounded() const {
  switch (kind_) {
    case Kind::position:
      return false;
    case Kind::sign:
    case Kind::indicator:
      return true;
    case Kind::constant:
      return std::abs(a_) <= 1.0;
    case Kind::tabulated:
      for (double v : samples_) {
        if (std::abs(v) > 1.0) return false;
      }
      return true;
  }
  return false;
}

bool Observable::is_odd() const {
  switch (kind_) {
    case Kind::position:
    case Kind::sign:
      return true;
    case Kind::indicator:
      return false;
    case Kind::constant:
      return a_ == 0.0;
    case Kind::tabulated: {
      if (std::abs(t_min_ + t_max_) > 1e-12 * std::abs(t_max_)) return false;
      double peak = 0.0;
      for (double v : samples_) peak = std::max(peak, std::abs(v));
      for (std::size_t i = 0; i < t_n_; ++i) {
        if (std::abs(samples_[i] + samples_[t_n_ - 1 - i]) > 1e-12 * peak) return false;
      }
      return true;
    }
  }
  return false;
}

std::string Observable::describe() const {
  char buf[128];
  switch (kind_) {
    case Kind::position:
      std::snprintf(buf, sizeof buf, "position@%zu", cluster_);
      break;
    case Kind::sign:
      std::snprintf(buf, sizeof buf, "sign@%zu", cluster_);
      break;
    case Kind::indicator:
      std::snprintf(buf, sizeof buf, "indicator[%.17g,%.17g)@%zu", a_, b_, cluster_);
      break;
    case Kind::constant:
      std::snprintf(buf, sizeof buf, "constant(%.17g)@%zu", a_, cluster_);
      break;
    case Kind::tabulated: {
      std::size_t h = 0;
      for (double v : samples_) h = h * 1000003u ^ std::hash<double>{}(v);
      std::snprintf(buf, sizeof buf, "tabulated#%zx[%.17g,%.17g,%zu]@%zu", h, t_min_, t_max_, t_n_,
                    cluster_);
      break;
    }
  }
  return buf;
}

}  // namespace nelcorr
