#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "nelcorr/correlators.hpp"
#include "nelcorr/error.hpp"
#include "nelcorr/nelson_sde.hpp"
#include "nelcorr/rng.hpp"

using namespace nelcorr;

namespace {

CompositeState single_level(std::size_t level, double omega = 1.0) {
  return build_composite_state({fixtures::oscillator(omega, level + 1)}, {{1.0, {level}}});
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::generate({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal draws have unit variance") {
  const CounterRng rng(7, Stream::noise);
  double s1 = 0.0;
  double s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n / 2; ++i) {
    const auto z = CounterRng::normals(rng.block(static_cast<std::uint64_t>(i), 0, 0));
    s1 += z[0] + z[1];
    s2 += z[0] * z[0] + z[1] * z[1];
  }
  CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("regularized drift values") {
  const auto excited = single_level(1);
  const auto d = regularized_drift(excited, 1e-3);
  CHECK(d.separable());
  CHECK(d.channel_drift(0, 2.0) == doctest::Approx(-1.5).epsilon(1e-6));
  CHECK(d.channel_drift(0, -2.0) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(d.channel_drift(0, 0.0) == 0.0);
  CHECK(d.channel_drift(0, 0.3) == doctest::Approx(1.0 / 0.3 - 0.3).epsilon(1e-5));

  const auto ground = single_level(0);
  const auto d0 = regularized_drift(ground, 1e-3);
  for (double x : {-12.0, -7.5, -3.0, -0.4, 0.0, 0.01, 1.7, 5.5, 9.9, 15.0}) {
    CHECK(std::abs(d0.channel_drift(0, x) + x) < 1e-8);
  }
  const auto narrow = regularized_drift(single_level(0, 2.5), 1e-3);
  CHECK(std::abs(narrow.channel_drift(0, 1.1) + 2.5 * 1.1) < 1e-8);
}

TEST_CASE("cosh patches are C1 and scale like 1/eps") {
  const auto state = single_level(1);
  for (double eps : {1e-1, 3e-2, 1e-3}) {
    const auto d = regularized_drift(state, eps);
    REQUIRE(d.patches().size() == 1);
    const auto& p = d.patches()[0];
    CHECK(std::abs(p.node) < 1e-9);
    for (const PatchSide& side : {p.left, p.right}) {
      CHECK(side.a > 0.0);
      const double z = side.b * eps;
      // g'' = b^2 g, so the curvature constants are z^2 on both sides.
      CHECK(z * z > 0.5);
      CHECK(z * z < 3.0);
    }
    for (int s : {-1, 1}) {
      const double edge = p.node + s * eps;
      const double inside = edge - s * 1e-12;
      const double outside = edge + s * 1e-12;
      CHECK(std::abs(d.channel_amplitude(0, inside) - d.channel_amplitude(0, outside)) < 1e-8);
      CHECK(std::abs(d.channel_drift(0, inside) - d.channel_drift(0, outside)) < 1e-8 * std::abs(d.channel_drift(0, outside)));
    }
  }
}

TEST_CASE("regularized drift preconditions") {
  const auto two_nodes = single_level(2);
  CHECK_NOTHROW(regularized_drift(two_nodes, 0.3));
  CHECK_THROWS_AS(regularized_drift(two_nodes, 0.8), ParameterError);
  CHECK_THROWS_AS(regularized_drift(two_nodes, 0.0), ParameterError);
  CHECK_THROWS_AS(regularized_drift(two_nodes, -1.0), ParameterError);
}

TEST_CASE("non-separable states use the soft regularization") {
  const auto es = fixtures::oscillator(1.0, 4);
  const double c = 1.0 / std::sqrt(3.0);
  const auto s = build_composite_state({es, es}, {{c, {0, 2}}, {c, {1, 1}}, {c, {2, 0}}});
  const auto d = regularized_drift(s, 1e-3);
  CHECK_FALSE(d.separable());
  // Away from nodes the soft drift is grad log psi.
  const std::vector<double> x{0.4, -1.3};
  std::vector<double> b(2);
  d.drift(x, b);
  const double h = 1e-5;
  for (std::size_t i = 0; i < 2; ++i) {
    auto p = x;
    auto m = x;
    p[i] += h;
    m[i] -= h;
    const double fd = (std::log(std::abs(s.amplitude(p))) - std::log(std::abs(s.amplitude(m)))) / (2 * h);
    CHECK(b[i] == doctest::Approx(fd).epsilon(1e-3));
  }
}

TEST_CASE("stationary sampling") {
  const auto prod = fixtures::ground_product();
  SUBCASE("Gaussian moments") {
    const std::size_t n = 100000;
    const auto xs = sample_stationary(prod, n, 11);
    double m = 0.0;
    double v = 0.0;
    for (const auto& x : xs) m += x[0];
    m /= n;
    for (const auto& x : xs) v += (x[0] - m) * (x[0] - m);
    v /= n - 1;
    CHECK(std::abs(m) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(v - 0.5) < 0.05 * 0.5);
  }
  SUBCASE("single draw inside the box") {
    const auto xs = sample_stationary(prod, 1, 3);
    REQUIRE(xs.size() == 1);
    CHECK(prod.clusters()[0].grid.contains(xs[0][0]));
    CHECK(prod.clusters()[1].grid.contains(xs[0][1]));
    CHECK_THROWS_AS(sample_stationary(prod, 0, 3), ParameterError);
  }
  SUBCASE("deterministic under seed") {
    CHECK(sample_stationary(prod, 50, 9) == sample_stationary(prod, 50, 9));
    CHECK(sample_stationary(prod, 50, 9) != sample_stationary(prod, 50, 10));
  }
  SUBCASE("entangled histogram matches density") {
    const auto state = fixtures::exchange_state();
    const std::size_t n = 100000;
    const auto xs = sample_stationary(state, n, 5);
    const int bins = 30;
    const double lo = -4.5;
    const double w = 9.0 / bins;
    std::vector<double> observed(bins * bins + 1, 0.0);
    for (const auto& x : xs) {
      const int i = static_cast<int>(std::floor((x[0] - lo) / w));
      const int j = static_cast<int>(std::floor((x[1] - lo) / w));
      if (i < 0 || j < 0 || i >= bins || j >= bins) {
        observed[bins * bins] += 1;
      } else {
        observed[i * bins + j] += 1;
      }
    }
    std::vector<double> expected(bins * bins + 1, 0.0);
    const int sub = 8;
    double inside = 0.0;
    for (int i = 0; i < bins; ++i) {
      for (int j = 0; j < bins; ++j) {
        double acc = 0.0;
        for (int a = 0; a < sub; ++a) {
          for (int b = 0; b < sub; ++b) {
            const std::vector<double> p{lo + (i + (a + 0.5) / sub) * w, lo + (j + (b + 0.5) / sub) * w};
            acc += density(state, p);
          }
        }
        expected[i * bins + j] = acc * w * w / (sub * sub);
        inside += expected[i * bins + j];
      }
    }
    expected[bins * bins] = 1.0 - inside;
    // Pool sparse cells so the chi-square approximation holds.
    double chi2 = 0.0;
    double pool_o = 0.0;
    double pool_e = 0.0;
    int cells = 0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const double e = expected[k] * n;
      if (e < 5.0) {
        pool_o += observed[k];
        pool_e += e;
        continue;
      }
      chi2 += (observed[k] - e) * (observed[k] - e) / e;
      ++cells;
    }
    if (pool_e > 0.0) {
      chi2 += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
      ++cells;
    }
    const boost::math::chi_squared dist(cells - 1);
    const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    CHECK(p_value > 0.01);
  }
}

TEST_CASE("ensemble mechanics") {
  SUBCASE("Brownian baseline") {
    const FunctionDrift zero(1, [](auto, auto out) { out[0] = 0.0; });
    const std::size_t n = 20000;
    const std::vector<std::vector<double>> init(n, std::vector<double>{0.0});
    const auto e = simulate_ensemble(zero, init, {1e-2, 2.0, 1.0, 4, 1});
    double v = 0.0;
    for (std::size_t p = 0; p < n; ++p) v += e.at(p, e.time_index(2.0), 0) * e.at(p, e.time_index(2.0), 0);
    v /= n;
    CHECK(std::abs(v - 2.0) < 3.0 * 2.0 * std::sqrt(2.0 / n));
    CHECK(e.t_grid.size() == 3);
    CHECK(e.clamp_rate == 0.0);

    const std::vector<std::vector<double>> one(1, std::vector<double>{0.0});
    const auto single = simulate_ensemble(zero, one, {1e-2, 2.0, 0.0, 4, 1});
    CHECK(single.t_grid.size() == 201);
  }
  SUBCASE("bitwise determinism across thread counts") {
    const auto state = fixtures::exchange_state();
    const auto drift = regularized_drift(state, 1e-3);
    const auto init = sample_stationary(state, 257, 21);
    const auto a = simulate_ensemble(drift, init, {1e-3, 0.2, 0.1, 21, 1});
    const auto b = simulate_ensemble(drift, init, {1e-3, 0.2, 0.1, 21, 3});
    CHECK(a.positions == b.positions);
    CHECK(a.clamped_steps == b.clamped_steps);
    const auto c = simulate_ensemble(drift, init, {1e-3, 0.2, 0.1, 22, 1});
    CHECK(a.positions != c.positions);
  }
  SUBCASE("option validation") {
    const FunctionDrift zero(1, [](auto, auto out) { out[0] = 0.0; });
    const std::vector<std::vector<double>> init(1, std::vector<double>{0.0});
    CHECK_THROWS_AS(simulate_ensemble(zero, init, {0.0, 1.0, 0.0, 1, 1}), ParameterError);
    CHECK_THROWS_AS(simulate_ensemble(zero, init, {0.1, 0.05, 0.0, 1, 1}), ParameterError);
    CHECK_THROWS_AS(simulate_ensemble(zero, init, {0.1, 1.0, 0.25, 1, 1}), ParameterError);
    const auto e = simulate_ensemble(zero, init, {0.1, 1.0, 0.5, 1, 1});
    CHECK_THROWS_AS(e.time_index(0.3), ParameterError);
  }
  SUBCASE("clamp telemetry") {
    const FunctionDrift wild(1, [](auto y, auto out) { out[0] = -1e6 * y[0]; });
    const std::vector<std::vector<double>> init(10, std::vector<double>{1.0});
    CHECK_THROWS_AS(simulate_ensemble(wild, init, {1e-2, 1.0, 0.0, 1, 1}), StepSizeError);
    const FunctionDrift nan(1, [](auto, auto out) { out[0] = std::nan(""); });
    CHECK_THROWS_AS(simulate_ensemble(nan, init, {1e-2, 1.0, 0.0, 1, 1}), NumericError);
  }
}

TEST_CASE("estimators on small ensembles") {
  const auto prod = fixtures::ground_product();
  McParams params{20000, 1e-3, 31, 1};
  const auto e = run_nelson_mc(prod, 1e-3, params, 1.0, 0.5);
  const auto one = Observable::constant(0);
  const auto est = estimate_two_time(e, one, Observable::constant(1), 1.0, 0.0);
  CHECK(est.value == 1.0);
  CHECK(est.stderr_value == 0.0);

  const auto x1 = Observable::position(0);
  const auto x2 = Observable::position(1);
  const auto ou = estimate_two_time(e, x1, x1, 1.0, 0.0);
  CHECK(std::abs(ou.value - std::exp(-1.0) / 2) < 3.0 * ou.stderr_value);

  const auto fwd = estimate_two_time(e, x1, Observable::sign(0), 1.0, 0.0);
  const auto bwd = estimate_two_time(e, Observable::sign(0), x1, 0.0, 1.0);
  CHECK(std::abs(fwd.value - bwd.value) < 3.0 * std::hypot(fwd.stderr_value, bwd.stderr_value));

  const auto joint = estimate_two_time(e, x1, x2, 1.0, 0.0);
  const auto m1 = estimate_two_time(e, x1, one, 1.0, 0.0);
  const auto m2 = estimate_two_time(e, one, x2, 0.0, 0.0);
  CHECK(std::abs(joint.value - m1.value * m2.value) < 3.0 * joint.stderr_value);

  CHECK_THROWS_AS(estimate_two_time(e, x1, x2, 0.7, 0.0), ParameterError);

  const double band = 1.63 / std::sqrt(static_cast<double>(params.n_paths));
  for (double t : {0.0, 1.0}) {
    for (double ks : stationarity_distance(e, prod, t)) CHECK(ks < band);
  }
}

TEST_CASE("node repulsion and negative control") {
  const auto excited = single_level(1);
  McParams params{20000, 1e-3, 41, 1};
  const auto e = run_nelson_mc(excited, 1e-3, params, 2.0, 1.0);
  // Euler-Maruyama jumps the node with probability ~ dt^{3/2} per step near
  // it.  An independent NumPy simulation gives 0.64% at dt = 1e-3 and the
  // analytic per-step estimate 0.71%; the fraction falls like sqrt(dt).
  CHECK(e.sign_change_fraction > 0.004);
  CHECK(e.sign_change_fraction < 0.010);
  CHECK(e.clamp_rate < 0.01);
  const auto fine = run_nelson_mc(excited, 1e-3, {4000, 1e-4, 42, 1}, 2.0, 1.0);
  CHECK(fine.sign_change_fraction < 0.005);

  const auto ground = single_level(0);
  const auto drift = regularized_drift(ground, 1e-3);
  const FlippedDrift flipped(drift);
  const auto init = sample_stationary(ground, 20000, 43);
  const auto bad = simulate_ensemble(flipped, init, {1e-3, 2.0, 1.0, 43, 1});
  CHECK(stationarity_distance(bad, ground, 2.0)[0] > 1.63 / std::sqrt(20000.0));
}

TEST_CASE("epsilon study preconditions and nodeless flatness") {
  const auto prod = fixtures::ground_product();
  McParams params{5000, 1e-3, 51, 1};
  const auto x1 = Observable::position(0);
  CHECK_THROWS_AS(epsilon_convergence_study(prod, x1, x1, 0.5, {0.01, 0.1}, params), ParameterError);
  CHECK_THROWS_AS(epsilon_convergence_study(prod, x1, x1, 0.5, {}, params), ParameterError);
  CHECK_THROWS_AS(epsilon_convergence_study(single_level(2), x1, x1, 0.5, {0.9, 0.1}, params), ParameterError);
  const auto rows = epsilon_convergence_study(prod, x1, x1, 0.5, {0.1, 0.03, 0.01}, params);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.value == rows[0].value);
    CHECK(r.spectral_ref == doctest::Approx(std::exp(-0.5) / 2).epsilon(1e-4));
  }
}
