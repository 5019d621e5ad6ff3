#include <doctest.h>

#include <cmath>
#include <numbers>
#include <thread>

#include "fixtures.hpp"
#include "nelcorr/correlators.hpp"
#include "nelcorr/error.hpp"
#include "nelcorr/separation.hpp"

using namespace nelcorr;
using std::numbers::pi;

namespace {

std::vector<double> range(double start, double stop, double step) {
  std::vector<double> out;
  for (double t = start; t <= stop + 1e-12; t += step) out.push_back(t);
  return out;
}

// Reference values of (1/2)(sum_odd |c_n|^2 e^{-(n-1)t} - e^{-t}/2), omega = 1,
// from an independent Gauss-Laguerre evaluation of the half-line overlaps.
constexpr double kNelson05 = 0.5248036067;
constexpr double kNelson1 = 0.5591095580;
constexpr double kNelson2 = 0.6047310879;
constexpr double kNelsonPi = 0.6260144531;

}  // namespace

TEST_CASE("observables") {
  CHECK(Observable::sign(0)(-2.0) == -1.0);
  CHECK(Observable::sign(0)(0.0) == 0.0);
  CHECK(Observable::indicator(0, -1.0, 1.0)(1.0) == 0.0);
  CHECK(Observable::indicator(0, -1.0, 1.0)(-1.0) == 1.0);
  CHECK_THROWS_AS(Observable::indicator(0, 1.0, 1.0), ParameterError);
  CHECK_FALSE(Observable::position(0).bounded());
  CHECK(Observable::sign(1).bounded());
  CHECK(Observable::sign(1).is_odd());
  const Grid g(-1.0, 1.0, 5);
  const auto tab = Observable::tabulated(0, g, {-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(tab.is_odd());
  CHECK(tab(0.25) == doctest::Approx(0.25));
  CHECK(tab(3.0) == 0.0);
  CHECK(Observable::position(0).describe() != Observable::position(1).describe());
}

TEST_CASE("separation of the exchange state") {
  const auto state = fixtures::exchange_state();
  const auto form = separate_or_throw(state);
  REQUIRE(form.channels.size() == 2);
  CHECK(form.channels[0].energy == doctest::Approx(1.5));
  CHECK(form.channels[1].energy == doctest::Approx(0.5));
  const std::vector<double> x{0.3, -0.7};
  const auto y = form.to_channels(x);
  const auto back = form.to_clusters(y);
  CHECK(back[0] == doctest::Approx(0.3));
  CHECK(back[1] == doctest::Approx(-0.7));
  CHECK(separate(fixtures::ground_product()).form.has_value());

  SUBCASE("three-term states are rejected with a reason") {
    const auto es = fixtures::oscillator(1.0, 4);
    const double c = 1.0 / std::sqrt(3.0);
    const auto s = build_composite_state({es, es}, {{c, {0, 2}}, {c, {1, 1}}, {c, {2, 0}}});
    const auto r = separate(s);
    CHECK_FALSE(r.form.has_value());
    CHECK_FALSE(r.reason.empty());
    CHECK_THROWS_AS(nelson_mode_expansion(s, Observable::position(0), Observable::position(1)),
                    UnsupportedStateError);
  }
  SUBCASE("rotated channels reject non-linear observables") {
    CHECK_THROWS_AS(to_channel_terms(form, Observable::sign(0)), UnsupportedStateError);
  }
}

TEST_CASE("QM correlator on the exchange state") {
  const auto state = fixtures::exchange_state();
  const auto x1 = Observable::position(0);
  const auto x2 = Observable::position(1);
  CHECK(qm_multitime_correlation(state, {x1, x2}, {0.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(qm_multitime_correlation(state, {x1, x2}, {1.3, 0.4}) == doctest::Approx(std::cos(0.9) / 2).epsilon(1e-10));

  const auto lags = range(0.0, 4 * pi, pi / 16);
  const auto qm = qm_two_time_series(state, x1, x2, lags);
  double worst = 0.0;
  double trig = 0.0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    worst = std::max(worst, std::abs(qm.series.values[i] - std::cos(lags[i]) / 2));
    double fromc = 0.0;
    for (const auto& c : qm.components) fromc += c.amplitude * std::cos(c.omega * lags[i]);
    trig = std::max(trig, std::abs(fromc - qm.series.values[i]));
  }
  CHECK(worst < 1e-8);
  CHECK(trig < 1e-10);

  const auto three = qm_two_time_series(state, x1, x2, {0.0, pi / 2, pi});
  CHECK(three.series.values[0] == doctest::Approx(0.5));
  CHECK(std::abs(three.series.values[1]) < 1e-10);
  CHECK(three.series.values[2] == doctest::Approx(-0.5));

  CHECK_THROWS_AS(qm_multitime_correlation(state, {x1, Observable::sign(0)}, {0.0, 1.0}), CompatibilityError);
  CHECK_THROWS_AS(qm_two_time_series(state, x1, x2, {1.0, 0.5}), ParameterError);
}

TEST_CASE("QM correlator on product and box states") {
  const auto prod = fixtures::ground_product();
  const auto s = qm_two_time_series(prod, Observable::position(0), Observable::sign(1), {0.0, 1.0, 2.0});
  for (double v : s.series.values) CHECK(std::abs(v) < 1e-12);

  const auto box = fixtures::box_singlet();
  const double alpha = 8.0 / (3.0 * pi);
  const double omega = 3.0 * pi * pi / 8.0;
  const auto sg = Observable::sign(0);
  const auto sg2 = Observable::sign(1);
  const double lag = pi / (4 * omega);
  CHECK(qm_multitime_correlation(box, {sg, sg2}, {lag, 0.0}) ==
        doctest::Approx(-alpha * alpha * std::sqrt(0.5)).epsilon(1e-8));
  const auto series = qm_two_time_series(box, sg, sg2, {0.0, 0.5, 1.0});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(series.series.values[i] == doctest::Approx(-alpha * alpha * std::cos(omega * series.series.lags[i])).epsilon(1e-8));
  }
}

TEST_CASE("Bohm backend") {
  const auto state = fixtures::exchange_state();
  const auto x1 = Observable::position(0);
  const auto x2 = Observable::position(1);
  const double a = bohm_multitime_correlation(state, {x1, x2}, {0.3, 2.0});
  const double b = bohm_multitime_correlation(state, {x1, x2}, {7.0, -1.0});
  CHECK(a == b);
  CHECK(a == doctest::Approx(0.5).epsilon(1e-10));
  const auto qm = qm_two_time_series(state, x1, x2, {pi}).series.values[0];
  CHECK(std::abs(a - qm) == doctest::Approx(1.0).epsilon(1e-8));

  const auto v = bohm_velocity_field(state, {{0.3, 0.2}, {-1.0, 0.4}});
  for (const auto& row : v) {
    for (double vi : row) CHECK(std::abs(vi) < 1e-12);
  }
  CHECK_THROWS_AS(bohm_velocity_field(state, {{0.5, -0.5}}), DomainError);

  const auto prod = fixtures::ground_product();
  const auto f = Observable::indicator(0, -0.5, 1.0);
  CHECK(bohm_multitime_correlation(prod, {f, x2}, {1.0, 0.0}) ==
        doctest::Approx(qm_multitime_correlation(prod, {f, x2}, {1.0, 0.0})));
}

TEST_CASE("Nelson mode expansion of the exchange state") {
  const auto state = fixtures::exchange_state();
  const auto x1 = Observable::position(0);
  const auto x2 = Observable::position(1);
  const auto e = nelson_mode_expansion(state, x1, x2);
  REQUIRE(!e.rates.empty());
  CHECK(e.rates.front() == 0.0);
  for (std::size_t i = 1; i < e.rates.size(); ++i) CHECK(e.rates[i] >= e.rates[i - 1]);

  const ChannelSeries* u = nullptr;
  for (const auto& c : e.channels) {
    if (c.channel == 0 && c.f_label == "position" && c.g_label == "position") u = &c;
  }
  REQUIRE(u != nullptr);
  // Rate-zero modes are the domain grounds; c_1 is their combined weight.
  double c1_sq = 0.0;
  double total = 0.0;
  for (std::size_t n = 0; n < u->rates.size(); ++n) {
    if (u->rates[n] == 0.0) c1_sq += u->f_coefficients[n] * u->f_coefficients[n];
    total += u->f_coefficients[n] * u->f_coefficients[n];
  }
  CHECK(c1_sq == doctest::Approx(4.0 / pi).epsilon(1e-8));
  CHECK(total + u->f_tail == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(u->f_tail < 1e-6);

  CHECK(e(0.0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(std::abs(e(10.0) - 2.0 / pi) < 1e-4);
  CHECK(e(0.5) == doctest::Approx(kNelson05).epsilon(1e-6));
  CHECK(e(1.0) == doctest::Approx(kNelson1).epsilon(1e-6));
  CHECK(e(2.0) == doctest::Approx(kNelson2).epsilon(1e-6));
  CHECK(e(pi) == doctest::Approx(kNelsonPi).epsilon(1e-6));
  CHECK(e(-1.0) == e(1.0));
  double prev = e(0.0);
  for (double t = 0.05; t < 12.0; t += 0.05) {
    CHECK(e(t) >= prev - 1e-12);
    prev = e(t);
  }
  CHECK(std::abs(e(pi) - std::cos(pi) / 2) > 0.25);
}

TEST_CASE("Nelson autocorrelation is completely monotone") {
  const auto state = fixtures::exchange_state();
  const auto x1 = Observable::position(0);
  const auto e = nelson_mode_expansion(state, x1, x1);
  for (double a : e.amplitudes) CHECK(a >= -1e-12);
  double prev = e(0.0);
  double prev_slope = -1e300;
  for (double t = 0.1; t < 6.0; t += 0.1) {
    const double v = e(t);
    CHECK(v <= prev + 1e-14);
    const double slope = v - prev;
    CHECK(slope >= prev_slope - 1e-12);
    prev_slope = slope;
    prev = v;
  }
}

TEST_CASE("semigroup unit and product equivalence") {
  const auto state = fixtures::exchange_state();
  const auto one = Observable::constant(0);
  const auto e = nelson_mode_expansion(state, one, Observable::constant(1));
  for (double t : {0.0, 0.5, 3.0}) CHECK(std::abs(e(t) - 1.0) < 1e-10);

  const auto prod = fixtures::ground_product();
  const auto lags = range(0.0, 4.0, 0.25);
  for (const auto& [f, g] : std::vector<std::pair<Observable, Observable>>{
           {Observable::position(0), Observable::position(1)},
           {Observable::sign(0), Observable::indicator(1, 0.0, 2.0)},
           {Observable::indicator(0, -1.0, 0.3), Observable::sign(1)}}) {
    const auto cmp = compare_theories(prod, f, g, lags);
    REQUIRE(cmp.nelson.has_value());
    CHECK(cmp.max_abs_dev_qm_nelson < 1e-6);
    CHECK(cmp.max_abs_dev_qm_bohm < 1e-6);
  }
  // Same-cluster pair on a product state: the nodeless OU channel.
  const auto ou = nelson_mode_expansion(prod, Observable::position(0), Observable::position(0));
  // Finite-difference rates carry an O(h^2) error.
  CHECK(ou(1.0) == doctest::Approx(std::exp(-1.0) / 2).epsilon(1e-4));
}

TEST_CASE("compare_theories on the exchange state") {
  const auto state = fixtures::exchange_state();
  const auto lags = range(0.0, 4 * pi, pi / 8);
  const auto cmp = compare_theories(state, Observable::position(0), Observable::position(1), lags);
  REQUIRE(cmp.nelson.has_value());
  CHECK(cmp.equal_time_spread < 1e-6);
  CHECK(cmp.max_abs_dev_qm_bohm == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(cmp.max_abs_dev_qm_nelson > 0.5);

  const auto es = fixtures::oscillator(1.0, 4);
  const double c = 1.0 / std::sqrt(3.0);
  const auto three = build_composite_state({es, es}, {{c, {0, 2}}, {c, {1, 1}}, {c, {2, 0}}});
  const auto partial = compare_theories(three, Observable::position(0), Observable::position(1), {0.0, 1.0});
  CHECK_FALSE(partial.nelson.has_value());
  CHECK_FALSE(partial.nelson_unavailable.empty());
}

TEST_CASE("expansion cache under concurrent readers") {
  const auto state = fixtures::exchange_state();
  ExpansionCache cache;
  const auto x1 = Observable::position(0);
  const auto x2 = Observable::position(1);
  const double direct = nelson_semigroup_correlation(state, x1, x2, 1.0, &cache);
  std::vector<std::thread> threads;
  std::vector<double> seen(4);
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] { seen[i] = nelson_semigroup_correlation(state, x1, x2, 1.0, &cache); });
  }
  for (auto& t : threads) t.join();
  for (double v : seen) CHECK(v == direct);
  CHECK(cache.size() == 1);
  CHECK(fingerprint(state) == fingerprint(fixtures::exchange_state()));
  CHECK(fingerprint(state) != fingerprint(fixtures::exchange_state(1.0, -1.0)));
}

TEST_CASE("series validation") {
  CorrelationSeries s{{0.0, 1.0}, {0.1, 0.2}, Method::nelson_mc, std::nullopt};
  CHECK_THROWS_AS(validate(s), ParameterError);
  s.stderr_values = std::vector<double>{0.0, 0.1};
  CHECK_NOTHROW(validate(s));
  s.method = Method::qm;
  CHECK_THROWS_AS(validate(s), ParameterError);
}
