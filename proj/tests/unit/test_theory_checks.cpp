#include "oracles.hpp"

#include "modeclust/morse.hpp"
#include "modeclust/theory_checks.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace modeclust;

namespace {

GaussianMixture spread_pair(double separation, double sigma) {
  Point a = Vector::Zero(2), b = Vector::Zero(2);
  a[0] = -separation / 2;
  b[0] = separation / 2;
  return GaussianMixture::spherical({0.5, 0.5}, {a, b}, sigma);
}

}  // namespace

TEST_CASE("chi-square bound dominates the exact tail") {
  for (int d : {1, 2, 3, 5, 10, 40}) {
    for (double mult : {2.0, 3.0, 8.0, 32.0, 50.0}) {
      const double t = mult * d;
      const double exact = boost::math::cdf(boost::math::complement(boost::math::chi_squared(d), t));
      CHECK(chi_square_tail_bound(t, d).bound >= exact);
    }
  }
}

TEST_CASE("simplified chi-square bound appears from t = 32d") {
  for (int d : {1, 3, 10}) {
    const ChiSquareBound at = chi_square_tail_bound(32.0 * d, d);
    REQUIRE(at.simplified.has_value());
    CHECK(*at.simplified == doctest::Approx(std::exp(-8.0 * d)));
    CHECK(at.bound == doctest::Approx(*at.simplified).epsilon(1e-12));
    CHECK_FALSE(chi_square_tail_bound(31.0 * d, d).simplified.has_value());
    CHECK(chi_square_tail_bound(64.0 * d, d).bound <= *chi_square_tail_bound(64.0 * d, d).simplified);
  }
  CHECK_THROWS_AS(chi_square_tail_bound(1.0, 1), UsageError);
}

TEST_CASE("chi-square Monte Carlo check passes at small scale") {
  RngStream rng(61);
  const std::vector<ChiSquareCase> cases{{1, 4.0}, {3, 96.0}};
  const auto r = check_chi_square_bound(cases, 20000, rng);
  CHECK(r.status == CheckStatus::ok);
  CHECK(r.violations == 0);
  CHECK(r.details.size() == 3);
}

TEST_CASE("Clopper-Pearson interval") {
  const auto zero = clopper_pearson(0, 1000, 0.01);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == doctest::Approx(1.0 - std::pow(0.01, 1.0 / 1000)));
  const auto all = clopper_pearson(50, 50, 0.01);
  CHECK(all.upper == 1.0);
  CHECK(all.lower == doctest::Approx(std::pow(0.01, 1.0 / 50)));
  const auto mid = clopper_pearson(30, 100, 0.05);
  CHECK(mid.lower < 0.3);
  CHECK(mid.upper > 0.3);
  CHECK_THROWS_AS(clopper_pearson(5, 3, 0.01), UsageError);
}

TEST_CASE("low-density preconditions for the plane at sigma 0.5") {
  const std::vector<double> w{0.5, 0.5};
  const double cap = gaussian_epsilon_cap(w, 0.5, 2);
  const double by_hand = std::pow(std::sqrt(0.5) / (std::sqrt(2 * std::numbers::pi) * 0.5 * std::exp(16.0)), 2);
  CHECK(cap == doctest::Approx(by_hand).epsilon(1e-12));
  const double need = gaussian_required_separation(w, 0.5, 2, cap);
  const double need_by_hand =
      2 * 0.5 * std::sqrt(4 * std::log(1 / (0.5 * std::sqrt(2 * std::numbers::pi))) + 2 * std::log(1 / cap) - 2 * std::log(2.0));
  CHECK(need == doctest::Approx(need_by_hand));
  CHECK(need > 7.5);
  CHECK(need < 8.5);
}

TEST_CASE("low-density check respects its preconditions") {
  RngStream rng(62);
  const std::vector<double> w{0.5, 0.5};
  const double cap = gaussian_epsilon_cap(w, 0.5, 2);
  const double need = gaussian_required_separation(w, 0.5, 2, cap);

  const auto ok = check_gaussian_low_density(spread_pair(need + 1.0, 0.5), cap, 20000, rng);
  CHECK(ok.status == CheckStatus::ok);
  CHECK(ok.violations == 0);

  const auto narrow = check_gaussian_low_density(spread_pair(0.5 * need, 0.5), cap, 20000, rng);
  CHECK(narrow.status == CheckStatus::precondition_failed);
  CHECK(narrow.checked == 0);

  const auto too_big = check_gaussian_low_density(spread_pair(need + 1.0, 0.5), 10 * cap, 20000, rng);
  CHECK(too_big.status == CheckStatus::precondition_failed);

  CHECK(check_gaussian_low_density(spread_pair(need + 1.0, 0.5), 0.0, 100, rng).status == CheckStatus::ok);
}

TEST_CASE("flow perturbation bound holds for a smoothed mixture") {
  const auto p = spread_pair(5.0, 1.0);
  const auto q = gm_smooth(p, 0.15);
  RngStream rng(63);
  std::vector<Point> starts;
  for (int i = 0; i < 8; ++i) starts.push_back(2.0 * rng.normal_vector(2));
  const std::vector<double> times{0.5, 1.0, 2.0};
  const auto probe = regular_grid(Vector::Constant(2, -6.0), Vector::Constant(2, 6.0), 61);
  const auto r = check_flow_perturbation(p, q, starts, times, probe);
  CHECK(r.status == CheckStatus::ok);
  CHECK(r.checked == starts.size() * times.size());
  CHECK(r.max_slack_ratio < 1.0);
  CHECK(r.max_slack_ratio > 0.0);

  const auto same = check_flow_perturbation(p, p, starts, times, probe);
  CHECK(same.violations == 0);
  CHECK(same.max_slack_ratio == 0.0);
}

TEST_CASE("flow perturbation bound formula") {
  CHECK(flow_perturbation_bound(0.0, 1.0, 2, 3.0) == 0.0);
  CHECK(flow_perturbation_bound(0.1, 0.5, 4, 2.0) == doctest::Approx(0.1 / 1.0 * std::exp(2.0)));
  CHECK(std::isinf(flow_perturbation_bound(0.1, 0.0, 4, 2.0)));
}

TEST_CASE("bound records count violations and slack") {
  BoundCheckResult r;
  r.add({"a", 1.0, 2.0, false});
  r.add({"b", 0.0, 0.0, false});
  CHECK(r.status == CheckStatus::ok);
  CHECK(r.max_slack_ratio == doctest::Approx(0.5));
  r.add({"c", 3.0, 2.0, true});
  CHECK(r.status == CheckStatus::violated);
  CHECK(r.violations == 1);
  CHECK(r.checked == 3);
  CHECK(r.max_slack_ratio == doctest::Approx(1.5));
}

TEST_CASE("time to core along a flow") {
  const auto gm = spread_pair(5.0, 1.0);
  Point m = Vector::Zero(2);
  m[0] = 2.5;
  const double top = gm.density(m);
  const CoreFlow inside = flow_time_to_core(gm, m, 0.5 * top);
  CHECK(inside.ok);
  CHECK(inside.time == 0.0);
  Point x = m;
  x[1] = 1.5;
  const CoreFlow f = flow_time_to_core(gm, x, 0.9 * top);
  CHECK(f.ok);
  CHECK(f.time > 0.0);
  CHECK(f.end_density >= 0.9 * top);
  CHECK(f.time * f.delta * f.delta <= top + 1e-6);
}

TEST_CASE("delta profile needs a low-dimensional grid") {
  const auto gm = GaussianMixture::spherical({1.0}, {Vector::Zero(3)}, 1.0);
  const auto crit = find_critical_points(gm, default_critical_seeds({}, gm.means(), 3.0));
  const LabelFn label = [](const Point&) { return 0; };
  CHECK_THROWS_AS(delta_profile(gm, crit, label, nullptr, 0), UsageError);
}

TEST_CASE("log-log slope recovers a power law") {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v * v);
  CHECK(*log_log_slope(x, y) == doctest::Approx(2.0));
  const std::vector<double> one{1.0}, zero{0.0};
  CHECK_FALSE(log_log_slope(one, one).has_value());
  const std::vector<double> xs{1.0, 2.0}, ys{0.0, 0.0};
  CHECK_FALSE(log_log_slope(xs, ys).has_value());
}

TEST_CASE("critical points of nearby densities match") {
  const auto p = spread_pair(5.0, 1.0);
  const auto q = gm_smooth(p, 0.2);
  const auto seeds = default_critical_seeds({}, p.means(), 3.0);
  const auto cp = find_critical_points(p, seeds);
  const auto cq = find_critical_points(q, seeds);
  const CriticalMatch m = match_critical_points(cp, cq);
  CHECK(m.same_count);
  CHECK(m.same_indices);
  CHECK(m.max_displacement < 0.2);
}

TEST_CASE("low-density probability grows with the level") {
  RngStream rng(64);
  const auto gm = spread_pair(5.0, 1.0);
  const std::vector<double> eps{1e-4, 1e-3, 1e-2};
  const auto est = estimate_low_noise_exponent(gm, eps, 20000, rng);
  REQUIRE(est.probabilities.size() == 3);
  CHECK(est.probabilities[0] <= est.probabilities[1]);
  CHECK(est.probabilities[1] <= est.probabilities[2]);
  REQUIRE(est.beta.has_value());
  CHECK(*est.beta > 0.0);
}
