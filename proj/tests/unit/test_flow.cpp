#include "oracles.hpp"

#include "modeclust/flow.hpp"
#include "modeclust/morse.hpp"

#include <doctest.h>

using namespace modeclust;

namespace {

GaussianMixture two_bumps() {
  Point a(2), b(2);
  a << -2.5, 0.0;
  b << 2.5, 0.0;
  return GaussianMixture::spherical({0.5, 0.5}, {a, b}, 1.0);
}

Point pt(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

}  // namespace

TEST_CASE("natural-time flow agrees with fixed-step RK4") {
  const auto gm = two_bumps();
  RngStream rng(31);
  for (int i = 0; i < 10; ++i) {
    const Point x = 2.0 * rng.normal_vector(2);
    for (double t : {0.5, 2.0, 8.0}) {
      const TimedFlow f = flow_for_time(gm, x, t);
      REQUIRE(f.ok);
      CHECK(f.time == doctest::Approx(t));
      CHECK((f.end - oracle::rk4_flow(gm, x, t, 4000)).norm() < 1e-7);
    }
  }
}

TEST_CASE("flow reaches the mode on its side of the symmetry axis") {
  const auto gm = two_bumps();
  const auto crit = find_critical_points(gm, default_critical_seeds({}, gm.means(), 3.0));
  REQUIRE(crit.size() == 3);
  const FlowResult left = integrate_flow(gm, pt(-0.7, 1.3), {}, crit);
  const FlowResult right = integrate_flow(gm, pt(0.2, -2.0), {}, crit);
  CHECK(left.kind == DestKind::mode);
  CHECK(right.kind == DestKind::mode);
  CHECK(left.destination[0] < 0.0);
  CHECK(right.destination[0] > 0.0);
  CHECK(left.critical_index != right.critical_index);
}

TEST_CASE("start on the separatrix ends at the saddle") {
  const auto gm = two_bumps();
  const auto crit = find_critical_points(gm, default_critical_seeds({}, gm.means(), 3.0));
  const FlowResult r = integrate_flow(gm, pt(0.0, 1.7), {}, crit);
  CHECK(r.kind == DestKind::saddle);
  CHECK(std::abs(r.destination[0]) < 1e-6);
  CHECK(std::abs(r.destination[1]) < 1e-4);

  const std::vector<Point> pts{pt(0.0, 1.7), pt(-1.0, 0.0), pt(1.0, 0.0)};
  const auto labels = true_labels(gm, pts, crit);
  CHECK(labels.labels[0] == kUnresolved);
  CHECK(labels.flagged[0]);
  CHECK(labels.labels[1] != labels.labels[2]);
  CHECK(labels.num_unresolved() == 1);
}

TEST_CASE("both time parametrizations reach the same destination") {
  const auto gm = two_bumps();
  FlowConfig nat;
  nat.time = FlowTime::natural;
  const Point x = pt(-5.0, 4.0);
  const FlowResult a = integrate_flow(gm, x, nat);
  const FlowResult b = integrate_flow(gm, x, {});
  CHECK(a.kind == DestKind::mode);
  CHECK(b.kind == DestKind::mode);
  CHECK((a.destination - b.destination).norm() < 1e-5);
}

TEST_CASE("density increases along the recorded path") {
  const auto gm = two_bumps();
  FlowConfig cfg;
  cfg.record_path = true;
  const FlowResult r = integrate_flow(gm, pt(3.0, 3.0), cfg);
  REQUIRE(r.path.size() > 2);
  for (std::size_t k = 1; k < r.path.size(); ++k) CHECK(r.path[k].density >= r.path[k - 1].density - 1e-14);
}

TEST_CASE("exhausted budget is reported as unresolved") {
  const auto gm = two_bumps();
  FlowConfig cfg;
  cfg.max_evals = 20;
  const FlowResult r = integrate_flow(gm, pt(6.0, 6.0), cfg);
  CHECK(r.kind == DestKind::unresolved);
  CHECK(r.evaluations <= 20 + 7);
}

TEST_CASE("flow stops when the predicate fires") {
  const auto gm = two_bumps();
  const double level = 0.5 * gm.density(pt(-2.5, 0.0));
  const TimedFlow f = flow_until(gm, pt(-2.5, 2.0), {}, 1e6, [&](const Point&, double p) { return p >= level; });
  CHECK(f.stopped);
  CHECK(gm.density(f.end) >= level);
  CHECK(f.min_gradient_norm > 0.0);
  CHECK_THROWS_AS(flow_until(gm, pt(0, 0), {}, -1.0), UsageError);
}
