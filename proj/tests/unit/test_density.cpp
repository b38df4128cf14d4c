#include "oracles.hpp"

#include "modeclust/density.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace modeclust;

namespace {

GaussianMixture random_mixture(int d, RngStream& rng) {
  std::vector<double> w{0.3, 0.7};
  std::vector<Vector> mu{rng.normal_vector(d), rng.normal_vector(d) + Vector::Constant(d, 1.5)};
  std::vector<Matrix> cov;
  for (int j = 0; j < 2; ++j) {
    const Matrix a = Matrix::NullaryExpr(d, d, [&] { return 0.4 * rng.normal(); });
    cov.push_back(a * a.transpose() + Matrix::Identity(d, d));
  }
  return GaussianMixture(w, mu, cov);
}

}  // namespace

TEST_CASE("mixture density matches the textbook formula") {
  RngStream rng(11);
  for (int d : {1, 2, 5}) {
    const auto gm = random_mixture(d, rng);
    for (int i = 0; i < 10; ++i) {
      const Point x = oracle::random_point(rng, d, 1.5);
      double ref = 0.0;
      for (const auto& c : gm.components()) ref += c.weight * oracle::gaussian_pdf(x, c.mean, c.covariance);
      CHECK(oracle::rel_err(gm.density(x), ref) < 1e-12);
      CHECK(std::abs(gm.log_density(x) - std::log(ref)) < 1e-12);
    }
  }
}

TEST_CASE("analytic derivatives match finite differences") {
  RngStream rng(12);
  for (int d : {1, 2, 5, 10}) {
    const auto gm = random_mixture(d, rng);
    std::vector<Point> xs;
    for (int i = 0; i < 60; ++i) xs.push_back(oracle::random_point(rng, d, 1.0));
    const KernelDensityEstimate kde(xs, 0.9);
    for (const DensityModel* m : {static_cast<const DensityModel*>(&gm), static_cast<const DensityModel*>(&kde)}) {
      for (int i = 0; i < 5; ++i) {
        const Point x = oracle::random_point(rng, d, 0.8);
        const ModelEval e = m->eval(x);
        CHECK(oracle::rel_err(e.density, m->density(x)) < 1e-13);
        CHECK(oracle::rel_err(e.gradient, m->gradient(x)) < 1e-12);
        CHECK(oracle::rel_err(e.gradient, oracle::fd_gradient(*m, x, 1e-5)) < 1e-6);
        CHECK(oracle::rel_err(e.hessian, oracle::fd_hessian(*m, x, 1e-5)) < 1e-4);
        CHECK(oracle::rel_err(m->log_gradient(x), e.gradient / e.density) < 1e-12);
      }
    }
  }
}

TEST_CASE("log density stays finite where the density underflows") {
  const auto gm = GaussianMixture::spherical({0.5, 0.5}, {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)}, 0.1);
  const Point far = Vector::Constant(1, 40.0);
  CHECK(gm.density(far) == 0.0);
  const double lp = gm.log_density(far);
  CHECK(std::isfinite(lp));
  CHECK(lp == doctest::Approx(std::log(0.5) - 0.5 * 39.0 * 39.0 / 0.01 - std::log(std::sqrt(2 * std::numbers::pi) * 0.1)));
  CHECK(gm.log_gradient(far)[0] == doctest::Approx(-39.0 / 0.01));
}

TEST_CASE("kernel density estimate matches the direct sum") {
  RngStream rng(13);
  std::vector<Point> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(rng.normal_vector(3));
  const KernelDensityEstimate kde(xs, 0.7);
  for (int i = 0; i < 10; ++i) {
    const Point x = rng.normal_vector(3);
    CHECK(oracle::rel_err(kde.density(x), oracle::kde_direct(xs, 0.7, x)) < 1e-12);
  }
}

TEST_CASE("single sample estimate is a Gaussian bump") {
  const std::vector<Point> xs{Vector::Zero(2)};
  const KernelDensityEstimate kde(xs, 0.5);
  CHECK(kde.density(Vector::Zero(2)) == doctest::Approx(1.0 / (2 * std::numbers::pi * 0.25)));
  Point x(2);
  x << 0.5, 0.0;
  CHECK(kde.density(x) == doctest::Approx(std::exp(-0.5) / (2 * std::numbers::pi * 0.25)));
}

TEST_CASE("smoothing widens covariances by h squared") {
  RngStream rng(14);
  const auto gm = random_mixture(3, rng);
  const auto sm = gm_smooth(gm, 0.6);
  for (std::size_t j = 0; j < gm.num_components(); ++j) {
    CHECK((sm.component(j).covariance - gm.component(j).covariance - 0.36 * Matrix::Identity(3, 3)).norm() < 1e-14);
    CHECK(sm.component(j).weight == gm.component(j).weight);
  }
  CHECK((gm_smooth(gm, 0.0).component(0).covariance - gm.component(0).covariance).norm() == 0.0);
}

TEST_CASE("sampling reproduces component weights and means") {
  const auto gm = GaussianMixture::spherical({0.25, 0.75}, {Vector::Constant(2, -4.0), Vector::Constant(2, 4.0)}, 1.0);
  RngStream rng(15);
  std::vector<int> comp;
  const auto xs = gm.sample(20000, rng, comp);
  double frac = 0.0;
  Vector mean1 = Vector::Zero(2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (comp[i] == 1) {
      frac += 1;
      mean1 += xs[i];
    }
  }
  mean1 /= frac;
  frac /= static_cast<double>(xs.size());
  CHECK(std::abs(frac - 0.75) < 4 * std::sqrt(0.75 * 0.25 / 20000));
  CHECK((mean1 - Vector::Constant(2, 4.0)).norm() < 0.05);
}

TEST_CASE("constructor rejects invalid mixtures") {
  const std::vector<Vector> mu{Vector::Zero(2), Vector::Ones(2)};
  const std::vector<Matrix> cov{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  CHECK_THROWS_AS(GaussianMixture({0.5, 0.6}, mu, cov), UsageError);
  CHECK_THROWS_AS(GaussianMixture({-0.5, 1.5}, mu, cov), UsageError);
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(GaussianMixture({0.5, 0.5}, mu, {Matrix::Identity(2, 2), bad}), UsageError);
  CHECK_THROWS_AS(GaussianMixture({0.5, 0.5}, {Vector::Zero(2), Vector::Ones(3)}, cov), UsageError);
  const auto gm = GaussianMixture({0.5, 0.5}, mu, cov);
  CHECK_THROWS_AS(gm.density(Vector::Zero(3)), UsageError);
  Point nan = Vector::Zero(2);
  nan[0] = std::nan("");
  CHECK_THROWS_AS(gm.density(nan), UsageError);
  CHECK_THROWS_AS(KernelDensityEstimate(std::vector<Point>{}, 1.0), UsageError);
  CHECK_THROWS_AS(KernelDensityEstimate(std::vector<Point>{Vector::Zero(2)}, 0.0), UsageError);
}

TEST_CASE("discrepancy of a model with itself is zero") {
  const auto gm = GaussianMixture::spherical({0.5, 0.5}, {Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)}, 1.0);
  const auto probe = regular_grid(Vector::Constant(2, -3.0), Vector::Constant(2, 3.0), 11);
  CHECK(probe.size() == 121);
  const Discrepancy self = sup_discrepancy(gm, gm, probe);
  CHECK(self.eta == 0.0);
  const Discrepancy sm = sup_discrepancy(gm, gm_smooth(gm, 0.5), probe);
  CHECK(sm.eta0 > 0.0);
  CHECK(sm.eta == doctest::Approx(std::max({sm.eta0, sm.eta1, sm.eta2})));
}
