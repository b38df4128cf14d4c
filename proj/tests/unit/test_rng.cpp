#include "modeclust/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace modeclust;

TEST_CASE("derived streams are reproducible and distinct") {
  auto a = RngStream::derive(7, Stage::kSample, {3, 100});
  auto b = RngStream::derive(7, Stage::kSample, {3, 100});
  CHECK(a.seed() == b.seed());
  CHECK(a.uniform() == b.uniform());

  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 50; ++r)
    for (std::uint64_t n : {25, 50, 100}) seeds.insert(RngStream::derive(7, Stage::kSample, {r, n}).seed());
  CHECK(seeds.size() == 150);
  CHECK(RngStream::derive(7, Stage::kSample, {1}).seed() != RngStream::derive(7, Stage::kMixture, {1}).seed());
  CHECK(RngStream::derive(7, Stage::kSample, {1, 2}).seed() != RngStream::derive(7, Stage::kSample, {2, 1}).seed());
  CHECK(RngStream::derive(7, Stage::kSample, {1}).seed() != RngStream::derive(8, Stage::kSample, {1}).seed());
}

TEST_CASE("normal draws have unit moments") {
  RngStream rng(5);
  double s = 0.0, ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(ss / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}
