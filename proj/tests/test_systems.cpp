#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ergolab/rng.hpp"
#include "ergolab/systems.hpp"

using namespace ergolab;

TEST_CASE("cyclic system validates size and step") {
  CHECK_THROWS_AS(CyclicSystem(0), ValidationError);
  CHECK_THROWS_AS(CyclicSystem(6, 2), ValidationError);  // gcd 2
  CHECK_NOTHROW(CyclicSystem(6, 5));
  CyclicSystem c(10, -3);  // normalized into [0, n)
  CHECK(c.step == 7);
}

TEST_CASE("cyclic advance walks the orbit and wraps") {
  CyclicSystem c(12, 5, 99);
  System sys = c;
  PointHandle p = cyclic_point(c, 3);
  p = advance(sys, p, 1);
  CHECK(p.index == 8);
  p = advance(sys, p, 2);
  CHECK(p.index == (8 + 10) % 12);
  p = advance(sys, p, -3);
  CHECK(p.index == 3);
  p = advance(sys, p, 12 * 1000);
  CHECK(p.index == 3);
}

TEST_CASE("cyclic advance by one permutes the whole cycle") {
  CyclicSystem c(97, 13, 0);
  System sys = c;
  std::set<std::int64_t> image;
  for (std::int64_t i = 0; i < 97; ++i) {
    PointHandle p = cyclic_point(c, i);
    image.insert(advance(sys, p, 1).index);
  }
  CHECK(image.size() == 97);  // bijection: counting measure is preserved
}

TEST_CASE("cyclic sample_point is deterministic and in range") {
  CyclicSystem c(1000, 1, 42);
  System sys = c;
  for (std::uint64_t t = 0; t < 200; ++t) {
    PointHandle a = sample_point(sys, t);
    PointHandle b = sample_point(sys, t);
    CHECK(a.index == b.index);
    CHECK(a.index >= 0);
    CHECK(a.index < 1000);
  }
}

TEST_CASE("shift system validates probabilities") {
  CHECK_THROWS_AS(ShiftSystem(1, {1.0}, 0), ValidationError);
  CHECK_THROWS_AS(ShiftSystem(2, {0.5}, 0), ValidationError);
  CHECK_THROWS_AS(ShiftSystem(2, {0.6, 0.6}, 0), ValidationError);
  CHECK_THROWS_AS(ShiftSystem(2, {-0.1, 1.1}, 0), ValidationError);
  CHECK_NOTHROW(ShiftSystem(3, {0.2, 0.3, 0.5}, 0));
}

TEST_CASE("shift symbols re-query identically and follow the marginals") {
  ShiftSystem sh(2, {0.3, 0.7}, 7);
  const std::int64_t draws = 20000;
  std::int64_t zeros = 0;
  for (std::int64_t i = 0; i < draws; ++i) {
    const auto id = static_cast<std::uint64_t>(i / 100);
    const std::int64_t coord = i % 100 - 50;
    const int s = sh.symbol(id, coord);
    CHECK(s == sh.symbol(id, coord));
    if (s == 0) ++zeros;
  }
  const double rate = static_cast<double>(zeros) / static_cast<double>(draws);
  const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(draws));
  CHECK(std::fabs(rate - 0.3) < 4 * sigma);
}

TEST_CASE("shift advance shifts coordinates") {
  ShiftSystem sh(2, {0.5, 0.5}, 3);
  System sys = sh;
  PointHandle p = shift_point(11, 0);
  PointHandle q = advance(sys, p, 5);
  // coordinate k of T^5 x is coordinate k+5 of x
  for (std::int64_t k = -3; k <= 3; ++k)
    CHECK(sh.symbol(q.id, q.offset + k) == sh.symbol(p.id, k + 5));
}

TEST_CASE("rotation validates the angle and advances mod 1") {
  CHECK_THROWS_AS(RotationSystem(0.0, 0), ValidationError);
  CHECK_THROWS_AS(RotationSystem(1.0, 0), ValidationError);
  RotationSystem r(0.3, 5);
  System sys = r;
  PointHandle p = rotation_point(0.9);
  p = advance(sys, p, 1);
  CHECK(p.x == Catch::Approx(0.2).margin(1e-12));
  p = advance(sys, p, -1);
  CHECK(p.x == Catch::Approx(0.9).margin(1e-12));
}

TEST_CASE("mix64 streams look uniform enough and unit_double stays in [0,1)") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 4096; ++i) {
    const std::uint64_t h = mix64(1, 2, i);
    seen.insert(h);
    const double u = unit_double(h);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(seen.size() == 4096);
}

TEST_CASE("sampled cyclic points spread across the cycle") {
  CyclicSystem c(16, 1, 2024);
  System sys = c;
  std::vector<std::int64_t> counts(16, 0);
  const std::int64_t trials = 16000;
  for (std::int64_t t = 0; t < trials; ++t)
    counts[static_cast<std::size_t>(sample_point(sys, static_cast<std::uint64_t>(t)).index)]++;
  // chi-square against uniform, 15 dof; 50 is far beyond any reasonable quantile
  double chi2 = 0;
  for (std::int64_t k : counts) {
    const double e = static_cast<double>(trials) / 16.0;
    chi2 += (static_cast<double>(k) - e) * (static_cast<double>(k) - e) / e;
  }
  CHECK(chi2 < 50.0);
}
