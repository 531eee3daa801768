#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/rng.hpp"
#include "support/oracles.hpp"

using namespace ergolab;

namespace {

std::vector<double> random_values(std::uint64_t seed, std::int64_t n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = 2.0 * unit_double(mix64(seed, 0xabcu, static_cast<std::uint64_t>(i))) - 1.0;
  return v;
}

}  // namespace

TEST_CASE("moving_average matches direct summation on cycles") {
  for (std::uint64_t rep = 0; rep < 30; ++rep) {
    const std::int64_t n = 3 + static_cast<std::int64_t>(mix64(rep, 1) % 200);
    CyclicSystem c(n, 1, rep);
    System sys = c;
    const std::vector<double> vals = random_values(rep, n);
    Observable f = StepObservable{vals};
    const std::int64_t start = static_cast<std::int64_t>(mix64(rep, 2) % static_cast<std::uint64_t>(n));
    const std::int64_t v = static_cast<std::int64_t>(mix64(rep, 3) % 50);
    const std::int64_t L = 1 + static_cast<std::int64_t>(mix64(rep, 4) % 300);
    const double got = moving_average(sys, f, cyclic_point(c, start), v, L);
    const double want = oracle::cyclic_window_mean(vals, start, v, L);
    CHECK(got == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("coboundary averages telescope exactly") {
  for (std::uint64_t rep = 0; rep < 60; ++rep) {
    const std::int64_t n = 2 + static_cast<std::int64_t>(mix64(rep, 7) % 1023);
    CyclicSystem c(n, 1, rep);
    System sys = c;
    StepObservable g{random_values(rep + 1000, n)};
    const std::int64_t start = static_cast<std::int64_t>(mix64(rep, 8) % static_cast<std::uint64_t>(n));
    const std::int64_t v = static_cast<std::int64_t>(mix64(rep, 9) % 100);
    const std::int64_t L = 1 + static_cast<std::int64_t>(mix64(rep, 10) % 500);
    PointHandle x = cyclic_point(c, start);
    const double lhs = moving_average(sys, Observable(CoboundaryObservable{TransferSpec(g)}), x, v, L);
    const double rhs = telescoped_average(sys, TransferSpec(g), x, v, L);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
  }
}

TEST_CASE("scheme families produce their defining pairs") {
  SchemeSpec quad;
  quad.family = SchemeFamily::quadratic;
  CHECK(scheme_pair(quad, 1).v == 1);
  CHECK(scheme_pair(quad, 1).L == 1);
  CHECK(scheme_pair(quad, 3).v == 9);
  CHECK(scheme_pair(quad, 3).L == 3);

  SchemeSpec lac;
  lac.family = SchemeFamily::lacunary;
  CHECK(scheme_pair(lac, 1).v == 4);
  CHECK(scheme_pair(lac, 1).L == 2);
  CHECK(scheme_pair(lac, 3).v == 64);
  CHECK(scheme_pair(lac, 3).L == 8);
  CHECK(scheme_pair(lac, 30).L == (std::int64_t{1} << 30));
  CHECK_THROWS_AS(scheme_pair(lac, 31), OverflowError);

  SchemeSpec hyp;
  hyp.family = SchemeFamily::hyperlacunary;
  CHECK(scheme_pair(hyp, 1).v == 16);
  CHECK(scheme_pair(hyp, 1).L == 4);
  CHECK(scheme_pair(hyp, 2).v == 256);
  CHECK(scheme_pair(hyp, 2).L == 16);
  CHECK(scheme_pair(hyp, 4).v == (std::int64_t{1} << 32));
  CHECK(scheme_pair(hyp, 4).L == 65536);
  CHECK_THROWS_AS(scheme_pair(hyp, 5), OverflowError);
  // the real-valued form still carries n = 5
  CHECK(scheme_pair_real(hyp, 5).L == Catch::Approx(std::pow(2.0, 32.0)));

  SchemeSpec tri;
  tri.family = SchemeFamily::triangular;
  CHECK(scheme_pair(tri, 4).v == 10);
  CHECK(scheme_pair(tri, 4).L == 4);

  SchemeSpec pow15;
  pow15.family = SchemeFamily::power;
  pow15.param = 1.5;
  CHECK(scheme_pair(pow15, 4).v == 0);
  CHECK(scheme_pair(pow15, 4).L == 8);
  SchemeSpec pow_bad;
  pow_bad.family = SchemeFamily::power;
  pow_bad.param = 0.9;
  CHECK_THROWS_AS(scheme_pair(pow_bad, 1), ValidationError);

  SchemeSpec expo;
  expo.family = SchemeFamily::exponential;
  CHECK(scheme_pair(expo, 10).L == 1024);
  CHECK(scheme_pair(expo, 61).L == (std::int64_t{1} << 61));
  CHECK_THROWS_AS(scheme_pair(expo, 62), OverflowError);

  SchemeSpec esq;
  esq.family = SchemeFamily::expsqrt;
  CHECK(scheme_pair(esq, 1).L == 2);
  CHECK(scheme_pair(esq, 4).L == 7);
  CHECK(scheme_pair(esq, 9).L == 20);
}

TEST_CASE("scheme prefixes keep lengths strictly increasing") {
  const auto strictly_increasing = [](const std::vector<WindowPair>& ps) {
    for (std::size_t i = 1; i < ps.size(); ++i)
      if (ps[i].L <= ps[i - 1].L) return false;
    return true;
  };
  SchemeSpec s;
  s.family = SchemeFamily::quadratic;
  CHECK(strictly_increasing(scheme_prefix(s, 50)));
  s.family = SchemeFamily::triangular;
  CHECK(strictly_increasing(scheme_prefix(s, 50)));
  s.family = SchemeFamily::power;
  s.param = 1.2;
  CHECK(strictly_increasing(scheme_prefix(s, 200)));
  s.param = 3.0;
  CHECK(strictly_increasing(scheme_prefix(s, 50)));
  s.family = SchemeFamily::expsqrt;
  CHECK(strictly_increasing(scheme_prefix(s, 60)));
}

TEST_CASE("cesaro diagnostic settles at 3/4 for the 4-cycle coboundary") {
  CyclicSystem c(4, 1, 0);
  System sys = c;
  StepObservable g{{0.0, 1.0, 0.0, 0.0}};
  Observable f = CoboundaryObservable{TransferSpec(g)};
  const std::vector<double> ces = cesaro_diagnostic(sys, f, cyclic_point(c, 0), 40);
  CHECK(ces[3] == Catch::Approx(0.75).margin(1e-12));
  CHECK(ces[7] == Catch::Approx(0.75).margin(1e-12));
  CHECK(ces[39] == Catch::Approx(0.75).margin(1e-12));
}

TEST_CASE("rate_under_transfer produces an exact coboundary representation") {
  for (std::uint64_t rep = 0; rep < 40; ++rep) {
    const std::int64_t n_cyc = 8 + static_cast<std::int64_t>(mix64(rep, 20) % 249);
    CyclicSystem c(n_cyc, 1, rep);
    System sys = c;
    StepObservable fstep{random_values(rep + 5000, n_cyc)};
    Observable f = fstep;
    const std::int64_t n = 1 + static_cast<std::int64_t>(mix64(rep, 21) % 40);
    const RateUnderResult ru = rate_under_transfer(sys, f, n);
    CHECK(ru.max_dev <= 1e-10);
    // spot-check the identity f - A_n f = H - H o T directly
    for (std::int64_t i = 0; i < std::min<std::int64_t>(n_cyc, 16); ++i) {
      PointHandle x = cyclic_point(c, i);
      double an = 0;
      PointHandle q = x;
      for (std::int64_t k = 0; k < n; ++k) {
        an += eval(sys, f, q);
        q = advance(sys, q, 1);
      }
      an /= static_cast<double>(n);
      const double lhs = eval(sys, f, x) - an;
      const double rhs =
          eval(sys, Observable(ru.H), x) - eval(sys, Observable(ru.H), advance(sys, x, 1));
      CHECK(lhs == Catch::Approx(rhs).margin(1e-9));
    }
  }
}

TEST_CASE("rate_over_check holds for transfers built by rate_under_transfer") {
  for (std::uint64_t rep = 0; rep < 40; ++rep) {
    const std::int64_t n_cyc = 8 + static_cast<std::int64_t>(mix64(rep, 30) % 249);
    CyclicSystem c(n_cyc, 1, rep);
    System sys = c;
    Observable f = StepObservable{random_values(rep + 7000, n_cyc)};
    const std::int64_t n = 1 + static_cast<std::int64_t>(mix64(rep, 31) % 40);
    const RateUnderResult ru = rate_under_transfer(sys, f, n);
    const double r = 1.0 + 2.0 * unit_double(mix64(rep, 32));
    const RateCheck rc = rate_over_check(sys, f, Observable(ru.H), r, n);
    CHECK(rc.holds);
  }
}

TEST_CASE("rate_over_check holds for arbitrary transfer guesses too") {
  for (std::uint64_t rep = 0; rep < 30; ++rep) {
    const std::int64_t n_cyc = 8 + static_cast<std::int64_t>(mix64(rep, 40) % 120);
    CyclicSystem c(n_cyc, 1, rep);
    System sys = c;
    Observable f = StepObservable{random_values(rep + 8000, n_cyc)};
    Observable h = StepObservable{random_values(rep + 9000, n_cyc)};
    const std::int64_t n = 1 + static_cast<std::int64_t>(mix64(rep, 41) % 30);
    CHECK(rate_over_check(sys, f, h, 2.0, n).holds);
  }
}

TEST_CASE("harmonic lower bound holds and scales with the L1 norm") {
  for (std::uint64_t rep = 0; rep < 25; ++rep) {
    const std::int64_t n_cyc = 16 + static_cast<std::int64_t>(mix64(rep, 50) % 240);
    CyclicSystem c(n_cyc, 1, rep);
    System sys = c;
    Observable f = StepObservable{random_values(rep + 11000, n_cyc)};
    const RateCheck hc = harmonic_divergence_check(sys, f, 100);
    CHECK(hc.holds);
    CHECK(hc.lhs <= hc.rhs + 1e-12);
  }
}

TEST_CASE("series condition partial sums are nondecreasing") {
  CyclicSystem c(64, 1, 3);
  System sys = c;
  Observable f = StepObservable{random_values(123, 64)};
  std::vector<Observable> gs;
  for (std::uint64_t k = 0; k < 10; ++k)
    gs.emplace_back(StepObservable{random_values(200 + k, 64)});
  for (SeriesKind kind : {SeriesKind::eq1, SeriesKind::eq2, SeriesKind::eq3}) {
    const std::vector<double> ps = series_conditions_check(sys, f, gs, kind);
    REQUIRE(ps.size() == gs.size());
    for (std::size_t i = 1; i < ps.size(); ++i) CHECK(ps[i] >= ps[i - 1] - 1e-15);
  }
}

TEST_CASE("orbit prefix window sums agree with direct evaluation") {
  CyclicSystem c(37, 5, 1);
  const std::vector<double> vals = random_values(77, 37);
  const auto op = detail::orbit_prefix(c, vals);
  System sys = c;
  Observable f = StepObservable{vals};
  for (std::int64_t slot = 0; slot < 37; ++slot) {
    for (const auto& [v, L] : {std::pair<std::int64_t, std::int64_t>{0, 1},
                               {3, 7},
                               {36, 37},
                               {5, 74},
                               {100, 11}}) {
      const double got = op.window_sum(slot, v + 1, v + L) / static_cast<double>(L);
      const std::int64_t start = op.order[static_cast<std::size_t>(slot)];
      const double want = moving_average(sys, f, cyclic_point(c, start), v, L);
      CHECK(got == Catch::Approx(want).margin(1e-9));
    }
  }
}
