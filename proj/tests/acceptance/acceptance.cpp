// Release checklist. Each check prints one [PASS]/[FAIL] line with the
// measured numbers; the exit code is the number of failures. argv[1] names
// the CLI binary (used by the reproducibility check). argv[2] may hold a
// comma list of check numbers to run a subset while debugging.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ergolab/ergolab.hpp"
#include "support/oracles.hpp"

using namespace ergolab;

namespace {

std::string g_cli;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

SchemeSpec family_spec(SchemeFamily f, double param = 0.0) {
  SchemeSpec s;
  s.family = f;
  s.param = param;
  return s;
}

std::int64_t coprime_step(std::int64_t n, std::uint64_t salt) {
  for (std::uint64_t t = 0;; ++t) {
    const std::int64_t s = 1 + static_cast<std::int64_t>(mix64(salt, t) % static_cast<std::uint64_t>(n));
    if (std::gcd(s, n) == 1) return s;
  }
}

// ---------------------------------------------------------------- checks

Outcome telescoping_identity() {
  double worst = 0.0;
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    const std::int64_t N = 2 + static_cast<std::int64_t>(mix64(rep, 11) % 1023);
    const CyclicSystem cyc(N, coprime_step(N, rep), rep);
    const System sys(cyc);
    StepObservable g;
    g.values.resize(static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < g.values.size(); ++i)
      g.values[i] = 2.0 * unit_double(mix64(rep, 12, i)) - 1.0;
    const TransferSpec tg = g;
    const Observable f = CoboundaryObservable{tg};
    const PointHandle x = sample_point(sys, mix64(rep, 13));
    const std::int64_t v = static_cast<std::int64_t>(mix64(rep, 14) % 2048);
    const std::int64_t L = 1 + static_cast<std::int64_t>(mix64(rep, 15) % 4096);
    worst = std::max(worst, std::fabs(moving_average(sys, f, x, v, L) -
                                      telescoped_average(sys, tg, x, v, L)));
  }
  return {worst <= 1e-12, fmt("500 cases, worst deviation %.3g", worst)};
}

Outcome sweep_vs_raster() {
  double worst_excess = -1.0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const int m = 1 + static_cast<int>(mix64(rep, 21) % 50);
    std::vector<Cone> cones;
    for (int i = 0; i < m; ++i) {
      const double v = 2000.0 * unit_double(mix64(rep, 22, static_cast<std::uint64_t>(i))) - 1000.0;
      const double L = 1.0 + 99.0 * unit_double(mix64(rep, 23, static_cast<std::uint64_t>(i)));
      cones.push_back({v, L});
    }
    const double lambda = 120.0 + 500.0 * unit_double(mix64(rep, 24));
    const double exact = cross_section_length(cones, lambda);
    double span = 0.0;
    for (const Cone& c : cones) span = std::max(span, 2.0 * (lambda - c.L));
    const double step = std::max(span, 1.0) * 1e-3;
    const double approx = oracle::raster_cross_section(cones, lambda, step);
    worst_excess =
        std::max(worst_excess, std::fabs(exact - approx) - 2.0 * step * static_cast<double>(m));
  }
  return {worst_excess <= 0.0, fmt("100 families, worst overshoot of tolerance %.3g", worst_excess)};
}

Outcome cone_classification() {
  const ConeProfile qp = ratio_profile(family_spec(SchemeFamily::quadratic), 100);
  const auto ratio_at = [&](double lambda) {
    double best = 0.0;
    for (std::size_t i = 0; i < qp.lambdas.size(); ++i)
      if (qp.lambdas[i] <= lambda) best = std::max(best, qp.ratios[i]);
    return best;
  };
  const double r10 = ratio_at(10.0), r100 = ratio_at(100.0);
  const bool grows = r100 >= 5.0 * r10;

  const ConeProfile hp = ratio_profile(family_spec(SchemeFamily::hyperlacunary), 4);
  double late = 0.0;
  const double split = hp.lambdas.back() / 10.0;
  for (std::size_t i = 0; i < hp.lambdas.size(); ++i)
    if (hp.lambdas[i] >= split) late = std::max(late, hp.ratios[i]);
  const bool saturates = late >= 0.9 * hp.max_ratio;

  return {grows && saturates,
          fmt("quadratic ratio %.2f@10 vs %.2f@100; hyperlacunary final decade %.3f of max %.3f",
              r10, r100, late, hp.max_ratio)};
}

Outcome offsets_reach_target() {
  const std::vector<std::int64_t> lengths = scheme_lengths(family_spec(SchemeFamily::exponential), 20);
  std::vector<std::int64_t> offs;
  try {
    offs = failing_offsets(lengths, 5.0);
  } catch (const Error& e) {
    return {false, std::string("construction refused: ") + e.what()};
  }
  std::vector<Cone> cones;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    cones.push_back({static_cast<double>(offs[i]), static_cast<double>(lengths[i])});
  double best = 0.0;
  for (std::int64_t L : lengths) {
    const double lam = 2.0 * static_cast<double>(L);
    best = std::max(best, cross_section_length(cones, lam) / lam);
  }
  return {best >= 5.0, fmt("verified ratio %.2f at 20 dyadic lengths", best)};
}

Outcome sign_flip_exact_tail() {
  const SchemeSpec lin = family_spec(SchemeFamily::power, 1.0);
  const ScanResult ex = iid_exceedance_scan(IIDSampler::rademacher(5), lin, 20, {1.0}, 1000);
  const double expect = 2.0 - std::ldexp(1.0, -19);
  const double got = ex.rows[0].partial_sums.back();
  const bool exact_ok = ex.rows[0].exact && std::fabs(got - expect) <= 1e-9;

  const std::int64_t trials = 100000;
  const ScanResult mc =
      iid_exceedance_scan(IIDSampler::rademacher(5), lin, 20, {1.0}, trials, 1, 1ull << 33, true);
  double var = 0.0;
  for (int n = 1; n <= 20; ++n) {
    const double p = std::ldexp(1.0, 1 - n);
    var += p * (1.0 - p) / static_cast<double>(trials);
  }
  const double diff = std::fabs(mc.rows[0].partial_sums.back() - expect);
  const bool mc_ok = !mc.rows[0].exact && diff <= 4.0 * std::sqrt(var);
  return {exact_ok && mc_ok,
          fmt("exact sum %.16f (target %.16f), monte carlo off by %.4f (4 sigma %.4f)", got,
              expect, diff, 4.0 * std::sqrt(var))};
}

Outcome window_speed_separation() {
  const ScanResult slow = iid_exceedance_scan(IIDSampler::pareto(13, 1.5),
                                              family_spec(SchemeFamily::power, 1.0), 10000, {1.0},
                                              10000);
  const ScanResult fast = iid_exceedance_scan(IIDSampler::pareto(13, 1.5),
                                              family_spec(SchemeFamily::power, 2.0), 1000, {1.0},
                                              6000);
  const std::string& v1 = slow.rows[0].slope.verdict;
  const std::string& v2 = fast.rows[0].slope.verdict;
  const double s1 = slow.rows[0].partial_sums.back();
  const double s2 = fast.rows[0].partial_sums.back();
  const bool ok = v1 == "diverging" && (v2 == "saturating" || v2 == "inconclusive") && s2 < s1;
  return {ok, fmt("length n: %s, sum %.2f; length n^2: %s, sum %.2f", v1.c_str(), s1, v2.c_str(),
                  s2)};
}

Outcome dyadic_tail_rate() {
  const ScanResult res = iid_exceedance_scan(IIDSampler::pareto(13, 1.2),
                                             family_spec(SchemeFamily::exponential), 16, {0.5},
                                             4000);
  const SlopeReport& sl = res.rows[0].slope;
  return {sl.verdict == "saturating",
          fmt("verdict %s (slope %.3f, tail %.2e, sum %.2f); saturating required",
              sl.verdict.c_str(), sl.slope, sl.tail_increment,
              res.rows[0].partial_sums.back())};
}

Outcome concentration_bound() {
  const HoeffdingResult one = hoeffding_bound({0.0}, {1.0}, 1.0);
  const bool formula_ok = std::fabs(one.bound - 2.0 * std::exp(-2.0)) <= 1e-12;

  bool empirical_ok = true;
  std::string first_bad;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + mix64(rep, 41) % 12;
    std::vector<double> a(n), b(n);
    double rsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 2.0 * unit_double(mix64(rep, 42, i)) - 1.0;
      b[i] = a[i] + 2.0 * unit_double(mix64(rep, 43, i));
      rsq += (b[i] - a[i]) * (b[i] - a[i]);
    }
    const double t = (0.3 + 1.2 * unit_double(mix64(rep, 44))) * std::sqrt(rsq) + 1e-3;
    const HoeffdingResult hb = hoeffding_bound(a, b, t);
    const EmpiricalTail emp = hoeffding_empirical(a, b, t, 20000, rep);
    if (emp.estimate > hb.bound + 3.0 * emp.stderr_ + 1e-12) {
      empirical_ok = false;
      if (first_bad.empty())
        first_bad = fmt("; rep %llu exceeds: %.4f > %.4f", static_cast<unsigned long long>(rep),
                        emp.estimate, hb.bound);
    }
  }
  return {formula_ok && empirical_ok,
          fmt("closed form off by %.2e; 20 empirical settings%s",
              std::fabs(one.bound - 2.0 * std::exp(-2.0)), first_bad.c_str())};
}

Outcome cover_product_bound() {
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const std::int64_t N = 100 + static_cast<std::int64_t>(mix64(rep, 51) % 65437);
    const CyclicSystem cyc(N, coprime_step(N, mix64(rep, 52)), rep);
    const std::size_t n_sets = 1 + mix64(rep, 53) % 3;
    std::vector<std::vector<std::int64_t>> sets(n_sets);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(N));
    for (std::int64_t i = 0; i < N; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::size_t s = 0; s < n_sets; ++s) {
      const std::int64_t size = 1 + static_cast<std::int64_t>(mix64(rep, 54, s) % (N / 2 + 1));
      for (std::int64_t i = 0; i < size; ++i) {
        const std::int64_t j =
            i + static_cast<std::int64_t>(mix64(rep, 55, s, static_cast<std::uint64_t>(i)) %
                                          static_cast<std::uint64_t>(N - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        sets[s].push_back(idx[static_cast<std::size_t>(i)]);
      }
    }
    const int steps = 1 + static_cast<int>(mix64(rep, 56) % 7);
    const CoverPlan plan = greedy_cover(cyc, sets, steps, rep);

    std::int64_t prev = N;
    __int128 lhs_pow = 1, rhs = 1;
    for (std::size_t j = 0; j < plan.leftover.size(); ++j) {
      const auto e_size = static_cast<std::int64_t>(sets[j % n_sets].size());
      if (plan.leftover[j] * N > prev * (N - e_size))
        return {false, fmt("stepwise bound broken at rep %llu step %zu",
                           static_cast<unsigned long long>(rep), j)};
      prev = plan.leftover[j];
      rhs *= N - e_size;
      if (j > 0) lhs_pow *= N;
    }
    if (!plan.leftover.empty() &&
        static_cast<__int128>(plan.leftover.back()) * lhs_pow > rhs)
      return {false, fmt("product bound broken at rep %llu", static_cast<unsigned long long>(rep))};
  }
  return {true, "50 families, stepwise and cumulative bounds hold in integer arithmetic"};
}

Outcome window_search_equals_brute() {
  const double etas[] = {0.25, 0.375, 0.5, 0.75};
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const std::size_t len = 1 + mix64(rep, 61) % 2000;
    std::vector<double> vals(len);
    for (std::size_t i = 0; i < len; ++i)
      vals[i] = static_cast<double>(static_cast<std::int64_t>(mix64(rep, 62, i) % 17) - 8) / 4.0;
    const double eta = etas[mix64(rep, 63) % 4];
    const std::int64_t ell_min = 1 + static_cast<std::int64_t>(mix64(rep, 64) % 3);
    const auto got = bad_window_search(vals, eta, ell_min);
    const auto want = oracle::brute_bad_windows(vals, eta, ell_min);
    if (got.size() != want.size())
      return {false, fmt("rep %llu: %zu windows vs %zu from brute force",
                         static_cast<unsigned long long>(rep), got.size(), want.size())};
    for (std::size_t i = 0; i < got.size(); ++i)
      if (got[i].start != want[i].start || got[i].length != want[i].length ||
          got[i].average != want[i].average)
        return {false, fmt("rep %llu: window %zu differs", static_cast<unsigned long long>(rep), i)};
  }
  return {true, "200 arrays, window sets identical"};
}

Outcome disjoint_third_of_union() {
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const std::size_t m = 1 + mix64(rep, 71) % 60;
    std::vector<Interval> iv(m);
    for (std::size_t i = 0; i < m; ++i) {
      iv[i].start = static_cast<std::int64_t>(mix64(rep, 72, i) % 20001) - 10000;
      iv[i].length = 1 + static_cast<std::int64_t>(mix64(rep, 73, i) % 500);
    }
    const VitaliResult res = vitali_disjointify(iv);

    std::vector<std::pair<std::int64_t, std::int64_t>> chosen;
    std::int64_t total = 0;
    for (std::size_t k : res.selected) {
      chosen.push_back({iv[k].start, iv[k].start + iv[k].length});
      total += iv[k].length;
    }
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i = 1; i < chosen.size(); ++i)
      if (chosen[i].first < chosen[i - 1].second)
        return {false, fmt("rep %llu: selected intervals overlap",
                           static_cast<unsigned long long>(rep))};

    std::vector<std::pair<std::int64_t, std::int64_t>> all;
    for (const Interval& w : iv) all.push_back({w.start, w.start + w.length});
    std::sort(all.begin(), all.end());
    std::int64_t uni = 0, cs = all[0].first, ce = all[0].second;
    for (const auto& [s, e] : all) {
      if (s > ce) {
        uni += ce - cs;
        cs = s;
        ce = e;
      } else {
        ce = std::max(ce, e);
      }
    }
    uni += ce - cs;
    if (total != res.selected_total || uni != res.union_length || !res.bound_holds ||
        3 * total < uni)
      return {false, fmt("rep %llu: 3*%lld < union %lld", static_cast<unsigned long long>(rep),
                         static_cast<long long>(total), static_cast<long long>(uni))};
  }
  return {true, "200 families, disjointness and the one-third bound hold exactly"};
}

Outcome adversarial_pipeline() {
  BadfunParams par;
  par.cycle = 200000;
  par.fp.n_max = 13;
  // peak blocks sized n/a_n: the classic n/a_n^2 masses quantize to zero
  // cells at this cycle size
  par.fp.mass.kind = FpMassSpec::Kind::inverse_height_power;
  par.fp.mass.power = 1.0;
  par.eta = 0.125;
  par.points = 1000;
  par.seed = 1;
  const BadfunReport rep = badfun_pipeline(par);

  bool growth_ok = !rep.scheme.index.empty();
  for (std::size_t k = 0; k < rep.scheme.index.size(); ++k)
    if (rep.scheme.pairs[k].L < rep.scheme.index[k]) growth_ok = false;
  const bool limsup_ok = rep.limsup.fraction >= 0.5;
  return {growth_ok && limsup_ok,
          fmt("%zu windows all satisfy L_i >= i; %.1f%% of %lld points reach %.4g",
              rep.scheme.index.size(), 100.0 * rep.limsup.fraction,
              static_cast<long long>(rep.limsup.points), rep.limsup.threshold)};
}

Outcome transfer_rate_identities() {
  double worst = 0.0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const std::int64_t N = 2 + static_cast<std::int64_t>(mix64(rep, 81) % 255);
    const CyclicSystem cyc(N, coprime_step(N, mix64(rep, 82)), rep);
    const System sys(cyc);
    StepObservable f, H;
    f.values.resize(static_cast<std::size_t>(N));
    H.values.resize(static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      f.values[i] = 2.0 * unit_double(mix64(rep, 83, i)) - 1.0;
      H.values[i] = 2.0 * unit_double(mix64(rep, 84, i)) - 1.0;
    }
    const std::int64_t n = 1 + static_cast<std::int64_t>(mix64(rep, 85) % 64);
    worst = std::max(worst, rate_under_transfer(sys, Observable(f), n).max_dev);
    const double r = (rep % 2) ? 2.0 : 1.0;
    if (!rate_over_check(sys, Observable(f), Observable(H), r, n).holds)
      return {false, fmt("norm inequality failed at rep %llu",
                         static_cast<unsigned long long>(rep))};
  }
  return {worst <= 1e-10, fmt("200 cases, worst identity deviation %.3g", worst)};
}

Outcome harmonic_lower_bound() {
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const std::int64_t N = 2 + static_cast<std::int64_t>(mix64(rep, 91) % 127);
    const CyclicSystem cyc(N, coprime_step(N, mix64(rep, 92)), rep);
    const System sys(cyc);
    StepObservable f;
    f.values.resize(static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < f.values.size(); ++i)
      f.values[i] = 2.0 * unit_double(mix64(rep, 93, i)) - 1.0;
    const RateCheck rc = harmonic_divergence_check(sys, Observable(f), 50);
    if (rc.lhs > rc.rhs)
      return {false, fmt("rep %llu: %.6f > %.6f", static_cast<unsigned long long>(rep), rc.lhs,
                         rc.rhs)};
  }

  const CyclicSystem cyc(128, 5, 7);
  const System sys(cyc);
  StepObservable f;
  f.values.resize(128);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = 2.0 * unit_double(mix64(7, 94, i)) - 1.0;
  const double norm1 = lp_norm(sys, Observable(f), 1.0);
  std::string detail = "100 random cases hold;";
  for (const std::int64_t N : {10, 100, 1000}) {
    const RateCheck rc = harmonic_divergence_check(sys, Observable(f), N);
    double hn = 0.0;
    for (std::int64_t k = 1; k <= N; ++k) hn += 1.0 / static_cast<double>(k);
    detail += fmt(" N=%lld: %.3f vs floor %.3f;", static_cast<long long>(N), rc.rhs,
                  norm1 / 3.0 * hn);
    if (rc.rhs < norm1 / 3.0 * hn) return {false, detail};
  }
  return {true, detail};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return in.good() || in.eof() ? ss.str() : std::string();
}

Outcome thread_count_reproducibility() {
  const std::string cfg_scan = "/tmp/ergolab_accept15_scan.json";
  {
    std::ofstream out(cfg_scan);
    out << R"({"kind":"scan","seed":42,"out":"/tmp/ergolab_accept15_a",
      "system":{"type":"cyclic","size":4099,"step":7},
      "observable":{"type":"pareto","exponent":0.6,"scale":1.0},
      "scheme":{"family":"lacunary"},"n":8,"deltas":[0.5,1.5],
      "trials":4000,"budget":2000000})";
  }
  const std::string cfg_cob = "/tmp/ergolab_accept15_cob.json";
  {
    std::ofstream out(cfg_cob);
    out << R"({"kind":"coboundary","seed":42,"out":"/tmp/ergolab_accept15_c",
      "system":{"type":"shift","alphabet":2},
      "observable":{"type":"cylinder","radius":1,
                    "table":[0.5,-0.5,0.25,-0.25,0.5,-0.5,0.25,-0.25]},
      "n":2,"delta":0.4,"lengths_to":32,"trials":2000})";
  }

  const auto run_pair = [&](const std::string& kind, const std::string& cfg,
                            const std::string& out1, const std::string& out8) {
    const std::string c1 = g_cli + " " + kind + " --config " + cfg + " --out " + out1 +
                           " --threads 1 >/dev/null 2>&1";
    const std::string c8 = g_cli + " " + kind + " --config " + cfg + " --out " + out8 +
                           " --threads 8 >/dev/null 2>&1";
    return std::system(c1.c_str()) == 0 && std::system(c8.c_str()) == 0;
  };

  if (!run_pair("scan", cfg_scan, "/tmp/ergolab_accept15_s1", "/tmp/ergolab_accept15_s8"))
    return {false, "scan runs exited nonzero"};
  if (!run_pair("coboundary", cfg_cob, "/tmp/ergolab_accept15_c1", "/tmp/ergolab_accept15_c8"))
    return {false, "coboundary runs exited nonzero"};

  for (const char* stem : {"ergolab_accept15_s", "ergolab_accept15_c"}) {
    for (const char* ext : {".csv", ".json"}) {
      const std::string a = slurp(std::string("/tmp/") + stem + "1" + ext);
      const std::string b = slurp(std::string("/tmp/") + stem + "8" + ext);
      if (a.empty() || a != b)
        return {false, fmt("%s%s differs between 1 and 8 threads", stem, ext)};
    }
  }
  return {true, "scan and coboundary outputs byte-identical at 1 and 8 threads"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-cli> [checks]\n", argv[0]);
    return 2;
  }
  g_cli = argv[1];

  std::set<int> only;
  if (argc > 2) {
    std::stringstream ss(argv[2]);
    std::string tok;
    while (std::getline(ss, tok, ',')) only.insert(std::atoi(tok.c_str()));
  }

  struct Check {
    int num;
    const char* label;
    std::function<Outcome()> fn;
  };
  const std::vector<Check> checks = {
      {1, "telescoped coboundary averages", telescoping_identity},
      {2, "cross-section sweep vs rasterization", sweep_vs_raster},
      {3, "quadratic growth, hyperlacunary saturation", cone_classification},
      {4, "offsets reach the target ratio", offsets_reach_target},
      {5, "sign-flip tail series, exact and sampled", sign_flip_exact_tail},
      {6, "window speed separates divergence", window_speed_separation},
      {7, "dyadic windows with heavy tails saturate", dyadic_tail_rate},
      {8, "concentration bound holds empirically", concentration_bound},
      {9, "greedy cover meets the product bound", cover_product_bound},
      {10, "window search equals brute force", window_search_equals_brute},
      {11, "disjoint subfamily covers a third", disjoint_third_of_union},
      {12, "adversarial pipeline end to end", adversarial_pipeline},
      {13, "transfer-function rate identities", transfer_rate_identities},
      {14, "harmonic lower bound on average norms", harmonic_lower_bound},
      {15, "thread-count reproducibility", thread_count_reproducibility},
  };

  int failures = 0;
  for (const Check& c : checks) {
    if (!only.empty() && !only.count(c.num)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome res;
    try {
      res = c.fn();
    } catch (const std::exception& e) {
      res = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %-45s %s (%.1fs)\n", res.pass ? "PASS" : "FAIL", c.num, c.label,
                res.detail.c_str(), secs);
    if (!res.pass) ++failures;
  }
  return failures;
}
