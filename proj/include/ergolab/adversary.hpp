#pragma once

// Adversarial constructions on cyclic systems: greedy shift covers, Vitali
// disjointification, maximal bad-window search, backward stopping windows,
// and the quantized bad-scheme builder they feed.  badfun_pipeline chains
// them end to end against a built F_p step function.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/observables.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/util.hpp"

namespace ergolab {

// ------------------------------------------------------------- greedy cover

struct CoverPlan {
  std::int64_t domain = 0;                // cyclic size N
  std::int64_t step = 1;                  // generator step of the system
  std::vector<std::int64_t> raw_shifts;   // chosen shift per step, in [0, N)
  std::vector<std::int64_t> shifts;       // nondecreasing lift (+ multiples of N)
  std::vector<std::int64_t> overlaps;     // newly covered points per step
  std::vector<std::int64_t> leftover;     // uncovered count after each step
  std::vector<double> leftover_mass;
  bool full_scan = true;
  bool covered = false;
};

namespace detail {

struct CycleBits {
  std::int64_t n = 0;
  std::vector<std::uint64_t> w;
  explicit CycleBits(std::int64_t n_)
      : n(n_), w(static_cast<std::size_t>((n_ + 63) / 64), 0) {}
  void set(std::int64_t i) { w[static_cast<std::size_t>(i >> 6)] |= 1ull << (i & 63); }
  bool test(std::int64_t i) const {
    return (w[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1u;
  }
  std::int64_t count() const {
    std::int64_t c = 0;
    for (std::uint64_t x : w) c += std::popcount(x);
    return c;
  }
};

// membership bits doubled around the cycle so any rotation is a plain
// bit-offset read
inline std::vector<std::uint64_t> doubled_bits(const CycleBits& e) {
  const std::int64_t n = e.n;
  std::vector<std::uint64_t> d(static_cast<std::size_t>((2 * n + 127) / 64) + 1, 0);
  for (std::int64_t i = 0; i < n; ++i)
    if (e.test(i)) {
      d[static_cast<std::size_t>(i >> 6)] |= 1ull << (i & 63);
      const std::int64_t j = i + n;
      d[static_cast<std::size_t>(j >> 6)] |= 1ull << (j & 63);
    }
  return d;
}

inline std::uint64_t gather64(const std::vector<std::uint64_t>& d, std::int64_t bit) {
  const std::size_t a = static_cast<std::size_t>(bit >> 6);
  const int sh = static_cast<int>(bit & 63);
  std::uint64_t out = d[a] >> sh;
  if (sh) out |= d[a + 1] << (64 - sh);
  return out;
}

inline std::int64_t mulmod_i64(std::int64_t a, std::int64_t b, std::int64_t m) {
  return static_cast<std::int64_t>((static_cast<__int128>(a) * b) % m);
}

}  // namespace detail

// Greedy cover by shifted copies of the given sets.  Step j uses the set
// sets[j mod sets.size()] and picks the shift m whose forward image
// T^m E = {e + m*step} overlaps the uncovered region the most; ties go to
// the smallest m, so the first step always records shift 0.
//
// With N <= 2^16 every shift is examined, and the cyclic averaging identity
// (sum over all m of the overlaps equals |uncovered|*|E|) guarantees
// overlap*N >= |uncovered|*|E| for the best m; that inequality is checked in
// exact integer arithmetic each step, which forces the leftover below
// N * prod(1 - |E_j|/N).  Larger systems sample 2^14 shifts (plus m = 0) and
// record the achieved overlap instead.
inline CoverPlan greedy_cover(const CyclicSystem& sys,
                              const std::vector<std::vector<std::int64_t>>& sets, int steps,
                              std::uint64_t seed = 0) {
  if (sets.empty()) throw ValidationError("greedy_cover: need at least one set");
  if (steps < 1) throw ValidationError("greedy_cover: steps must be >= 1");
  const std::int64_t N = sys.size;

  CoverPlan plan;
  plan.domain = N;
  plan.step = sys.step;
  plan.full_scan = N <= (1 << 16);

  detail::CycleBits unc(N);
  for (auto& word : unc.w) word = ~0ull;
  if (const int tail = static_cast<int>(N & 63)) unc.w.back() &= (1ull << tail) - 1;
  std::int64_t left = N;

  // per-slot membership bits, built once
  std::vector<detail::CycleBits> members;
  std::vector<std::vector<std::uint64_t>> doubled;
  std::vector<std::int64_t> sizes;
  for (const auto& s : sets) {
    if (s.empty()) throw ValidationError("greedy_cover: sets must be nonempty");
    detail::CycleBits bits(N);
    for (std::int64_t idx : s) {
      if (idx < 0 || idx >= N) throw ValidationError("greedy_cover: set index out of range");
      bits.set(idx);
    }
    sizes.push_back(bits.count());
    doubled.push_back(detail::doubled_bits(bits));
    members.push_back(std::move(bits));
  }

  const std::size_t words = unc.w.size();
  for (int j = 0; j < steps && left > 0; ++j) {
    const std::size_t slot = static_cast<std::size_t>(j) % sets.size();
    const auto& d = doubled[slot];
    const std::int64_t e_size = sizes[slot];

    // membership of x in T^m E reads E at (x - m*step) mod N, i.e. the
    // doubled bits at offset x + (N - m*step mod N)
    auto overlap_at = [&](std::int64_t m) {
      const std::int64_t o =
          (N - detail::mulmod_i64(m % N, sys.step, N)) % N;
      std::int64_t ov = 0;
      for (std::size_t w = 0; w < words; ++w)
        ov += std::popcount(unc.w[w] & detail::gather64(d, static_cast<std::int64_t>(w) * 64 + o));
      return ov;
    };

    std::int64_t best_m = 0, best_ov = -1;
    if (plan.full_scan) {
      for (std::int64_t m = 0; m < N; ++m) {
        const std::int64_t ov = overlap_at(m);
        if (ov > best_ov) {
          best_ov = ov;
          best_m = m;
        }
      }
    } else {
      for (std::int64_t t = 0; t <= (1 << 14); ++t) {
        const std::int64_t m =
            t == 0 ? 0
                   : static_cast<std::int64_t>(
                         mix64(seed, 0xc07e4u + static_cast<std::uint64_t>(j),
                               static_cast<std::uint64_t>(t)) %
                         static_cast<std::uint64_t>(N));
        const std::int64_t ov = overlap_at(m);
        if (ov > best_ov || (ov == best_ov && m < best_m)) {
          best_ov = ov;
          best_m = m;
        }
      }
    }

    if (plan.full_scan &&
        static_cast<__int128>(best_ov) * N < static_cast<__int128>(left) * e_size)
      throw Error("greedy_cover: averaging bound violated (internal)");

    const std::int64_t o = (N - detail::mulmod_i64(best_m % N, sys.step, N)) % N;
    for (std::size_t w = 0; w < words; ++w)
      unc.w[w] &= ~detail::gather64(d, static_cast<std::int64_t>(w) * 64 + o);
    left -= best_ov;

    plan.raw_shifts.push_back(best_m);
    plan.overlaps.push_back(best_ov);
    plan.leftover.push_back(left);
    plan.leftover_mass.push_back(static_cast<double>(left) / static_cast<double>(N));
    std::int64_t lifted = best_m;
    if (!plan.shifts.empty())
      while (lifted < plan.shifts.back()) lifted += N;
    plan.shifts.push_back(lifted);
  }
  plan.covered = left == 0;
  return plan;
}

// ------------------------------------------------------------------- vitali

struct Interval {
  std::int64_t start = 0;
  std::int64_t length = 1;
};

struct VitaliResult {
  std::vector<std::size_t> selected;  // indices into the input, in pick order
  std::int64_t selected_total = 0;
  std::int64_t union_length = 0;
  bool bound_holds = false;  // 3 * selected_total >= union_length
};

// Greedy-by-length disjoint subfamily.  Any discarded interval meets a
// selected one at least as long, so it sits inside that interval grown to
// triple length; hence 3x the selected total always covers the union, and
// the result carries the exact integer check.
inline VitaliResult vitali_disjointify(const std::vector<Interval>& intervals) {
  VitaliResult res;
  if (intervals.empty()) {
    res.bound_holds = true;
    return res;
  }
  for (const Interval& iv : intervals) {
    if (iv.length < 1) throw ValidationError("vitali_disjointify: lengths must be >= 1");
    if (std::llabs(iv.start) > (1ll << 62) - iv.length)
      throw ValidationError("vitali_disjointify: interval coordinates too large");
  }

  std::vector<std::size_t> order(intervals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (intervals[x].length != intervals[y].length)
      return intervals[x].length > intervals[y].length;
    if (intervals[x].start != intervals[y].start) return intervals[x].start < intervals[y].start;
    return x < y;
  });

  std::set<std::pair<std::int64_t, std::int64_t>> taken;  // (start, end), half-open
  for (std::size_t idx : order) {
    const std::int64_t s = intervals[idx].start;
    const std::int64_t e = s + intervals[idx].length;
    auto it = taken.lower_bound({s, std::numeric_limits<std::int64_t>::min()});
    bool clash = it != taken.end() && it->first < e;
    if (!clash && it != taken.begin()) {
      auto pv = std::prev(it);
      clash = pv->second > s;
    }
    if (!clash) {
      taken.insert({s, e});
      res.selected.push_back(idx);
      res.selected_total += intervals[idx].length;
    }
  }

  // exact union by sweep
  std::vector<std::pair<std::int64_t, std::int64_t>> all;
  all.reserve(intervals.size());
  for (const Interval& iv : intervals) all.push_back({iv.start, iv.start + iv.length});
  std::sort(all.begin(), all.end());
  std::int64_t cur_s = all[0].first, cur_e = all[0].second;
  for (const auto& [s, e] : all) {
    if (s > cur_e) {
      res.union_length += cur_e - cur_s;
      cur_s = s;
      cur_e = e;
    } else {
      cur_e = std::max(cur_e, e);
    }
  }
  res.union_length += cur_e - cur_s;
  res.bound_holds =
      static_cast<__int128>(3) * res.selected_total >= static_cast<__int128>(res.union_length);
  return res;
}

// --------------------------------------------------------------- bad windows

struct BadWindow {
  std::int64_t start = 0;
  std::int64_t length = 1;
  double average = 0.0;
};

// All maximal windows of length >= ell_min whose mean exceeds eta.  A window
// qualifies through the tilted prefix sums G[i] = P[i] - eta*i (mean > eta
// iff G[end] > G[start]); it is maximal when its mean strictly exceeds the
// best mean among all strict superwindows.  The superwindow maximum satisfies
// the corner recursion best(s,e) = max(mean(s,e), best(s-1,e), best(s,e+1)),
// so one row of state per start index suffices.
inline std::vector<BadWindow> bad_window_search(const std::vector<double>& values, double eta,
                                                std::int64_t ell_min = 1) {
  if (!(eta > 0.0)) throw ValidationError("bad_window_search: eta must be > 0");
  if (ell_min < 1) throw ValidationError("bad_window_search: ell_min must be >= 1");
  const std::int64_t L = static_cast<std::int64_t>(values.size());
  if (L == 0) return {};
  if (L > 20000)
    throw ValidationError("bad_window_search: arrays longer than 20000 need the quadratic "
                          "search rewritten; split the input");

  std::vector<double> P(static_cast<std::size_t>(L) + 1, 0.0), G(static_cast<std::size_t>(L) + 1);
  for (std::int64_t i = 0; i < L; ++i)
    P[static_cast<std::size_t>(i) + 1] = P[static_cast<std::size_t>(i)] + values[static_cast<std::size_t>(i)];
  for (std::int64_t i = 0; i <= L; ++i)
    G[static_cast<std::size_t>(i)] = P[static_cast<std::size_t>(i)] - eta * static_cast<double>(i);

  const double none = -std::numeric_limits<double>::infinity();
  auto mean = [&](std::int64_t s, std::int64_t e) {
    return (P[static_cast<std::size_t>(e)] - P[static_cast<std::size_t>(s)]) /
           static_cast<double>(e - s);
  };

  std::vector<double> prev(static_cast<std::size_t>(L) + 2, none);
  std::vector<double> cur(static_cast<std::size_t>(L) + 2, none);
  std::vector<BadWindow> out;
  for (std::int64_t s = 0; s < L; ++s) {
    cur[static_cast<std::size_t>(L) + 1] = none;
    for (std::int64_t e = L; e > s; --e) {
      const double m = mean(s, e);
      const double above = s > 0 ? prev[static_cast<std::size_t>(e)] : none;
      const double right = e < L ? cur[static_cast<std::size_t>(e) + 1] : none;
      cur[static_cast<std::size_t>(e)] = std::max(m, std::max(above, right));
      if (e - s >= ell_min && G[static_cast<std::size_t>(e)] > G[static_cast<std::size_t>(s)] &&
          m > std::max(above, right))
        out.push_back({s, e - s, m});
    }
    std::swap(prev, cur);
  }
  std::sort(out.begin(), out.end(), [](const BadWindow& x, const BadWindow& y) {
    return x.start != y.start ? x.start < y.start : x.length < y.length;
  });
  return out;
}

struct AnchorWindow {
  std::int64_t anchor = 0;
  std::int64_t length = 0;  // longest k with every backward sum up to k at or above half*k
  bool stopped = true;      // the stopping time landed within the cap
};

// Backward stopping scan: for each cyclic index x, k_x is the least k >= 1
// with values[x] + values[x-1] + ... + values[x-k+1] < half*k (indices mod
// N); the reported window length is k_x - 1, the last k where the running
// mean still clears half.  Anchors that never stop within the cap report
// length = cap with stopped = false.
//
// The scan tilts the doubled prefix sums by half and finds, for each anchor,
// the nearest strictly greater value to the left with one monotonic stack.
inline std::vector<AnchorWindow> backward_anchor_windows(const std::vector<double>& values,
                                                         double half, std::int64_t cap) {
  const std::int64_t N = static_cast<std::int64_t>(values.size());
  std::vector<AnchorWindow> out;
  if (N == 0) return out;
  if (cap < 1 || cap > N)
    throw ValidationError("backward_anchor_windows: cap must lie in [1, N]");

  // W[q] = (doubled prefix up to q) - half*q;  S_k(x) < half*k  <=>
  // W[x+N+1-k] > W[x+N+1]
  std::vector<double> W(static_cast<std::size_t>(2 * N) + 1, 0.0);
  double run = 0.0;
  for (std::int64_t q = 1; q <= 2 * N; ++q) {
    run += values[static_cast<std::size_t>((q - 1) % N)];
    W[static_cast<std::size_t>(q)] = run - half * static_cast<double>(q);
  }

  std::vector<std::int64_t> prev_greater(static_cast<std::size_t>(2 * N) + 1, -1);
  std::vector<std::int64_t> stack;
  for (std::int64_t q = 0; q <= 2 * N; ++q) {
    while (!stack.empty() && W[static_cast<std::size_t>(stack.back())] <= W[static_cast<std::size_t>(q)])
      stack.pop_back();
    prev_greater[static_cast<std::size_t>(q)] = stack.empty() ? -1 : stack.back();
    stack.push_back(q);
  }

  out.resize(static_cast<std::size_t>(N));
  for (std::int64_t x = 0; x < N; ++x) {
    const std::int64_t q = x + N + 1;
    const std::int64_t j = prev_greater[static_cast<std::size_t>(q)];
    AnchorWindow& w = out[static_cast<std::size_t>(x)];
    w.anchor = x;
    const std::int64_t kx = j < 0 ? cap + 1 : q - j;
    if (kx <= cap) {
      w.length = kx - 1;
      w.stopped = true;
    } else {
      w.length = cap;
      w.stopped = false;
    }
  }
  return out;
}

// --------------------------------------------------------------- bad scheme

struct BadScheme {
  double eta = 0.0;
  double p = 2.0;
  double a_n = 0.0;
  double delta = 0.0;                // (eta^2/16)^(1/(p-1))
  std::int64_t tau = 0;              // floor((a_n*delta)^(p-1))
  std::vector<std::int64_t> classes; // quantization classes r_1 < ... < r_t
  std::vector<std::int64_t> index;   // emitted global indices i = j*tau - k
  std::vector<WindowPair> pairs;     // aligned with index
};

// Quantized scheme from the observed windows.  Window lengths are rounded up
// to classes r with a_n*delta*r^(1/(p-1)) >= length; class r_j emits tau
// windows
//   L_{j*tau - k} = ceil(a_n*delta*r_j^(1/(p-1))) + ceil(eta^2*a_n^(p-1)/8) - k
// anchored at the cover shifts.  The plan's forward shift s covers points x
// with x ∈ E + s*step, so the anchor that plants such a point's window inside
// E is v = (N - s*step) mod N; anchors past the plan's end fall back to 0,
// which repeats the first covering set.  Emitted lengths are checked against
// the growth floor L_i >= i^(1/(p-1)) exactly for p = 2.
inline BadScheme build_bad_scheme(const std::vector<BadWindow>& windows, double eta, double p,
                                  double a_n, const CoverPlan& cover) {
  if (windows.empty()) throw ValidationError("build_bad_scheme: windows must be nonempty");
  if (!(p > 1.0)) throw ValidationError("build_bad_scheme: p must be > 1");
  if (!(eta > 0.0) || !(eta < 1.0))
    throw ValidationError("build_bad_scheme: eta must lie in (0, 1)");
  if (!(a_n > 0.0)) throw ValidationError("build_bad_scheme: a_n must be > 0");
  if (cover.domain < 1) throw ValidationError("build_bad_scheme: cover plan has no domain");

  BadScheme sch;
  sch.eta = eta;
  sch.p = p;
  sch.a_n = a_n;
  const double pm1 = p - 1.0;
  const double inv_pm1 = 1.0 / pm1;
  sch.delta = std::pow(eta * eta / 16.0, inv_pm1);
  const double ad = a_n * sch.delta;
  sch.tau = static_cast<std::int64_t>(std::floor(std::pow(ad, pm1)));
  if (sch.tau < 1) throw ResolutionError("a_n too small for quantization");
  if (sch.tau > (1 << 20)) throw BudgetError("build_bad_scheme: tau too large to emit");

  std::vector<std::int64_t> rs;
  for (const BadWindow& w : windows) {
    if (w.length < 1) throw ValidationError("build_bad_scheme: window lengths must be >= 1");
    const double ell = static_cast<double>(w.length);
    auto reaches = [&](std::int64_t r) { return ad * std::pow(static_cast<double>(r), inv_pm1) >= ell; };
    std::int64_t r = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(std::pow(ell / ad, pm1))));
    while (r > 1 && reaches(r - 1)) --r;
    while (!reaches(r)) ++r;
    rs.push_back(r);
  }
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  sch.classes = std::move(rs);

  const auto pad =
      static_cast<std::int64_t>(std::ceil(eta * eta * std::pow(a_n, pm1) / 8.0));
  const std::int64_t N = cover.domain;
  std::vector<std::int64_t> anchors(static_cast<std::size_t>(sch.tau), 0);
  for (std::int64_t k = 0; k < sch.tau; ++k)
    if (k < static_cast<std::int64_t>(cover.raw_shifts.size()))
      anchors[static_cast<std::size_t>(k)] =
          (N - detail::mulmod_i64(cover.raw_shifts[static_cast<std::size_t>(k)] % N, cover.step,
                                  N)) %
          N;

  for (std::size_t j = 1; j <= sch.classes.size(); ++j) {
    const double r = static_cast<double>(sch.classes[j - 1]);
    const auto base = static_cast<std::int64_t>(std::ceil(ad * std::pow(r, inv_pm1)));
    std::int64_t prev_len = 0;
    for (std::int64_t k = sch.tau - 1; k >= 0; --k) {
      const std::int64_t i = static_cast<std::int64_t>(j) * sch.tau - k;
      const std::int64_t L = base + pad - k;
      if (L < 1) throw ValidationError("build_bad_scheme: emitted length fell below 1");
      if (p == 2.0 ? L < i
                   : std::pow(static_cast<double>(L), pm1) < static_cast<double>(i) * (1.0 - 1e-12))
        throw Error("build_bad_scheme: growth floor violated (internal)");
      if (L < prev_len)
        throw Error("build_bad_scheme: lengths decreased inside a block (internal)");
      prev_len = L;
      sch.index.push_back(i);
      sch.pairs.push_back({anchors[static_cast<std::size_t>(k)], L});
    }
  }
  return sch;
}

// ------------------------------------------------------------------- limsup

struct LimsupReport {
  std::int64_t points = 0;
  double threshold = 0.0;
  double fraction = 0.0;        // share of points whose max clears the threshold
  double mean_max = 0.0;
  std::vector<double> deciles;  // 0%, 10%, ..., 100% of the per-point maxima
  bool exact = false;           // per-point values computed by exact prefix sums
};

// Per-point maximum of M(v,L)f over the scheme prefix, for sampled points.
inline LimsupReport limsup_estimate(const System& sys, const Observable& f,
                                    const std::vector<WindowPair>& pairs, std::int64_t points,
                                    double threshold, int threads = 1,
                                    std::uint64_t budget = 1ull << 36) {
  if (pairs.empty()) throw ValidationError("limsup_estimate: scheme prefix must be nonempty");
  if (points < 1) throw ValidationError("limsup_estimate: points must be >= 1");

  LimsupReport rep;
  rep.points = points;
  rep.threshold = threshold;
  std::vector<double> maxima(static_cast<std::size_t>(points), 0.0);

  if (const CyclicSystem* cyc = std::get_if<CyclicSystem>(&sys)) {
    rep.exact = true;
    const auto op = detail::orbit_prefix(*cyc, detail::cyclic_values(sys, f));
    std::vector<std::int64_t> slot_of(static_cast<std::size_t>(cyc->size), 0);
    for (std::int64_t j = 0; j < cyc->size; ++j)
      slot_of[static_cast<std::size_t>(op.order[static_cast<std::size_t>(j)])] = j;
    run_blocks(points, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
      for (std::int64_t t = lo; t < hi; ++t) {
        const PointHandle ph = sample_point(sys, static_cast<std::uint64_t>(t));
        const std::int64_t slot = slot_of[static_cast<std::size_t>(ph.index)];
        double best = -std::numeric_limits<double>::infinity();
        for (const WindowPair& pr : pairs)
          best = std::max(best,
                          op.window_sum(slot, pr.v + 1, pr.v + pr.L) / static_cast<double>(pr.L));
        maxima[static_cast<std::size_t>(t)] = best;
      }
    });
  } else {
    double cost = 0.0;
    for (const WindowPair& pr : pairs) cost += static_cast<double>(pr.v + pr.L);
    if (cost * static_cast<double>(points) > static_cast<double>(budget))
      throw BudgetError("limsup_estimate: points * total window extent exceeds budget");
    run_blocks(points, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
      for (std::int64_t t = lo; t < hi; ++t) {
        const PointHandle ph = sample_point(sys, static_cast<std::uint64_t>(t));
        double best = -std::numeric_limits<double>::infinity();
        for (const WindowPair& pr : pairs)
          best = std::max(best, moving_average(sys, f, ph, pr.v, pr.L));
        maxima[static_cast<std::size_t>(t)] = best;
      }
    });
  }

  KahanSum acc;
  std::int64_t hits = 0;
  for (double m : maxima) {
    acc.add(m);
    if (m >= threshold) ++hits;
  }
  rep.mean_max = acc.value() / static_cast<double>(points);
  rep.fraction = static_cast<double>(hits) / static_cast<double>(points);
  std::sort(maxima.begin(), maxima.end());
  for (int d = 0; d <= 10; ++d)
    rep.deciles.push_back(
        maxima[static_cast<std::size_t>((points - 1) * d / 10)]);
  return rep;
}

inline LimsupReport limsup_estimate(const System& sys, const Observable& f, const BadScheme& sch,
                                    std::int64_t points, double threshold, int threads = 1,
                                    std::uint64_t budget = 1ull << 36) {
  return limsup_estimate(sys, f, sch.pairs, points, threshold, threads, budget);
}

// ----------------------------------------------------------------- pipeline

struct BadfunParams {
  std::int64_t cycle = 200000;
  FpParams fp;
  double eta = 0.125;
  std::int64_t points = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BadfunReport {
  FpSpec fp;
  std::int64_t anchor_count = 0;   // cells of the top peak block
  std::int64_t k_x = 0;            // stopping time at the first anchor
  std::int64_t ell_x = 0;
  VitaliResult vitali;
  std::int64_t certified = 0;      // |B'|
  double mu_bprime = 0.0;
  double a_n = 0.0;
  CoverPlan cover;
  BadScheme scheme;
  LimsupReport limsup;
};

// End-to-end adversarial run on a cycle:
//  1. build the F_p step function (peaks A_n, balancing plateau B);
//  2. backward stopping windows at the top block's cells;
//  3. Vitali-disjointify those windows (anchors lifted by N so nothing wraps);
//  4. certify the top-quarter depths of each selected window: the forward
//     window of length ell_x starting there keeps its mean above eta; the
//     certified starts form B';
//  5. greedily cover the cycle with shifted copies of B' (tau steps);
//  6. emit the quantized scheme anchored at the cover shifts;
//  7. estimate the per-point max of M(v,L)f against eta/8.
inline BadfunReport badfun_pipeline(const BadfunParams& par) {
  if (par.fp.n_max < 1) throw ValidationError("badfun_pipeline: n_max must be >= 1");
  const std::int64_t N = par.cycle;
  const CyclicSystem cyc(N, 1, par.seed);
  const System sys(cyc);

  BadfunReport rep;
  auto [fstep, spec] = build_fp_function(par.fp, cyc);
  rep.fp = spec;
  const std::vector<double>& v = fstep.values;

  const std::int64_t top_start = spec.block_start.back();
  const std::int64_t top_cells = spec.cells.back();
  rep.anchor_count = top_cells;

  const auto wins = backward_anchor_windows(v, 0.5, N);
  std::vector<Interval> iv;
  std::vector<std::int64_t> anchor_of;
  for (std::int64_t i = 0; i < top_cells; ++i) {
    const std::int64_t x = top_start + i;
    const AnchorWindow& w = wins[static_cast<std::size_t>(x)];
    if (w.stopped && w.length >= 1) {
      iv.push_back({x + N - w.length + 1, w.length});
      anchor_of.push_back(x);
    }
  }
  if (iv.empty())
    throw ValidationError("badfun_pipeline: no anchor cell produced a backward window");
  rep.ell_x = iv[0].length;
  rep.k_x = rep.ell_x + 1;

  rep.vitali = vitali_disjointify(iv);

  // doubled prefix over the cycle for exact window sums
  std::vector<double> P(static_cast<std::size_t>(2 * N) + 1, 0.0);
  for (std::int64_t q = 1; q <= 2 * N; ++q)
    P[static_cast<std::size_t>(q)] =
        P[static_cast<std::size_t>(q - 1)] + v[static_cast<std::size_t>((q - 1) % N)];

  std::vector<char> in_b(static_cast<std::size_t>(N), 0);
  std::vector<BadWindow> bw;
  for (std::size_t sel : rep.vitali.selected) {
    const std::int64_t x = anchor_of[sel];
    const std::int64_t ell = iv[sel].length;
    const std::int64_t kx = ell + 1;
    const double back =
        (P[static_cast<std::size_t>(x + N + 1)] - P[static_cast<std::size_t>(x + N + 1 - ell)]) /
        static_cast<double>(ell);
    bw.push_back({((x - ell + 1) % N + N) % N, ell, back});
    for (std::int64_t m = (3 * kx + 3) / 4; m < kx; ++m) {
      const std::int64_t y = ((x - m) % N + N) % N;
      const double sum =
          P[static_cast<std::size_t>(y + ell)] - P[static_cast<std::size_t>(y)];
      if (sum > par.eta * static_cast<double>(ell)) in_b[static_cast<std::size_t>(y)] = 1;
    }
  }
  std::vector<std::int64_t> bp;
  for (std::int64_t i = 0; i < N; ++i)
    if (in_b[static_cast<std::size_t>(i)]) bp.push_back(i);
  rep.certified = static_cast<std::int64_t>(bp.size());
  rep.mu_bprime = static_cast<double>(rep.certified) / static_cast<double>(N);
  if (bp.empty()) throw ValidationError("badfun_pipeline: certification produced no points");

  rep.a_n = fp_raw_heights(par.fp).back();
  const double pm1 = par.fp.p - 1.0;
  const double delta = std::pow(par.eta * par.eta / 16.0, 1.0 / pm1);
  const auto tau = static_cast<std::int64_t>(std::floor(std::pow(rep.a_n * delta, pm1)));
  if (tau < 1) throw ResolutionError("a_n too small for quantization");

  rep.cover = greedy_cover(cyc, {bp}, static_cast<int>(tau), par.seed);
  rep.scheme = build_bad_scheme(bw, par.eta, par.fp.p, rep.a_n, rep.cover);
  rep.limsup =
      limsup_estimate(sys, Observable(fstep), rep.scheme.pairs, par.points, par.eta / 8.0,
                      par.threads);
  return rep;
}

}  // namespace ergolab
