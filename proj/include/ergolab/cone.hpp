#pragma once
// Cone geometry. A window pair (v, L) owns the vertical cone with vertex
// (v, L) and a 90 degree opening, so its cross-section at height lambda is
// the interval [v - (lambda - L), v + (lambda - L)] once lambda >= L.
// C(lambda) is the length of the union of these intervals; schemes whose
// C(lambda)/lambda stays bounded are the well-behaved ones.
//
// Vertex coordinates are kept as reals: 64-bit offsets widen exactly, and
// the hyperlacunary family stays exact through n = 5 this way.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/errors.hpp"

namespace ergolab {

struct Cone {
  double v = 0;
  double L = 1;
};

inline std::vector<Cone> cones_of(const std::vector<WindowPair>& pairs) {
  std::vector<Cone> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    out.push_back({static_cast<double>(p.v), static_cast<double>(p.L)});
  return out;
}

// exact sort-and-sweep union length of the height-lambda cross-section
inline double cross_section_length(const std::vector<Cone>& cones, double lambda) {
  if (!(lambda > 0)) throw ValidationError("cross-section height must be > 0");
  if (cones.empty()) throw ValidationError("cross-section needs at least one cone");
  std::vector<std::pair<double, double>> iv;
  iv.reserve(cones.size());
  for (const auto& c : cones) {
    if (c.L <= lambda) iv.emplace_back(c.v - (lambda - c.L), c.v + (lambda - c.L));
  }
  if (iv.empty()) return 0.0;
  std::sort(iv.begin(), iv.end());
  double total = 0.0;
  double lo = iv[0].first, hi = iv[0].second;
  for (std::size_t i = 1; i < iv.size(); ++i) {
    if (iv[i].first > hi) {
      total += hi - lo;
      lo = iv[i].first;
      hi = iv[i].second;
    } else {
      hi = std::max(hi, iv[i].second);
    }
  }
  return total + (hi - lo);
}

struct ConeProfile {
  std::vector<double> lambdas;
  std::vector<double> lengths;  // C(lambda)
  std::vector<double> ratios;   // C(lambda)/lambda
  double max_ratio = 0;
  double witness_lambda = 0;
};

struct GridSpec {
  double lambda_min = 0;  // 0 means derive from the cones
  double lambda_max = 0;
  int per_decade = 64;
};

inline ConeProfile profile_cones(const std::vector<Cone>& cones, GridSpec grid = {}) {
  if (cones.empty()) throw ValidationError("profile needs at least one cone");
  double lmin = grid.lambda_min, lmax = grid.lambda_max;
  double minL = cones[0].L, maxL = cones[0].L;
  for (const auto& c : cones) {
    minL = std::min(minL, c.L);
    maxL = std::max(maxL, c.L);
  }
  if (lmin <= 0) lmin = minL;
  if (lmax <= 0) lmax = std::max(64.0 * minL, 2.0 * maxL);
  if (!(lmax >= lmin)) throw ValidationError("profile grid is empty");
  if (grid.per_decade < 1) throw ValidationError("profile grid needs points per decade");

  std::vector<double> grid_pts;
  for (const auto& c : cones)
    if (c.L >= lmin && c.L <= lmax) grid_pts.push_back(c.L);
  grid_pts.push_back(lmin);
  grid_pts.push_back(lmax);
  const double lgstep = 1.0 / grid.per_decade;
  for (double lg = std::ceil(std::log10(lmin) / lgstep) * lgstep;
       lg < std::log10(lmax); lg += lgstep) {
    const double x = std::pow(10.0, lg);
    if (x > lmin && x < lmax) grid_pts.push_back(x);
  }
  std::sort(grid_pts.begin(), grid_pts.end());
  grid_pts.erase(std::unique(grid_pts.begin(), grid_pts.end()), grid_pts.end());

  ConeProfile pr;
  pr.lambdas = std::move(grid_pts);
  pr.lengths.reserve(pr.lambdas.size());
  pr.ratios.reserve(pr.lambdas.size());
  for (double lam : pr.lambdas) {
    const double c = cross_section_length(cones, lam);
    const double ratio = c / lam;
    pr.lengths.push_back(c);
    pr.ratios.push_back(ratio);
    if (ratio > pr.max_ratio) {
      pr.max_ratio = ratio;
      pr.witness_lambda = lam;
    }
  }
  return pr;
}

// profile of the first n_max cones of a named scheme
inline ConeProfile ratio_profile(const SchemeSpec& spec, int n_max, GridSpec grid = {}) {
  if (n_max < 1) throw ValidationError("ratio profile needs n_max >= 1");
  std::vector<Cone> cones;
  cones.reserve(static_cast<std::size_t>(n_max));
  double prevL = 0;
  for (int n = 1; n <= n_max; ++n) {
    const RealPair rp = scheme_pair_real(spec, n);
    if (!(rp.L > prevL))
      throw ValidationError("window lengths must be strictly increasing");
    prevL = rp.L;
    cones.push_back({rp.v, rp.L});
  }
  return profile_cones(cones, grid);
}

// The infinite condition is undecidable from a prefix, so the verdict only
// describes the computed range: the profile counts as saturating when the
// global maximum stays within 10% of the running maximum over the first
// tenth of the range, and as growing when it exceeds that by half again.
inline std::string cone_verdict(const ConeProfile& pr) {
  if (pr.lambdas.empty()) return "inconclusive";
  const double split = pr.lambdas.back() / 10.0;
  double early = 0;
  for (std::size_t i = 0; i < pr.lambdas.size() && pr.lambdas[i] <= split; ++i)
    early = std::max(early, pr.ratios[i]);
  if (early == 0) early = pr.ratios[0];
  if (pr.max_ratio >= 1.5 * early) return "growth-detected";
  if (pr.max_ratio <= 1.1 * early) return "bounded-on-range";
  return "inconclusive";
}

// Offsets spreading the given lengths so the cross-section ratio provably
// reaches the group count: group k holds k cones at pairwise gaps > 2*lambda_k
// with lambda_k = 2 * (largest length in the group), so C(lambda_k) >= k*lambda_k.
inline std::vector<std::int64_t> failing_offsets(const std::vector<std::int64_t>& lengths,
                                                 double k_target) {
  if (lengths.empty()) throw ValidationError("failing offsets need lengths");
  for (std::size_t i = 0; i + 1 < lengths.size(); ++i)
    if (lengths[i + 1] <= lengths[i])
      throw ValidationError("lengths must be strictly increasing");
  if (lengths[0] < 1) throw ValidationError("lengths must be >= 1");

  const std::size_t m = lengths.size();
  std::vector<std::size_t> group_end;  // exclusive end index of each group
  std::size_t at = 0;
  for (std::size_t k = 1; at + k <= m; ++k) {
    at += k;
    group_end.push_back(at);
  }
  if (group_end.empty() || at < m) group_end.push_back(m);  // leftover partial group

  std::vector<std::int64_t> offsets(m, 0);
  __int128 cursor = 0;
  std::size_t begin = 0;
  for (std::size_t g = 0; g < group_end.size(); ++g) {
    const std::size_t end = group_end[g];
    const std::int64_t lambda_k = 2 * lengths[end - 1];
    const __int128 gap = static_cast<__int128>(2) * lambda_k + 1;
    for (std::size_t i = begin; i < end; ++i) {
      if (cursor > (static_cast<__int128>(1) << 62))
        throw OverflowError("failing offsets overflow 64-bit coordinates");
      offsets[i] = static_cast<std::int64_t>(cursor);
      cursor += gap;
    }
    begin = end;
  }

  // post-verification at every group witness height
  std::vector<Cone> cones;
  cones.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    cones.push_back({static_cast<double>(offsets[i]), static_cast<double>(lengths[i])});
  double best = 0;
  begin = 0;
  for (std::size_t g = 0; g < group_end.size(); ++g) {
    const double lam = 2.0 * static_cast<double>(lengths[group_end[g] - 1]);
    best = std::max(best, cross_section_length(cones, lam) / lam);
    begin = group_end[g];
  }
  if (best < k_target)
    throw ValidationError("target ratio " + format_real(k_target) +
                          " not reachable with these lengths; best achieved " +
                          format_real(best));
  return offsets;
}

struct SubsequenceResult {
  std::vector<int> indices;  // accepted 1-based scheme indices
  double max_ratio = 0;
};

// greedy prefix thinning: keep a cone only if the profile of everything kept
// so far stays within ratio K
inline SubsequenceResult good_subsequence(const SchemeSpec& spec, double k_bound,
                                          int n_max) {
  if (!(k_bound > 2))
    throw ValidationError("subsequence bound must exceed 2, the single-cone supremum");
  if (n_max < 1) throw ValidationError("good subsequence needs n_max >= 1");
  SubsequenceResult res;
  std::vector<Cone> kept;
  for (int n = 1; n <= n_max; ++n) {
    const RealPair rp = scheme_pair_real(spec, n);
    kept.push_back({rp.v, rp.L});
    const ConeProfile pr = profile_cones(kept);
    if (pr.max_ratio <= k_bound) {
      res.indices.push_back(n);
      res.max_ratio = pr.max_ratio;
    } else {
      kept.pop_back();
    }
  }
  return res;
}

}  // namespace ergolab
