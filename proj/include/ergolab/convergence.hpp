#pragma once

// Complete-convergence diagnostics: exceedance scans over orbit averages and
// over iid block means, slope-based series verdicts, disjoint-block demos,
// Hoeffding bounds, and the conditional-expectation decomposition scan.
//
// Scan estimates share samples across deltas within one scan, so the
// estimated exceedance curves are pointwise nonincreasing in delta by
// construction, not just in expectation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/observables.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/util.hpp"

namespace ergolab {

// ---------------------------------------------------------------- samplers

enum class SamplerKind { rademacher, uniform_centered, pareto_centered, discrete_table };

inline const char* sampler_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::rademacher: return "rademacher";
    case SamplerKind::uniform_centered: return "uniform-centered";
    case SamplerKind::pareto_centered: return "pareto-centered";
    case SamplerKind::discrete_table: return "discrete";
  }
  return "?";
}

// Counter-based iid stream: draw(trial, i) is a pure function of
// (seed, kind, trial, i), so any subset of the stream can be regenerated
// independently and thread count never changes the values.
struct IIDSampler {
  SamplerKind kind = SamplerKind::rademacher;
  std::uint64_t seed = 0;
  double alpha = 2.0;       // pareto tail exponent
  double half_width = 1.0;  // uniform support radius
  std::vector<double> values;
  std::vector<double> cdf;

  static IIDSampler rademacher(std::uint64_t seed) {
    IIDSampler s;
    s.kind = SamplerKind::rademacher;
    s.seed = seed;
    return s;
  }

  static IIDSampler uniform(std::uint64_t seed, double half_width = 1.0) {
    if (!(half_width > 0.0)) throw ValidationError("uniform sampler: half_width must be > 0");
    IIDSampler s;
    s.kind = SamplerKind::uniform_centered;
    s.seed = seed;
    s.half_width = half_width;
    return s;
  }

  // Centered Pareto: u^(-1/alpha) - alpha/(alpha-1) with u uniform on (0,1].
  // P(draw + mean > t) = t^-alpha for t >= 1.  Centering needs a finite mean,
  // hence alpha > 1.
  static IIDSampler pareto(std::uint64_t seed, double alpha) {
    if (!(alpha > 1.0)) throw ValidationError("pareto sampler: alpha must be > 1 (finite mean)");
    IIDSampler s;
    s.kind = SamplerKind::pareto_centered;
    s.seed = seed;
    s.alpha = alpha;
    return s;
  }

  static IIDSampler discrete(std::uint64_t seed, std::vector<double> values,
                             const std::vector<double>& probs) {
    if (values.empty() || values.size() != probs.size())
      throw ValidationError("discrete sampler: values/probs size mismatch");
    IIDSampler s;
    s.kind = SamplerKind::discrete_table;
    s.seed = seed;
    s.values = std::move(values);
    double acc = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw ValidationError("discrete sampler: negative probability");
      acc += p;
      s.cdf.push_back(acc);
    }
    if (std::fabs(acc - 1.0) > 1e-12)
      throw ValidationError("discrete sampler: probabilities sum to " + format_real(acc));
    s.cdf.back() = 1.0;
    return s;
  }

  double draw(std::uint64_t trial, std::uint64_t i) const {
    const std::uint64_t bits =
        mix64(seed, 0x69696400u + static_cast<std::uint64_t>(kind), trial, i);
    switch (kind) {
      case SamplerKind::rademacher:
        return (bits & 1u) ? 1.0 : -1.0;
      case SamplerKind::uniform_centered:
        return half_width * (2.0 * unit_double(bits) - 1.0);
      case SamplerKind::pareto_centered: {
        const double u = unit_double_pos(bits);
        return std::pow(u, -1.0 / alpha) - alpha / (alpha - 1.0);
      }
      case SamplerKind::discrete_table: {
        const double u = unit_double(bits);
        std::size_t lo = 0;
        while (lo + 1 < cdf.size() && u >= cdf[lo]) ++lo;
        return values[lo];
      }
    }
    return 0.0;
  }
};

// ------------------------------------------------------------ series verdict

struct SlopeReport {
  double slope = 0.0;
  double tail_increment = 0.0;  // estimate of the last series term
  int points = 0;               // points used in the fit
  std::string verdict;          // diverging | saturating | inconclusive
};

// Least-squares slope of log(partial sum) against log(n) over the last
// decade n in [max(2, ceil(N/10)), N], using only points with a positive
// partial sum.  Verdict thresholds:
//   slope >= 0.2                                   -> diverging
//   slope <= 0.02 and last term estimate < 1e-3    -> saturating
//   otherwise                                      -> inconclusive
// Fewer than two usable points means the series never got off the ground;
// that reads as saturating.
inline SlopeReport slope_verdict(const std::vector<double>& partial_sums, double last_term) {
  const std::size_t N = partial_sums.size();
  if (N == 0) throw ValidationError("slope_verdict: empty series");
  std::size_t lo = std::max<std::size_t>(2, (N + 9) / 10);
  if (lo > N) lo = N;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t n = lo; n <= N; ++n) {
    const double s = partial_sums[n - 1];
    if (!(s > 0.0)) continue;
    const double x = std::log(static_cast<double>(n));
    const double y = std::log(s);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  SlopeReport r;
  r.tail_increment = last_term;
  r.points = m;
  if (m < 2) {
    r.verdict = "saturating";
    return r;
  }
  const double denom = m * sxx - sx * sx;
  r.slope = denom > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  if (r.slope >= 0.2)
    r.verdict = "diverging";
  else if (r.slope <= 0.02 && r.tail_increment < 1e-3)
    r.verdict = "saturating";
  else
    r.verdict = "inconclusive";
  return r;
}

// ------------------------------------------------------------------- scans

struct ScanRow {
  double delta = 0.0;
  bool exact = false;
  std::vector<double> estimates;     // mu(|M(0,L_n)| >= delta), n = 1..N
  std::vector<double> stderrs;       // 0 when exact
  std::vector<double> partial_sums;  // running sum of estimates
  SlopeReport slope;
};

struct ScanResult {
  std::vector<std::int64_t> lengths;
  std::int64_t trials = 0;  // 0: exact enumeration over the whole space
  std::vector<ScanRow> rows;
};

namespace detail {

inline void validate_scan_inputs(const std::vector<std::int64_t>& lengths,
                                 const std::vector<double>& deltas) {
  if (lengths.empty()) throw ValidationError("scan: empty length list");
  std::int64_t prev = 0;
  for (std::int64_t L : lengths) {
    if (L <= prev) throw ValidationError("scan: lengths must be strictly increasing and >= 1");
    prev = L;
  }
  if (deltas.empty()) throw ValidationError("scan: empty delta list");
  for (double d : deltas)
    if (!(d > 0.0)) throw ValidationError("scan: deltas must be > 0");
}

inline void finish_row(ScanRow& row) {
  KahanSum acc;
  row.partial_sums.clear();
  row.partial_sums.reserve(row.estimates.size());
  for (double e : row.estimates) {
    acc.add(e);
    row.partial_sums.push_back(acc.value());
  }
  row.slope = slope_verdict(row.partial_sums, row.estimates.back());
}

}  // namespace detail

// Exceedance scan for iid block means: estimates mu(|mean of L_n draws| >= delta)
// for every (delta, n).  One draw stream per trial is shared across all window
// lengths (each window is a prefix) and across all deltas.
//
// Exact mode: rademacher draws with delta >= 1 need no sampling, since
// |mean| >= 1 iff all L draws agree in sign, which has probability 2^(1-L)
// (and |mean| > 1 is impossible).  force_monte_carlo disables this, which is
// how the exact and sampled answers get compared.
inline ScanResult iid_exceedance_scan(const IIDSampler& sampler,
                                      const std::vector<std::int64_t>& lengths,
                                      const std::vector<double>& deltas, std::int64_t trials,
                                      int threads = 1, std::uint64_t budget = 1ull << 33,
                                      bool force_monte_carlo = false) {
  detail::validate_scan_inputs(lengths, deltas);
  if (trials <= 0) throw ValidationError("iid_exceedance_scan: trials must be >= 1");

  ScanResult out;
  out.lengths = lengths;
  out.trials = trials;
  const std::size_t n_len = lengths.size();
  const std::int64_t L_max = lengths.back();

  std::vector<std::size_t> mc_rows;
  for (std::size_t r = 0; r < deltas.size(); ++r) {
    ScanRow row;
    row.delta = deltas[r];
    if (!force_monte_carlo && sampler.kind == SamplerKind::rademacher && deltas[r] >= 1.0) {
      row.exact = true;
      row.estimates.resize(n_len, 0.0);
      row.stderrs.resize(n_len, 0.0);
      if (deltas[r] == 1.0)
        for (std::size_t k = 0; k < n_len; ++k) {
          const std::int64_t L = lengths[k];
          row.estimates[k] = L >= 1100 ? 0.0 : std::ldexp(1.0, static_cast<int>(1 - L));
        }
    } else {
      mc_rows.push_back(r);
    }
    out.rows.push_back(std::move(row));
  }

  if (!mc_rows.empty()) {
    const double work = static_cast<double>(trials) * static_cast<double>(L_max);
    if (work > static_cast<double>(budget))
      throw BudgetError("iid_exceedance_scan: trials*L_max = " + format_real(work) +
                        " exceeds budget " + std::to_string(budget));

    std::vector<std::vector<std::int64_t>> counts(mc_rows.size(),
                                                  std::vector<std::int64_t>(n_len, 0));
    std::mutex merge;
    run_blocks(trials, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
      std::vector<std::vector<std::int64_t>> local(mc_rows.size(),
                                                   std::vector<std::int64_t>(n_len, 0));
      for (std::int64_t t = lo; t < hi; ++t) {
        double sum = 0.0;
        std::size_t k = 0;
        for (std::int64_t i = 1; i <= L_max && k < n_len; ++i) {
          sum += sampler.draw(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i));
          if (i == lengths[k]) {
            const double mean = std::fabs(sum / static_cast<double>(i));
            for (std::size_t r = 0; r < mc_rows.size(); ++r)
              if (mean >= deltas[mc_rows[r]]) ++local[r][k];
            ++k;
          }
        }
      }
      std::lock_guard<std::mutex> g(merge);
      for (std::size_t r = 0; r < mc_rows.size(); ++r)
        for (std::size_t k = 0; k < n_len; ++k) counts[r][k] += local[r][k];
    });

    for (std::size_t r = 0; r < mc_rows.size(); ++r) {
      ScanRow& row = out.rows[mc_rows[r]];
      row.estimates.resize(n_len);
      row.stderrs.resize(n_len);
      for (std::size_t k = 0; k < n_len; ++k) {
        const double p = static_cast<double>(counts[r][k]) / static_cast<double>(trials);
        row.estimates[k] = p;
        row.stderrs[k] = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
      }
    }
  }

  for (ScanRow& row : out.rows) detail::finish_row(row);
  return out;
}

inline ScanResult iid_exceedance_scan(const IIDSampler& sampler, const SchemeSpec& spec,
                                      int count, const std::vector<double>& deltas,
                                      std::int64_t trials, int threads = 1,
                                      std::uint64_t budget = 1ull << 33,
                                      bool force_monte_carlo = false) {
  return iid_exceedance_scan(sampler, scheme_lengths(spec, count), deltas, trials, threads,
                             budget, force_monte_carlo);
}

// Exceedance scan along orbits: estimates mu{x : |M(0,L_n)f(x)| >= delta}.
//
// Cyclic systems are enumerated exactly (stderr 0) when the accounting
// product #windows * L_max * #points stays within budget; the implementation
// itself goes through a doubled orbit prefix, so the actual work is
// #points * (#points + #windows).  Everything else is Monte Carlo over
// sampled start points, with cost trials * L_max held to the same budget.
inline ScanResult exceedance_scan(const System& sys, const Observable& f,
                                  const std::vector<std::int64_t>& lengths,
                                  const std::vector<double>& deltas, std::int64_t trials,
                                  int threads = 1, std::uint64_t budget = 1ull << 36) {
  detail::validate_scan_inputs(lengths, deltas);
  ScanResult out;
  out.lengths = lengths;
  const std::size_t n_len = lengths.size();
  const std::int64_t L_max = lengths.back();

  const CyclicSystem* cyc = std::get_if<CyclicSystem>(&sys);
  const bool exact =
      cyc != nullptr && static_cast<double>(n_len) * static_cast<double>(L_max) *
                                static_cast<double>(cyc->size) <=
                            static_cast<double>(budget);

  if (exact) {
    out.trials = 0;
    const auto pf = detail::orbit_prefix(*cyc, detail::cyclic_values(sys, f));
    const std::int64_t n_pts = cyc->size;
    std::vector<std::vector<std::int64_t>> counts(deltas.size(),
                                                  std::vector<std::int64_t>(n_len, 0));
    for (std::int64_t j = 0; j < n_pts; ++j)
      for (std::size_t k = 0; k < n_len; ++k) {
        const double mean =
            std::fabs(pf.window_sum(j, 1, lengths[k]) / static_cast<double>(lengths[k]));
        for (std::size_t r = 0; r < deltas.size(); ++r)
          if (mean >= deltas[r]) ++counts[r][k];
      }
    for (std::size_t r = 0; r < deltas.size(); ++r) {
      ScanRow row;
      row.delta = deltas[r];
      row.exact = true;
      row.stderrs.resize(n_len, 0.0);
      for (std::size_t k = 0; k < n_len; ++k)
        row.estimates.push_back(static_cast<double>(counts[r][k]) /
                                static_cast<double>(n_pts));
      detail::finish_row(row);
      out.rows.push_back(std::move(row));
    }
    return out;
  }

  if (trials <= 0) throw ValidationError("exceedance_scan: trials must be >= 1");
  const double work = static_cast<double>(trials) * static_cast<double>(L_max);
  if (work > static_cast<double>(budget))
    throw BudgetError("exceedance_scan: trials*L_max = " + format_real(work) +
                      " exceeds budget " + std::to_string(budget));

  out.trials = trials;
  std::vector<std::vector<std::int64_t>> counts(deltas.size(),
                                                std::vector<std::int64_t>(n_len, 0));
  std::mutex merge;
  run_blocks(trials, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
    std::vector<std::vector<std::int64_t>> local(deltas.size(),
                                                 std::vector<std::int64_t>(n_len, 0));
    for (std::int64_t t = lo; t < hi; ++t) {
      PointHandle p = sample_point(sys, static_cast<std::uint64_t>(t));
      double sum = 0.0;
      std::size_t k = 0;
      for (std::int64_t i = 1; i <= L_max && k < n_len; ++i) {
        p = advance(sys, p, 1);
        sum += eval(sys, f, p);
        if (i == lengths[k]) {
          const double mean = std::fabs(sum / static_cast<double>(i));
          for (std::size_t r = 0; r < deltas.size(); ++r)
            if (mean >= deltas[r]) ++local[r][k];
          ++k;
        }
      }
    }
    std::lock_guard<std::mutex> g(merge);
    for (std::size_t r = 0; r < deltas.size(); ++r)
      for (std::size_t k = 0; k < n_len; ++k) counts[r][k] += local[r][k];
  });

  for (std::size_t r = 0; r < deltas.size(); ++r) {
    ScanRow row;
    row.delta = deltas[r];
    row.stderrs.resize(n_len);
    row.estimates.resize(n_len);
    for (std::size_t k = 0; k < n_len; ++k) {
      const double p = static_cast<double>(counts[r][k]) / static_cast<double>(trials);
      row.estimates[k] = p;
      row.stderrs[k] = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    }
    detail::finish_row(row);
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline ScanResult exceedance_scan(const System& sys, const Observable& f, const SchemeSpec& spec,
                                  int count, const std::vector<double>& deltas,
                                  std::int64_t trials, int threads = 1,
                                  std::uint64_t budget = 1ull << 36) {
  return exceedance_scan(sys, f, scheme_lengths(spec, count), deltas, trials, threads, budget);
}

// --------------------------------------------------------- disjoint blocks

struct ErdosReport {
  std::int64_t n_blocks = 0;
  std::int64_t trials = 0;
  bool blocks_disjoint = false;
  std::vector<std::int64_t> block_start;   // block n covers start+1 .. start+n
  std::vector<double> block_exceed_rate;   // fraction of trials with |mean| > 1
  std::vector<double> partial_sums;
  double mean_exceed_count = 0.0;          // mean #{n : |block mean| > 1} per trial
  double max_abs_corr = 0.0;               // adjacent block means, pooled per pair
  double corr_bound = 0.0;                 // 4/sqrt(trials)
  SlopeReport slope;
};

// Averages over the disjoint blocks {v_n+1, ..., v_n+n}, v_n = n(n+1)/2.
// The blocks never overlap, so the block means are independent and the count
// of exceeding blocks concentrates around the sum of the per-block rates.
// Exceedance here is strict: |mean| > 1.
inline ErdosReport erdos_block_demo(const IIDSampler& sampler, std::int64_t n_blocks,
                                    std::int64_t trials, int threads = 1) {
  if (n_blocks < 1 || n_blocks > 4000)
    throw ValidationError("erdos_block_demo: n_blocks out of range [1, 4000]");
  if (trials <= 0) throw ValidationError("erdos_block_demo: trials must be >= 1");

  ErdosReport rep;
  rep.n_blocks = n_blocks;
  rep.trials = trials;
  rep.corr_bound = 4.0 / std::sqrt(static_cast<double>(trials));

  rep.blocks_disjoint = true;
  std::int64_t prev_end = 0;
  for (std::int64_t n = 1; n <= n_blocks; ++n) {
    const std::int64_t v = n * (n + 1) / 2;
    rep.block_start.push_back(v);
    if (v + 1 <= prev_end) rep.blocks_disjoint = false;
    prev_end = v + n;
  }
  const std::int64_t i_max = prev_end;

  std::vector<std::int64_t> exceed(n_blocks, 0);
  std::int64_t total_exceed = 0;
  // adjacent-pair accumulators: sums of a, b, ab, a^2, b^2 pooled per pair
  std::vector<std::array<double, 5>> pair_acc(
      static_cast<std::size_t>(std::max<std::int64_t>(0, n_blocks - 1)), {0, 0, 0, 0, 0});
  std::mutex merge;

  run_blocks(trials, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
    std::vector<std::int64_t> l_exceed(n_blocks, 0);
    std::int64_t l_total = 0;
    std::vector<std::array<double, 5>> l_pair(pair_acc.size(), {0, 0, 0, 0, 0});
    std::vector<double> means(n_blocks);
    for (std::int64_t t = lo; t < hi; ++t) {
      std::int64_t n = 1, v = 1;  // v = block start + 1 = first index of block n
      double sum = 0.0;
      std::int64_t in_block = 0;
      for (std::int64_t i = 2; i <= i_max && n <= n_blocks; ++i) {
        if (i < v + 1) continue;  // gap index between blocks
        sum += sampler.draw(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i));
        if (++in_block == n) {
          means[n - 1] = sum / static_cast<double>(n);
          if (std::fabs(means[n - 1]) > 1.0) {
            ++l_exceed[n - 1];
            ++l_total;
          }
          ++n;
          v = n * (n + 1) / 2;
          sum = 0.0;
          in_block = 0;
        }
      }
      for (std::size_t q = 0; q + 1 < static_cast<std::size_t>(n_blocks); ++q) {
        const double a = means[q], b = means[q + 1];
        l_pair[q][0] += a;
        l_pair[q][1] += b;
        l_pair[q][2] += a * b;
        l_pair[q][3] += a * a;
        l_pair[q][4] += b * b;
      }
    }
    std::lock_guard<std::mutex> g(merge);
    for (std::int64_t n = 0; n < n_blocks; ++n) exceed[n] += l_exceed[n];
    total_exceed += l_total;
    for (std::size_t q = 0; q < pair_acc.size(); ++q)
      for (int c = 0; c < 5; ++c) pair_acc[q][c] += l_pair[q][c];
  });

  KahanSum acc;
  for (std::int64_t n = 0; n < n_blocks; ++n) {
    const double rate = static_cast<double>(exceed[n]) / static_cast<double>(trials);
    rep.block_exceed_rate.push_back(rate);
    acc.add(rate);
    rep.partial_sums.push_back(acc.value());
  }
  rep.mean_exceed_count = static_cast<double>(total_exceed) / static_cast<double>(trials);

  const double T = static_cast<double>(trials);
  for (const auto& pa : pair_acc) {
    const double ma = pa[0] / T, mb = pa[1] / T;
    const double cov = pa[2] / T - ma * mb;
    const double va = pa[3] / T - ma * ma;
    const double vb = pa[4] / T - mb * mb;
    if (va > 0.0 && vb > 0.0)
      rep.max_abs_corr = std::max(rep.max_abs_corr, std::fabs(cov / std::sqrt(va * vb)));
  }
  rep.slope = slope_verdict(rep.partial_sums, rep.block_exceed_rate.back());
  return rep;
}

// ---------------------------------------------------------------- hoeffding

struct HoeffdingResult {
  double bound = 0.0;
  double range_sq = 0.0;  // sum of (b_i - a_i)^2
  bool degenerate = false;
};

// Two-sided tail bound 2*exp(-2 t^2 / sum (b_i - a_i)^2) for
// P(|sum (X_i - E X_i)| >= t) with independent X_i in [a_i, b_i].
// All-degenerate ranges make the sum deterministic and equal to its mean, so
// the probability is 0 for every t > 0; that case is flagged rather than
// dividing by zero.
inline HoeffdingResult hoeffding_bound(const std::vector<double>& a, const std::vector<double>& b,
                                       double t) {
  if (a.empty() || a.size() != b.size())
    throw ValidationError("hoeffding_bound: interval lists empty or mismatched");
  if (!(t > 0.0)) throw ValidationError("hoeffding_bound: t must be > 0");
  HoeffdingResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = b[i] - a[i];
    if (!(w >= 0.0)) throw ValidationError("hoeffding_bound: b[i] < a[i]");
    r.range_sq += w * w;
  }
  if (r.range_sq == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.bound = 2.0 * std::exp(-2.0 * t * t / r.range_sq);
  return r;
}

struct EmpiricalTail {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::int64_t trials = 0;
};

// Empirical companion: X_i uniform on [a_i, b_i], centered sum tested
// against t.  The rate should land at or below the bound (plus noise).
inline EmpiricalTail hoeffding_empirical(const std::vector<double>& a,
                                         const std::vector<double>& b, double t,
                                         std::int64_t trials, std::uint64_t seed,
                                         int threads = 1) {
  if (a.empty() || a.size() != b.size())
    throw ValidationError("hoeffding_empirical: interval lists empty or mismatched");
  if (!(t > 0.0)) throw ValidationError("hoeffding_empirical: t must be > 0");
  if (trials <= 0) throw ValidationError("hoeffding_empirical: trials must be >= 1");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(b[i] >= a[i])) throw ValidationError("hoeffding_empirical: b[i] < a[i]");

  std::int64_t count = 0;
  std::mutex merge;
  run_blocks(trials, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
    std::int64_t local = 0;
    for (std::int64_t tr = lo; tr < hi; ++tr) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double u = unit_double(
            mix64(seed, 0x70e55u, static_cast<std::uint64_t>(tr), static_cast<std::uint64_t>(i)));
        s += (b[i] - a[i]) * (u - 0.5);  // centered draw
      }
      if (std::fabs(s) >= t) ++local;
    }
    std::lock_guard<std::mutex> g(merge);
    count += local;
  });

  EmpiricalTail e;
  e.trials = trials;
  e.estimate = static_cast<double>(count) / static_cast<double>(trials);
  e.stderr_ = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(trials));
  return e;
}

// -------------------------------------------- conditional decomposition scan

struct CofbReport {
  int n = 0;                // partition resolution P_n
  double delta = 0.0;
  double dev_bound = 0.0;   // sup |E - f|, from structure
  double dev_seen = 0.0;    // max |E - f| over sampled orbit evaluations
  double strided_corr_bound = 0.0;
  double max_strided_corr = 0.0;
  std::vector<std::int64_t> lengths;  // m = 1..N
  std::vector<double> direct;         // mu(|M(0,m)f| >= delta)
  std::vector<double> direct_se;
  std::vector<double> chain;          // sum over residue classes of class-mean tails
  std::vector<double> chain_se;
  bool chain_dominates = false;       // direct <= chain + 4*(se_d + se_c) for all m
  double direct_final = 0.0;          // partial sums at m = N
  double chain_final = 0.0;
};

namespace detail {

// Exact sup |E - f| when both are cylinder functions: enumerate the words of
// the wider one.  E coming out of conditional_expectation has radius n-1.
inline double cylinder_dev_exact(const ShiftSystem& sh, const CylinderObservable& f,
                                 const CylinderObservable& e) {
  const int rf = f.radius, re = e.radius;
  if (re > rf) throw ValidationError("cylinder_dev_exact: expectation wider than function");
  const int width = 2 * rf + 1;
  const std::int64_t s = sh.alphabet;
  double worst = 0.0;
  std::vector<int> d(width, 0);
  for (;;) {
    std::int64_t wf = 0, we = 0;
    for (int k = 0; k < width; ++k) wf = wf * s + d[k];
    for (int k = rf - re; k <= rf + re; ++k) we = we * s + d[k];
    worst = std::max(worst, std::fabs(f.table[static_cast<std::size_t>(wf)] -
                                      e.table[static_cast<std::size_t>(we)]));
    int k = width - 1;
    while (k >= 0 && d[k] == s - 1) d[k--] = 0;
    if (k < 0) break;
    ++d[k];
  }
  return worst;
}

}  // namespace detail

// Decomposition scan: compares a direct exceedance scan of M(0,m)f against
// the union bound that comes from replacing f by E = E(f | P_n) and splitting
// window indices into residue classes mod 2n.  E is P_n-measurable, so values
// of E at orbit times 2n apart depend on disjoint coordinate windows and are
// independent; for each m,
//   mu(|M(0,m)f| >= delta) <= sum_k mu(|class-k mean of E| >= delta - dev)
// with dev = sup|E - f|.  Both sides are estimated from the same sample.
inline CofbReport cofb_decomposition_scan(const System& sys, const Observable& f, int n,
                                          double delta, std::int64_t N, std::int64_t trials,
                                          int threads = 1) {
  const ShiftSystem* sh = std::get_if<ShiftSystem>(&sys);
  if (sh == nullptr) throw IncompatibleError("cofb_decomposition_scan: needs a shift system");
  if (n < 1) throw ValidationError("cofb_decomposition_scan: n must be >= 1");
  if (N < 1) throw ValidationError("cofb_decomposition_scan: N must be >= 1");
  if (trials <= 0) throw ValidationError("cofb_decomposition_scan: trials must be >= 1");
  if (!(delta > 0.0)) throw ValidationError("cofb_decomposition_scan: delta must be > 0");

  CofbReport rep;
  rep.n = n;
  rep.delta = delta;
  rep.strided_corr_bound = 4.0 / std::sqrt(static_cast<double>(trials));

  const Observable E(conditional_expectation(*sh, f, n));

  if (const CylinderObservable* cf = std::get_if<CylinderObservable>(&f)) {
    rep.dev_bound = cf->radius <= n - 1
                        ? 0.0
                        : detail::cylinder_dev_exact(*sh, *cf, std::get<CylinderObservable>(E));
  } else if (const EncodedObservable* ef = std::get_if<EncodedObservable>(&f)) {
    // points in one P_n cell agree on coordinates |k| <= n-1; the encoding
    // then pins them within (2/3)*2^(1-n) of each other
    rep.dev_bound = ef->lipschitz * (2.0 / 3.0) * std::ldexp(1.0, 1 - n);
  } else {
    throw IncompatibleError("cofb_decomposition_scan: observable must be cylinder or encoded");
  }

  const double thresh = delta - rep.dev_bound;
  if (!(thresh > 0.0))
    throw ValidationError("cofb_decomposition_scan: delta - dev_bound = " + format_real(thresh) +
                          " must be > 0; raise n or delta");

  const std::size_t n_cls = static_cast<std::size_t>(2 * n);
  const std::size_t nn = static_cast<std::size_t>(N);
  std::vector<std::int64_t> direct_cnt(nn, 0), chain_cnt(nn * n_cls, 0);
  std::vector<double> corr_acc(n_cls * 5, 0.0);  // per class: a, b, ab, a2, b2
  double dev_seen = 0.0;
  std::mutex merge;

  run_blocks(trials, threads, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
    std::vector<std::int64_t> l_direct(nn, 0), l_chain(nn * n_cls, 0);
    std::vector<double> l_corr(n_cls * 5, 0.0);
    double l_dev = 0.0;
    std::vector<double> cls_sum(n_cls), f_at(nn + 1), e_at(nn + 1);
    std::vector<std::int64_t> cls_cnt(n_cls);
    const std::int64_t need = N + static_cast<std::int64_t>(2 * n);
    std::vector<double> e_ext(static_cast<std::size_t>(need) + 1, 0.0);
    for (std::int64_t t = lo; t < hi; ++t) {
      PointHandle q = sample_point(sys, static_cast<std::uint64_t>(t));
      for (std::int64_t i = 1; i <= need; ++i) {
        q = advance(sys, q, 1);
        const double ev = eval(sys, E, q);
        e_ext[static_cast<std::size_t>(i)] = ev;
        if (i <= N) {
          const double fv = eval(sys, f, q);
          f_at[static_cast<std::size_t>(i)] = fv;
          e_at[static_cast<std::size_t>(i)] = ev;
          l_dev = std::max(l_dev, std::fabs(ev - fv));
        }
      }
      // strided pairs: E at times k and k+2n, k = 1..2n
      for (std::size_t k = 1; k <= n_cls; ++k) {
        const double a = e_ext[k], b = e_ext[k + n_cls];
        double* c = &l_corr[(k - 1) * 5];
        c[0] += a;
        c[1] += b;
        c[2] += a * b;
        c[3] += a * a;
        c[4] += b * b;
      }
      std::fill(cls_sum.begin(), cls_sum.end(), 0.0);
      std::fill(cls_cnt.begin(), cls_cnt.end(), 0);
      double f_sum = 0.0;
      for (std::int64_t m = 1; m <= N; ++m) {
        f_sum += f_at[static_cast<std::size_t>(m)];
        const std::size_t cls = static_cast<std::size_t>(m % (2 * n));
        cls_sum[cls] += e_at[static_cast<std::size_t>(m)];
        ++cls_cnt[cls];
        if (std::fabs(f_sum / static_cast<double>(m)) >= delta)
          ++l_direct[static_cast<std::size_t>(m - 1)];
        for (std::size_t k = 0; k < n_cls; ++k)
          if (cls_cnt[k] > 0 &&
              std::fabs(cls_sum[k] / static_cast<double>(cls_cnt[k])) >= thresh)
            ++l_chain[static_cast<std::size_t>(m - 1) * n_cls + k];
      }
    }
    std::lock_guard<std::mutex> g(merge);
    for (std::size_t i = 0; i < nn; ++i) direct_cnt[i] += l_direct[i];
    for (std::size_t i = 0; i < nn * n_cls; ++i) chain_cnt[i] += l_chain[i];
    for (std::size_t i = 0; i < l_corr.size(); ++i) corr_acc[i] += l_corr[i];
    dev_seen = std::max(dev_seen, l_dev);
  });

  rep.dev_seen = dev_seen;
  const double T = static_cast<double>(trials);
  for (std::size_t k = 0; k < n_cls; ++k) {
    const double* c = &corr_acc[k * 5];
    const double ma = c[0] / T, mb = c[1] / T;
    const double cov = c[2] / T - ma * mb;
    const double va = c[3] / T - ma * ma;
    const double vb = c[4] / T - mb * mb;
    if (va > 0.0 && vb > 0.0)
      rep.max_strided_corr =
          std::max(rep.max_strided_corr, std::fabs(cov / std::sqrt(va * vb)));
  }

  rep.chain_dominates = true;
  KahanSum d_acc, c_acc;
  for (std::size_t m = 0; m < nn; ++m) {
    rep.lengths.push_back(static_cast<std::int64_t>(m + 1));
    const double pd = static_cast<double>(direct_cnt[m]) / T;
    const double sd = std::sqrt(pd * (1.0 - pd) / T);
    double pc = 0.0, sc = 0.0;
    for (std::size_t k = 0; k < n_cls; ++k) {
      const double pk = static_cast<double>(chain_cnt[m * n_cls + k]) / T;
      pc += pk;
      sc += std::sqrt(pk * (1.0 - pk) / T);
    }
    rep.direct.push_back(pd);
    rep.direct_se.push_back(sd);
    rep.chain.push_back(pc);
    rep.chain_se.push_back(sc);
    if (pd > pc + 4.0 * (sd + sc)) rep.chain_dominates = false;
    d_acc.add(pd);
    c_acc.add(pc);
  }
  rep.direct_final = d_acc.value();
  rep.chain_final = c_acc.value();
  return rep;
}

}  // namespace ergolab
