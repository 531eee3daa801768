#pragma once
// Window schemes and moving-average computations.
//
// The moving average is pinned to the convention
//
//   M(v, L) f (x) = (1/L) * sum_{i = v+1 .. v+L} f(T^i x)
//
// everywhere in this library (window starts one step after the offset).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ergolab/errors.hpp"
#include "ergolab/observables.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/util.hpp"

namespace ergolab {

struct WindowPair {
  std::int64_t v = 0;
  std::int64_t L = 1;
};

enum class SchemeFamily {
  quadratic,      // (n^2, n)
  lacunary,       // (4^n, 2^n)
  hyperlacunary,  // (2^(2^(n+1)), 2^(2^n))
  triangular,     // (n(n+1)/2, n)
  power,          // (0, floor(n^D)), D >= 1
  exponential,    // (0, 2^n)
  expsqrt,        // (0, floor(exp(sqrt(n))))
  explicit_list
};

struct SchemeSpec {
  SchemeFamily family = SchemeFamily::quadratic;
  double param = 1.0;  // D for the power family
  std::vector<WindowPair> pairs;  // explicit_list payload

  static SchemeSpec explicit_pairs(std::vector<WindowPair> ps) {
    SchemeSpec s;
    s.family = SchemeFamily::explicit_list;
    s.pairs = std::move(ps);
    return s;
  }
};

inline const char* scheme_name(SchemeFamily f) {
  switch (f) {
    case SchemeFamily::quadratic: return "quadratic";
    case SchemeFamily::lacunary: return "lacunary";
    case SchemeFamily::hyperlacunary: return "hyperlacunary";
    case SchemeFamily::triangular: return "triangular";
    case SchemeFamily::power: return "power";
    case SchemeFamily::exponential: return "exponential";
    case SchemeFamily::expsqrt: return "expsqrt";
    default: return "explicit";
  }
}

// n-th pair of the family, 1-based
inline WindowPair scheme_pair(const SchemeSpec& spec, int n) {
  if (n < 1) throw ValidationError("scheme index must be >= 1");
  constexpr std::int64_t lim = std::int64_t{1} << 62;
  switch (spec.family) {
    case SchemeFamily::quadratic: {
      if (n > 1500000000) throw OverflowError("quadratic scheme index too large");
      return {static_cast<std::int64_t>(n) * n, n};
    }
    case SchemeFamily::lacunary: {
      if (n > 30) throw OverflowError("lacunary scheme overflows 64-bit offsets past n = 30");
      return {std::int64_t{1} << (2 * n), std::int64_t{1} << n};
    }
    case SchemeFamily::hyperlacunary: {
      if (n > 4)
        throw OverflowError("hyperlacunary offsets overflow 64-bit integers past n = 4");
      return {std::int64_t{1} << (std::int64_t{1} << (n + 1)),
              std::int64_t{1} << (std::int64_t{1} << n)};
    }
    case SchemeFamily::triangular:
      return {static_cast<std::int64_t>(n) * (n + 1) / 2, n};
    case SchemeFamily::power: {
      if (!(spec.param >= 1.0))
        throw ValidationError("power scheme needs D >= 1 for strictly increasing lengths");
      const double raw = std::pow(static_cast<double>(n), spec.param);
      if (!(raw < static_cast<double>(lim)))
        throw OverflowError("power scheme length overflows 64 bits");
      return {0, static_cast<std::int64_t>(raw)};
    }
    case SchemeFamily::exponential: {
      if (n > 61) throw OverflowError("exponential scheme overflows 64 bits past n = 61");
      return {0, std::int64_t{1} << n};
    }
    case SchemeFamily::expsqrt: {
      const double raw = std::exp(std::sqrt(static_cast<double>(n)));
      if (!(raw < static_cast<double>(lim)))
        throw OverflowError("expsqrt scheme length overflows 64 bits");
      return {0, static_cast<std::int64_t>(raw)};
    }
    default: {
      if (static_cast<std::size_t>(n) > spec.pairs.size())
        throw ValidationError("explicit scheme has no pair at index " + std::to_string(n));
      return spec.pairs[static_cast<std::size_t>(n - 1)];
    }
  }
}

// first n_max pairs; enforces the strict growth of lengths
inline std::vector<WindowPair> scheme_prefix(const SchemeSpec& spec, int n_max) {
  if (n_max < 1) throw ValidationError("scheme prefix needs n_max >= 1");
  std::vector<WindowPair> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    WindowPair pr = scheme_pair(spec, n);
    if (pr.L < 1) throw ValidationError("window lengths must be >= 1");
    if (!out.empty() && pr.L <= out.back().L)
      throw ValidationError("window lengths must be strictly increasing");
    out.push_back(pr);
  }
  return out;
}

inline std::vector<std::int64_t> scheme_lengths(const SchemeSpec& spec, int n_max) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(std::max(n_max, 0)));
  for (const WindowPair& pr : scheme_prefix(spec, n_max)) out.push_back(pr.L);
  return out;
}

struct RealPair {
  double v = 0;
  double L = 1;
};

// real-valued pair for cone geometry; reaches hyperlacunary n = 5 exactly
inline RealPair scheme_pair_real(const SchemeSpec& spec, int n) {
  if (spec.family == SchemeFamily::hyperlacunary) {
    if (n < 1) throw ValidationError("scheme index must be >= 1");
    if (n > 5)
      throw OverflowError(
          "hyperlacunary cross-sections are supported up to n = 5; lower n_max");
    return {std::exp2(std::exp2(static_cast<double>(n + 1))),
            std::exp2(std::exp2(static_cast<double>(n)))};
  }
  const WindowPair pr = scheme_pair(spec, n);
  return {static_cast<double>(pr.v), static_cast<double>(pr.L)};
}

inline double moving_average(const System& sys, const Observable& f,
                             const PointHandle& x, std::int64_t v, std::int64_t L) {
  if (L < 1) throw ValidationError("window length must be >= 1");
  KahanSum acc;
  PointHandle p = advance(sys, x, v + 1);
  for (std::int64_t i = 0; i < L; ++i) {
    acc.add(eval(sys, f, p));
    p = advance(sys, p, 1);
  }
  return acc.value() / static_cast<double>(L);
}

inline double telescoped_average(const System& sys, const TransferSpec& g,
                                 const PointHandle& x, std::int64_t v, std::int64_t L) {
  if (L < 1) throw ValidationError("window length must be >= 1");
  return (eval_transfer(sys, g, advance(sys, x, v + 1)) -
          eval_transfer(sys, g, advance(sys, x, v + L + 1))) /
         static_cast<double>(L);
}

inline std::vector<double> average_series(const System& sys, const Observable& f,
                                          const PointHandle& x,
                                          const std::vector<WindowPair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) out.push_back(moving_average(sys, f, x, pr.v, pr.L));
  return out;
}

// C_1..C_N with C_N = (1/N) sum_{n<=N} S_n and S_n = sum_{k=1..n} f(T^k x)
inline std::vector<double> cesaro_diagnostic(const System& sys, const Observable& f,
                                             const PointHandle& x, std::int64_t N) {
  if (N < 1) throw ValidationError("cesaro diagnostic needs N >= 1");
  const std::vector<double> w = orbit_values(sys, f, x, 1, N);
  std::vector<double> out(static_cast<std::size_t>(N), 0.0);
  KahanSum s, total;
  for (std::int64_t n = 1; n <= N; ++n) {
    s.add(w[static_cast<std::size_t>(n - 1)]);
    total.add(s.value());
    out[static_cast<std::size_t>(n - 1)] = total.value() / static_cast<double>(n);
  }
  return out;
}

namespace detail {

// f at each cyclic index
inline std::vector<double> cyclic_values(const System& sys, const Observable& f) {
  const auto& c = want_cyclic(sys, "exact cyclic evaluation");
  std::vector<double> out(static_cast<std::size_t>(c.size), 0.0);
  for (std::int64_t i = 0; i < c.size; ++i)
    out[static_cast<std::size_t>(i)] = eval(sys, f, cyclic_point(c, i));
  return out;
}

// prefix sums of vals repeated along the orbit of index 0; window_sum gives
// sum of vals over orbit positions j+1 .. j+L for the point at orbit slot j
struct OrbitPrefix {
  std::vector<std::int64_t> order;   // orbit slot -> cyclic index
  std::vector<double> prefix;        // 2N+1 doubled prefix sums in orbit order
  double total = 0;
  std::int64_t n = 0;

  double window_sum(std::int64_t slot, std::int64_t lo, std::int64_t hi) const {
    // sum over orbit slots slot+lo .. slot+hi (inclusive), any width
    const std::int64_t width = hi - lo + 1;
    if (width <= 0) return 0.0;
    std::int64_t start = slot + lo;
    const std::int64_t whole = width / n;
    const std::int64_t rem = width % n;
    start = ((start % n) + n) % n;
    double sum = static_cast<double>(whole) * total;
    sum += prefix[static_cast<std::size_t>(start + rem)] -
           prefix[static_cast<std::size_t>(start)];
    return sum;
  }
};

inline OrbitPrefix orbit_prefix(const CyclicSystem& c, const std::vector<double>& vals) {
  OrbitPrefix op;
  op.n = c.size;
  op.order.resize(static_cast<std::size_t>(c.size));
  std::int64_t idx = 0;
  for (std::int64_t j = 0; j < c.size; ++j) {
    op.order[static_cast<std::size_t>(j)] = idx;
    idx += c.step;
    if (idx >= c.size) idx -= c.size;
  }
  op.prefix.assign(static_cast<std::size_t>(2 * c.size + 1), 0.0);
  KahanSum acc;
  for (std::int64_t j = 0; j < 2 * c.size; ++j) {
    acc.add(vals[static_cast<std::size_t>(op.order[static_cast<std::size_t>(j % c.size)])]);
    op.prefix[static_cast<std::size_t>(j + 1)] = acc.value();
  }
  op.total = op.prefix[static_cast<std::size_t>(c.size)];
  return op;
}

inline double norm_from_powers(const std::vector<double>& vals, double r,
                               std::int64_t n) {
  if (std::isinf(r)) {
    double m = 0;
    for (double v : vals) m = std::max(m, std::fabs(v));
    return m;
  }
  KahanSum acc;
  for (double v : vals) acc.add(std::pow(std::fabs(v), r));
  return std::pow(acc.value() / static_cast<double>(n), 1.0 / r);
}

}  // namespace detail

// exact L^r norm on the cycle; r may be infinity
inline double lp_norm(const System& sys, const Observable& f, double r) {
  if (!(r >= 1)) throw ValidationError("norm exponent must be >= 1 (or infinity)");
  const auto& c = detail::want_cyclic(sys, "exact norm");
  return detail::norm_from_powers(detail::cyclic_values(sys, f), r, c.size);
}

// exact L^1 norm of M(v, L) f over all cycle points
inline double cyclic_average_norm1(const System& sys, const Observable& f,
                                   std::int64_t v, std::int64_t L) {
  const auto& c = detail::want_cyclic(sys, "exact average norm");
  const auto op = detail::orbit_prefix(c, detail::cyclic_values(sys, f));
  KahanSum acc;
  for (std::int64_t j = 0; j < c.size; ++j)
    acc.add(std::fabs(op.window_sum(j, v + 1, v + L) / static_cast<double>(L)));
  return acc.value() / static_cast<double>(c.size);
}

struct RateCheck {
  double lhs = 0;
  double rhs = 0;
  bool holds = false;
};

// || M(0,n) f ||_r <= || M(0,n)(f - (H - H o T)) ||_r + 2 ||H||_r / n
inline RateCheck rate_over_check(const System& sys, const Observable& f,
                                 const Observable& H, double r, std::int64_t n) {
  if (n < 1) throw ValidationError("rate check needs n >= 1");
  const auto& c = detail::want_cyclic(sys, "rate check");
  const auto fv = detail::cyclic_values(sys, f);
  const auto hv = detail::cyclic_values(sys, H);

  std::vector<double> dv(fv.size());  // f - (H - H o T) per index
  for (std::int64_t i = 0; i < c.size; ++i) {
    const std::int64_t ti = static_cast<std::int64_t>(
        (static_cast<__int128>(i) + c.step) % c.size);
    dv[static_cast<std::size_t>(i)] = fv[static_cast<std::size_t>(i)] -
                                      hv[static_cast<std::size_t>(i)] +
                                      hv[static_cast<std::size_t>(ti)];
  }

  auto averaged = [&](const std::vector<double>& vals) {
    const auto op = detail::orbit_prefix(c, vals);
    std::vector<double> out(static_cast<std::size_t>(c.size), 0.0);
    for (std::int64_t j = 0; j < c.size; ++j)
      out[static_cast<std::size_t>(j)] = op.window_sum(j, 1, n) / static_cast<double>(n);
    return out;
  };

  RateCheck rc;
  rc.lhs = detail::norm_from_powers(averaged(fv), r, c.size);
  rc.rhs = detail::norm_from_powers(averaged(dv), r, c.size) +
           2.0 * detail::norm_from_powers(hv, r, c.size) / static_cast<double>(n);
  rc.holds = rc.lhs <= rc.rhs + 1e-10;
  return rc;
}

struct RateUnderResult {
  StepObservable H;
  double max_dev = 0;  // worst pointwise deviation of the defining identity
};

// H = (1/n) sum_{k=1..n} S_{k-1} f with S_0 = 0 and S_k = sum_{j=0..k-1} f o T^j.
// The averages inside this routine start at T^0, which is what makes
// f - A_n f = H - H o T an exact identity for every n >= 1.
inline RateUnderResult rate_under_transfer(const System& sys, const Observable& f,
                                           std::int64_t n) {
  if (n < 1) throw ValidationError("rate transfer needs n >= 1");
  const auto& c = detail::want_cyclic(sys, "rate transfer");
  const auto fv = detail::cyclic_values(sys, f);
  const auto op = detail::orbit_prefix(c, fv);

  // H(x) = (1/n) sum_{j=0..n-2} (n-1-j) f(T^j x)
  std::vector<double> hv(static_cast<std::size_t>(c.size), 0.0);
  for (std::int64_t j = 0; j < c.size; ++j) {
    KahanSum acc;
    for (std::int64_t k = 0; k + 1 < n; ++k)
      acc.add(static_cast<double>(n - 1 - k) *
              fv[static_cast<std::size_t>(op.order[static_cast<std::size_t>((j + k) % c.size)])]);
    hv[static_cast<std::size_t>(op.order[static_cast<std::size_t>(j)])] =
        acc.value() / static_cast<double>(n);
  }

  RateUnderResult out;
  out.H.values = hv;
  for (std::int64_t j = 0; j < c.size; ++j) {
    const auto i = op.order[static_cast<std::size_t>(j)];
    const auto ti = op.order[static_cast<std::size_t>((j + 1) % c.size)];
    const double anf = op.window_sum(j, 0, n - 1) / static_cast<double>(n);
    const double dev = std::fabs(fv[static_cast<std::size_t>(i)] - anf -
                                 hv[static_cast<std::size_t>(i)] +
                                 hv[static_cast<std::size_t>(ti)]);
    out.max_dev = std::max(out.max_dev, dev);
  }
  return out;
}

// sum_{n=1..N} ||f||_1/(n+1)  vs  3 sum_{n=1..N+1} ||M(0,n) f||_1
inline RateCheck harmonic_divergence_check(const System& sys, const Observable& f,
                                           std::int64_t N) {
  if (N < 1) throw ValidationError("harmonic check needs N >= 1");
  const auto& c = detail::want_cyclic(sys, "harmonic check");
  const auto fv = detail::cyclic_values(sys, f);
  const auto op = detail::orbit_prefix(c, fv);
  const double norm1 = detail::norm_from_powers(fv, 1.0, c.size);

  RateCheck rc;
  KahanSum lhs, rhs;
  for (std::int64_t n = 1; n <= N; ++n)
    lhs.add(norm1 / static_cast<double>(n + 1));
  for (std::int64_t n = 1; n <= N + 1; ++n) {
    KahanSum acc;
    for (std::int64_t j = 0; j < c.size; ++j)
      acc.add(std::fabs(op.window_sum(j, 1, n) / static_cast<double>(n)));
    rhs.add(acc.value() / static_cast<double>(c.size));
  }
  rc.lhs = lhs.value();
  rc.rhs = 3.0 * rhs.value();
  rc.holds = rc.lhs <= rc.rhs + 1e-10;
  return rc;
}

enum class SeriesKind { eq1, eq2, eq3 };

// partial sums of the chosen coboundary-defect series:
//   eq1: sum ||f - (g_n - g_n o T)||_1
//   eq2: sum ||g_n||_2^2 / n^2
//   eq3: sum ||f - (g_n - g_n o T)||_2^2
inline std::vector<double> series_conditions_check(const System& sys,
                                                   const Observable& f,
                                                   const std::vector<Observable>& gs,
                                                   SeriesKind which) {
  const auto& c = detail::want_cyclic(sys, "series check");
  const auto fv = detail::cyclic_values(sys, f);
  std::vector<double> out;
  out.reserve(gs.size());
  KahanSum acc;
  for (std::size_t m = 0; m < gs.size(); ++m) {
    const auto gv = detail::cyclic_values(sys, gs[m]);
    double term = 0;
    if (which == SeriesKind::eq2) {
      const double n2 = detail::norm_from_powers(gv, 2.0, c.size);
      const double nn = static_cast<double>(m + 1);
      term = n2 * n2 / (nn * nn);
    } else {
      std::vector<double> defect(fv.size());
      for (std::int64_t i = 0; i < c.size; ++i) {
        const std::int64_t ti = static_cast<std::int64_t>(
            (static_cast<__int128>(i) + c.step) % c.size);
        defect[static_cast<std::size_t>(i)] = fv[static_cast<std::size_t>(i)] -
                                              gv[static_cast<std::size_t>(i)] +
                                              gv[static_cast<std::size_t>(ti)];
      }
      if (which == SeriesKind::eq1) {
        term = detail::norm_from_powers(defect, 1.0, c.size);
      } else {
        const double n2 = detail::norm_from_powers(defect, 2.0, c.size);
        term = n2 * n2;
      }
    }
    acc.add(term);
    out.push_back(acc.value());
  }
  return out;
}

}  // namespace ergolab
