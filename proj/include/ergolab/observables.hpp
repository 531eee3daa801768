#pragma once
// Observables on system points.
//
// Step observables live on cyclic systems (one value per index). Cylinder
// observables live on shift systems and read the coordinate window
// -radius..radius. Encoded observables apply a real function F on [0,1] to
// the two-sided digit encoding
//
//   e(x) = (2/3) * sum_{|k| <= depth} (x_k / (s-1)) * 2^(-|k|-1)
//
// which maps shift space into [0,1] so that points agreeing on coordinates
// |k| <= m satisfy |e(x) - e(y)| <= 2^-m; F Lipschitz-L then moves encoded
// values by at most L * 2^-m. Pareto transfers are heavy-tail generators
// with exact tail P(|g| > t) = (scale/t)^exponent for t >= scale.

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "ergolab/errors.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/util.hpp"

namespace ergolab {

struct StepObservable {
  std::vector<double> values;
};

struct ConstantObservable {
  double value = 0.0;
};

struct CylinderObservable {
  int radius = 0;
  std::vector<double> table;  // size alphabet^(2*radius+1), lowest coordinate is the most significant digit
};

struct PolyFunction {
  std::vector<double> coeffs;  // F(u) = sum coeffs[j] * u^j
  double operator()(double u) const {
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * u + coeffs[j];
    return acc;
  }
  double lipschitz() const {
    double l = 0.0;
    for (std::size_t j = 1; j < coeffs.size(); ++j)
      l += static_cast<double>(j) * std::fabs(coeffs[j]);
    return l;
  }
};

struct PwlFunction {
  std::vector<double> knots;  // values at u = i/(knots-1), linearly interpolated
  double operator()(double u) const {
    const std::size_t k = knots.size();
    if (k == 1) return knots[0];
    double t = u * static_cast<double>(k - 1);
    if (t <= 0) return knots[0];
    if (t >= static_cast<double>(k - 1)) return knots[k - 1];
    const auto i = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(i);
    return knots[i] + frac * (knots[i + 1] - knots[i]);
  }
  double lipschitz() const {
    const std::size_t k = knots.size();
    if (k < 2) return 0.0;
    double l = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i)
      l = std::max(l, std::fabs(knots[i + 1] - knots[i]) * static_cast<double>(k - 1));
    return l;
  }
};

using RealFunction = std::variant<PolyFunction, PwlFunction>;

inline double eval_real(const RealFunction& fn, double u) {
  return std::visit([&](const auto& f) { return f(u); }, fn);
}

inline double lipschitz_bound(const RealFunction& fn) {
  return std::visit([](const auto& f) { return f.lipschitz(); }, fn);
}

struct EncodedObservable {
  RealFunction fn;
  double lipschitz = 0.0;  // descriptor; refresh() derives it from fn
  int depth = 53;          // coordinates |k| <= depth enter the encoding

  void refresh() { lipschitz = lipschitz_bound(fn); }
};

struct ParetoTransfer {
  double exponent = 2.0;
  double scale = 1.0;
};

using TransferSpec = std::variant<StepObservable, CylinderObservable, ParetoTransfer>;

struct CoboundaryObservable {
  TransferSpec transfer;  // f = g - g compose T, evaluated lazily
};

using Observable = std::variant<StepObservable, ConstantObservable,
                                CylinderObservable, EncodedObservable,
                                ParetoTransfer, CoboundaryObservable>;

namespace detail {

inline const CyclicSystem& want_cyclic(const System& sys, const char* what) {
  if (kind_of(sys) != SystemKind::cyclic)
    throw IncompatibleError(std::string(what) + " requires a cyclic system");
  return std::get<CyclicSystem>(sys);
}

inline const ShiftSystem& want_shift(const System& sys, const char* what) {
  if (kind_of(sys) != SystemKind::shift)
    throw IncompatibleError(std::string(what) + " requires a shift system");
  return std::get<ShiftSystem>(sys);
}

// word index of the coordinate window center-radius..center+radius
inline std::size_t cylinder_word(const ShiftSystem& sh, const PointHandle& p,
                                 int radius) {
  std::size_t w = 0;
  for (int k = -radius; k <= radius; ++k)
    w = w * static_cast<std::size_t>(sh.alphabet) +
        static_cast<std::size_t>(sh.symbol(p.id, p.offset + k));
  return w;
}

inline double encode_two_sided(const ShiftSystem& sh, const PointHandle& p,
                               int depth) {
  const double dmax = sh.alphabet - 1;
  double acc = sh.symbol(p.id, p.offset) / dmax * 0.5;
  double w = 0.25;
  for (int k = 1; k <= depth && w > 0.0; ++k, w *= 0.5) {
    acc += (sh.symbol(p.id, p.offset + k) + sh.symbol(p.id, p.offset - k)) /
           dmax * w;
  }
  return acc * (2.0 / 3.0);
}

// forward base-s expansion, used as the unit coordinate of a shift point
inline double unit_coordinate(const ShiftSystem& sh, const PointHandle& p) {
  const double inv = 1.0 / sh.alphabet;
  double acc = 0.0;
  double w = inv;
  for (int k = 0; k < 64 && w >= 0x1.0p-53; ++k, w *= inv)
    acc += sh.symbol(p.id, p.offset + k) * w;
  return acc + 0.5 * w;  // half-cell shift keeps the coordinate in (0,1)
}

inline double pareto_value(const ParetoTransfer& g, double u) {
  return g.scale * std::pow(u, -1.0 / g.exponent);
}

inline double unit_of_point(const System& sys, const PointHandle& p,
                            const char* what) {
  switch (p.kind) {
    case SystemKind::cyclic: {
      const auto& c = std::get<CyclicSystem>(sys);
      return (static_cast<double>(p.index) + 0.5) / static_cast<double>(c.size);
    }
    case SystemKind::shift:
      return unit_coordinate(std::get<ShiftSystem>(sys), p);
    default: {
      (void)what;
      // almost surely positive; clamp the measure-zero endpoint
      return std::max(p.x, 0x1.0p-53);
    }
  }
}

}  // namespace detail

inline void validate_pareto(const ParetoTransfer& g) {
  if (!(g.exponent > 0)) throw ValidationError("pareto exponent must be > 0");
  if (!(g.scale > 0)) throw ValidationError("pareto scale must be > 0");
}

inline double eval_transfer(const System& sys, const TransferSpec& g,
                            const PointHandle& p);

// f(T^0 p); use eval_at for other powers
inline double eval(const System& sys, const Observable& f, const PointHandle& p) {
  return std::visit(
      [&](const auto& o) -> double {
        using O = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<O, StepObservable>) {
          const auto& c = detail::want_cyclic(sys, "step observable");
          if (static_cast<std::int64_t>(o.values.size()) != c.size)
            throw ValidationError("step observable length must equal the cycle size");
          return o.values[static_cast<std::size_t>(p.index)];
        } else if constexpr (std::is_same_v<O, ConstantObservable>) {
          return o.value;
        } else if constexpr (std::is_same_v<O, CylinderObservable>) {
          const auto& sh = detail::want_shift(sys, "cylinder observable");
          std::size_t want = 1;
          for (int k = 0; k < 2 * o.radius + 1; ++k)
            want *= static_cast<std::size_t>(sh.alphabet);
          if (o.table.size() != want)
            throw ValidationError("cylinder table size does not match alphabet and radius");
          return o.table[detail::cylinder_word(sh, p, o.radius)];
        } else if constexpr (std::is_same_v<O, EncodedObservable>) {
          if (p.kind == SystemKind::shift)
            return eval_real(o.fn, detail::encode_two_sided(
                                       std::get<ShiftSystem>(sys), p, o.depth));
          if (p.kind == SystemKind::rotation) return eval_real(o.fn, p.x);
          const auto& c = std::get<CyclicSystem>(sys);
          return eval_real(o.fn, (static_cast<double>(p.index) + 0.5) /
                                     static_cast<double>(c.size));
        } else if constexpr (std::is_same_v<O, ParetoTransfer>) {
          validate_pareto(o);
          return detail::pareto_value(o, detail::unit_of_point(sys, p, "pareto"));
        } else {
          return eval_transfer(sys, o.transfer, p) -
                 eval_transfer(sys, o.transfer, advance(sys, p, 1));
        }
      },
      f);
}

inline double eval_transfer(const System& sys, const TransferSpec& g,
                            const PointHandle& p) {
  return std::visit(
      [&](const auto& o) -> double {
        Observable as_obs = o;
        return eval(sys, as_obs, p);
      },
      g);
}

inline double eval_at(const System& sys, const Observable& f,
                      const PointHandle& x, std::int64_t power) {
  return eval(sys, f, advance(sys, x, power));
}

// [f(T^i x) : i = lo..hi]
inline std::vector<double> orbit_values(const System& sys, const Observable& f,
                                        const PointHandle& x, std::int64_t lo,
                                        std::int64_t hi) {
  if (lo > hi) throw ValidationError("orbit range must satisfy lo <= hi");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(hi - lo + 1));
  PointHandle p = advance(sys, x, lo);
  for (std::int64_t i = lo;; ++i) {
    out.push_back(eval(sys, f, p));
    if (i == hi) break;
    p = advance(sys, p, 1);
  }
  return out;
}

struct MomentResult {
  double value = 0.0;
  double stderr_ = 0.0;
  bool exact = false;
};

// (1/N) sum |f|^q on cyclic systems (exact), Monte Carlo elsewhere
inline MomentResult moment(const System& sys, const Observable& f, double q,
                           std::int64_t trials) {
  if (!(q > 0)) throw ValidationError("moment exponent must be > 0");
  MomentResult r;
  if (kind_of(sys) == SystemKind::cyclic) {
    const auto& c = std::get<CyclicSystem>(sys);
    KahanSum acc;
    for (std::int64_t i = 0; i < c.size; ++i)
      acc.add(std::pow(std::fabs(eval(sys, f, cyclic_point(c, i))), q));
    r.value = acc.value() / static_cast<double>(c.size);
    r.exact = true;
    return r;
  }
  if (trials < 1) throw ValidationError("moment needs trials >= 1 off-cycle");
  KahanSum m1, m2;
  for (std::int64_t t = 0; t < trials; ++t) {
    const double v =
        std::pow(std::fabs(eval(sys, f, sample_point(sys, static_cast<std::uint64_t>(t)))), q);
    m1.add(v);
    m2.add(v * v);
  }
  const double n = static_cast<double>(trials);
  r.value = m1.value() / n;
  const double var = std::max(0.0, m2.value() / n - r.value * r.value);
  r.stderr_ = std::sqrt(var / n);
  return r;
}

// exact mean of a cylinder observable under the product measure
inline double cylinder_mean(const ShiftSystem& sh, const CylinderObservable& f) {
  const int width = 2 * f.radius + 1;
  std::vector<int> digits(static_cast<std::size_t>(width), 0);
  KahanSum acc;
  for (std::size_t w = 0; w < f.table.size(); ++w) {
    std::size_t rest = w;
    double prob = 1.0;
    for (int k = width - 1; k >= 0; --k) {
      const auto d = static_cast<int>(rest % static_cast<std::size_t>(sh.alphabet));
      rest /= static_cast<std::size_t>(sh.alphabet);
      prob *= sh.probs[static_cast<std::size_t>(d)];
    }
    acc.add(prob * f.table[w]);
  }
  return acc.value();
}

// table of cylinder-wise averages of f over the partition fixing coordinates
// 1-n .. n-1; exact enumeration, guarded by `budget` table-times-free work
inline CylinderObservable conditional_expectation(const ShiftSystem& sh,
                                                  const Observable& f, int n,
                                                  std::size_t budget = std::size_t{1} << 24) {
  if (n < 1) throw ValidationError("conditional expectation needs n >= 1");
  const int radius = n - 1;
  const int width = 2 * radius + 1;
  const auto s = static_cast<std::size_t>(sh.alphabet);
  std::size_t words = 1;
  for (int k = 0; k < width; ++k) {
    if (words > budget / s)
      throw BudgetError("conditional expectation table exceeds the enumeration budget");
    words *= s;
  }

  CylinderObservable out;
  out.radius = radius;
  out.table.assign(words, 0.0);

  auto digits_of = [&](std::size_t w, int len, std::vector<int>& d) {
    d.assign(static_cast<std::size_t>(len), 0);
    for (int k = len - 1; k >= 0; --k) {
      d[static_cast<std::size_t>(k)] = static_cast<int>(w % s);
      w /= s;
    }
  };

  if (const auto* cons = std::get_if<ConstantObservable>(&f)) {
    for (auto& v : out.table) v = cons->value;
    return out;
  }

  if (const auto* cyl = std::get_if<CylinderObservable>(&f)) {
    const int r = cyl->radius;
    if (r <= radius) {
      // P_n-measurable already: restrict the window
      std::vector<int> d;
      for (std::size_t w = 0; w < words; ++w) {
        digits_of(w, width, d);
        std::size_t sub = 0;
        for (int k = radius - r; k <= radius + r; ++k)
          sub = sub * s + static_cast<std::size_t>(d[static_cast<std::size_t>(k)]);
        out.table[w] = cyl->table[sub];
      }
      return out;
    }
    // marginalize the coordinates outside the window
    const int extra = r - radius;  // free digits on each side
    std::size_t freewords = 1;
    for (int k = 0; k < 2 * extra; ++k) {
      if (freewords > budget / s / std::max<std::size_t>(words, 1))
        throw BudgetError("conditional expectation marginalization exceeds the budget");
      freewords *= s;
    }
    std::vector<int> d, e;
    for (std::size_t w = 0; w < words; ++w) {
      digits_of(w, width, d);
      KahanSum acc;
      for (std::size_t fw = 0; fw < freewords; ++fw) {
        digits_of(fw, 2 * extra, e);
        double prob = 1.0;
        std::size_t full = 0;
        for (int k = 0; k < 2 * r + 1; ++k) {
          int dig;
          if (k < extra) {
            dig = e[static_cast<std::size_t>(k)];
            prob *= sh.probs[static_cast<std::size_t>(dig)];
          } else if (k < extra + width) {
            dig = d[static_cast<std::size_t>(k - extra)];
          } else {
            dig = e[static_cast<std::size_t>(k - width)];
            prob *= sh.probs[static_cast<std::size_t>(dig)];
          }
          full = full * s + static_cast<std::size_t>(dig);
        }
        acc.add(prob * cyl->table[full]);
      }
      out.table[w] = acc.value();
    }
    return out;
  }

  if (const auto* enc = std::get_if<EncodedObservable>(&f)) {
    const int depth = enc->depth;
    const int lo = std::min(radius, depth);  // fixed coordinates |k| <= lo
    const int extra = depth > radius ? depth - radius : 0;
    std::size_t freewords = 1;
    for (int k = 0; k < 2 * extra; ++k) {
      if (freewords > budget / std::max<std::size_t>(words, 1))
        throw BudgetError("conditional expectation of the encoded observable exceeds the budget");
      freewords *= s;
    }
    const double dmax = sh.alphabet - 1;
    std::vector<int> d, e;
    std::vector<double> weight(static_cast<std::size_t>(depth + 1), 0.0);
    for (int k = 0; k <= depth; ++k) weight[static_cast<std::size_t>(k)] = std::ldexp(1.0, -k - 1);
    for (std::size_t w = 0; w < words; ++w) {
      digits_of(w, width, d);
      double base = 0.0;
      for (int k = -lo; k <= lo; ++k)
        base += d[static_cast<std::size_t>(k + radius)] / dmax *
                weight[static_cast<std::size_t>(std::abs(k))];
      KahanSum acc;
      for (std::size_t fw = 0; fw < freewords; ++fw) {
        digits_of(fw, 2 * extra, e);
        double prob = 1.0;
        double u = base;
        for (int j = 0; j < extra; ++j) {
          const int kpos = radius + 1 + j;
          const int dpos = e[static_cast<std::size_t>(j)];
          const int dneg = e[static_cast<std::size_t>(extra + j)];
          prob *= sh.probs[static_cast<std::size_t>(dpos)] *
                  sh.probs[static_cast<std::size_t>(dneg)];
          u += (dpos + dneg) / dmax * weight[static_cast<std::size_t>(kpos)];
        }
        acc.add(prob * eval_real(enc->fn, u * (2.0 / 3.0)));
      }
      out.table[w] = acc.value();
    }
    return out;
  }

  throw IncompatibleError(
      "conditional expectation expects a cylinder, encoded, or constant observable");
}

struct FpGrowthSpec {
  enum class Kind { geometric, exponential, explicit_list } kind = Kind::geometric;
  double scale = 1.5;
  double base = 2.0;
  std::vector<double> values;
};

struct FpMassSpec {
  // raw mass of block n, before scaling: classic n/a_n^2, or n/a_n^q
  enum class Kind { classic, inverse_height_power, explicit_list } kind = Kind::classic;
  double power = 2.0;
  std::vector<double> values;
};

struct FpParams {
  FpGrowthSpec growth;
  FpMassSpec mass;
  double p = 2.0;
  double target = 0.5;
  int n_max = 0;
};

struct FpSpec {
  std::vector<double> heights;          // quantized peak values a_n
  std::vector<double> masses;           // exact block masses cells/N
  std::vector<std::int64_t> cells;      // cells per peak block
  std::vector<std::int64_t> block_start;
  std::int64_t b_start = 0;
  std::int64_t b_cells = 0;
  double mass_b = 0.0;                  // = sum heights*masses, exact on the grid
  double p = 2.0;
  int n_max = 0;
  double scale_c = 0.0;                 // ideal mass scaling before quantization
  double max_height_err = 0.0;
  double mass_err = 0.0;                // target - mass_b

  void check() const {
    double balance = 0.0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
      if (!(heights[i] > 2.0))
        throw ValidationError("peak heights must stay above 2 after quantization");
      balance += heights[i] * masses[i];
    }
    if (balance > 0.5 + 1e-12)
      throw ValidationError("total peak mass exceeds 1/2");
    if (std::fabs(balance - mass_b) > 1e-9)
      throw ValidationError("peak mass and plateau mass are out of balance");
  }
};

// tall rare peaks a_n on blocks A_n, a -1 plateau B balancing them exactly,
// zeros elsewhere; block masses are quantized to multiples of 1/N
// raw (unquantized) peak heights a_1 .. a_n_max
inline std::vector<double> fp_raw_heights(const FpParams& par) {
  std::vector<double> a(static_cast<std::size_t>(std::max(par.n_max, 0)), 0.0);
  for (int n = 1; n <= par.n_max; ++n) {
    double v;
    switch (par.growth.kind) {
      case FpGrowthSpec::Kind::geometric:
        v = par.growth.scale * std::pow(par.growth.base, n);
        break;
      case FpGrowthSpec::Kind::exponential:
        v = std::exp(static_cast<double>(n));
        break;
      default:
        if (par.growth.values.size() < static_cast<std::size_t>(par.n_max))
          throw ValidationError("explicit growth list shorter than n_max");
        v = par.growth.values[static_cast<std::size_t>(n - 1)];
    }
    if (!(v > 2.0)) throw ValidationError("peak heights must exceed 2");
    if (!std::isfinite(v)) throw OverflowError("peak height overflowed");
    a[static_cast<std::size_t>(n - 1)] = v;
  }
  return a;
}

inline std::pair<StepObservable, FpSpec> build_fp_function(const FpParams& par,
                                                           const CyclicSystem& sys) {
  if (!(par.target > 0) || par.target > 0.5)
    throw ValidationError("target mass must lie in (0, 1/2]");
  if (!(par.p > 1)) throw ValidationError("exponent p must be > 1");
  if (par.n_max < 0) throw ValidationError("n_max must be >= 0");

  const std::int64_t n_cycle = sys.size;
  StepObservable f;
  f.values.assign(static_cast<std::size_t>(n_cycle), 0.0);
  FpSpec spec;
  spec.p = par.p;
  spec.n_max = par.n_max;
  if (par.n_max == 0) return {std::move(f), std::move(spec)};

  const std::vector<double> a = fp_raw_heights(par);

  std::vector<double> raw(static_cast<std::size_t>(par.n_max), 0.0);
  for (int n = 1; n <= par.n_max; ++n) {
    double v;
    switch (par.mass.kind) {
      case FpMassSpec::Kind::classic:
        v = n / std::pow(a[static_cast<std::size_t>(n - 1)], 2.0);
        break;
      case FpMassSpec::Kind::inverse_height_power:
        v = n / std::pow(a[static_cast<std::size_t>(n - 1)], par.mass.power);
        break;
      default:
        if (par.mass.values.size() < static_cast<std::size_t>(par.n_max))
          throw ValidationError("explicit mass list shorter than n_max");
        v = par.mass.values[static_cast<std::size_t>(n - 1)];
    }
    if (!(v > 0)) throw ValidationError("block masses must be positive");
    raw[static_cast<std::size_t>(n - 1)] = v;
  }

  double denom = 0.0;
  for (int n = 0; n < par.n_max; ++n)
    denom += a[static_cast<std::size_t>(n)] * raw[static_cast<std::size_t>(n)];
  const double c = par.target / denom;
  spec.scale_c = c;

  spec.cells.assign(static_cast<std::size_t>(par.n_max), 0);
  spec.heights.assign(static_cast<std::size_t>(par.n_max), 0.0);
  spec.masses.assign(static_cast<std::size_t>(par.n_max), 0.0);
  std::vector<std::int64_t> peak_sum(static_cast<std::size_t>(par.n_max), 0);
  for (int n = 0; n < par.n_max; ++n) {
    const double scaled = c * raw[static_cast<std::size_t>(n)];
    const auto k = static_cast<std::int64_t>(std::llround(scaled * static_cast<double>(n_cycle)));
    if (k < 1)
      throw ResolutionError("cycle too small: scaled mass of block " +
                            std::to_string(n + 1) + " falls below 1/N");
    spec.cells[static_cast<std::size_t>(n)] = k;
    auto total = static_cast<std::int64_t>(std::llround(a[static_cast<std::size_t>(n)] * static_cast<double>(k)));
    if (total <= 2 * k) total = 2 * k + 1;  // keep the quantized height above 2
    peak_sum[static_cast<std::size_t>(n)] = total;
  }

  std::int64_t mass_cells = 0;
  for (auto v : peak_sum) mass_cells += v;
  const auto cap = static_cast<std::int64_t>(std::floor(static_cast<double>(n_cycle) * par.target));
  if (mass_cells > cap) {
    // trim the tallest block so the plateau stays within the target mass
    auto& last = peak_sum[static_cast<std::size_t>(par.n_max - 1)];
    const std::int64_t trim = mass_cells - cap;
    if (last - trim <= 2 * spec.cells[static_cast<std::size_t>(par.n_max - 1)])
      throw ResolutionError("cycle too small to host the requested peak masses");
    last -= trim;
    mass_cells = cap;
  }

  std::int64_t used = 0;
  for (auto k : spec.cells) used += k;
  if (used + mass_cells > n_cycle)
    throw ResolutionError("peak blocks and plateau do not fit on the cycle");

  std::int64_t cursor = 0;
  double max_err = 0.0;
  for (int n = 0; n < par.n_max; ++n) {
    const std::int64_t k = spec.cells[static_cast<std::size_t>(n)];
    const double height = static_cast<double>(peak_sum[static_cast<std::size_t>(n)]) /
                          static_cast<double>(k);
    spec.heights[static_cast<std::size_t>(n)] = height;
    spec.masses[static_cast<std::size_t>(n)] =
        static_cast<double>(k) / static_cast<double>(n_cycle);
    spec.block_start.push_back(cursor);
    max_err = std::max(max_err, std::fabs(height - a[static_cast<std::size_t>(n)]));
    for (std::int64_t j = 0; j < k; ++j)
      f.values[static_cast<std::size_t>(cursor + j)] = height;
    cursor += k;
  }
  spec.b_start = cursor;
  spec.b_cells = mass_cells;
  for (std::int64_t j = 0; j < mass_cells; ++j)
    f.values[static_cast<std::size_t>(cursor + j)] = -1.0;
  spec.mass_b = static_cast<double>(mass_cells) / static_cast<double>(n_cycle);
  spec.max_height_err = max_err;
  spec.mass_err = par.target - spec.mass_b;
  spec.check();
  return {std::move(f), std::move(spec)};
}

// f = g - g compose T; materialized on cyclic systems, widened for cylinder
// transfers, lazy for heavy-tail transfers
inline Observable coboundary_from_transfer(const System& sys, const TransferSpec& g) {
  if (kind_of(sys) == SystemKind::cyclic) {
    const auto& c = std::get<CyclicSystem>(sys);
    if (std::holds_alternative<CylinderObservable>(g))
      throw IncompatibleError("cylinder transfer does not fit a cyclic system");
    StepObservable f;
    f.values.assign(static_cast<std::size_t>(c.size), 0.0);
    for (std::int64_t i = 0; i < c.size; ++i) {
      const PointHandle p = cyclic_point(c, i);
      f.values[static_cast<std::size_t>(i)] =
          eval_transfer(sys, g, p) - eval_transfer(sys, g, advance(sys, p, 1));
    }
    return f;
  }
  if (kind_of(sys) == SystemKind::shift) {
    if (const auto* cyl = std::get_if<CylinderObservable>(&g)) {
      const auto& sh = std::get<ShiftSystem>(sys);
      const int r = cyl->radius;
      CylinderObservable f;
      f.radius = r + 1;
      const auto s = static_cast<std::size_t>(sh.alphabet);
      std::size_t words = 1;
      for (int k = 0; k < 2 * (r + 1) + 1; ++k) words *= s;
      f.table.assign(words, 0.0);
      std::vector<int> d(static_cast<std::size_t>(2 * r + 3), 0);
      for (std::size_t w = 0; w < words; ++w) {
        // digits d[0..2r+2] cover coordinates -(r+1)..(r+1); g reads the
        // window -r..r of x (d[1..2r+1]) and of Tx (d[2..2r+2])
        std::size_t rest = w;
        for (int k = 2 * r + 2; k >= 0; --k) {
          d[static_cast<std::size_t>(k)] = static_cast<int>(rest % s);
          rest /= s;
        }
        std::size_t at = 0, shifted = 0;
        for (int k = 1; k <= 2 * r + 1; ++k) {
          at = at * s + static_cast<std::size_t>(d[static_cast<std::size_t>(k)]);
          shifted = shifted * s + static_cast<std::size_t>(d[static_cast<std::size_t>(k + 1)]);
        }
        f.table[w] = cyl->table[at] - cyl->table[shifted];
      }
      return f;
    }
    if (std::holds_alternative<StepObservable>(g))
      throw IncompatibleError("step transfer does not fit a shift system");
    return CoboundaryObservable{g};
  }
  // rotation
  if (std::holds_alternative<ParetoTransfer>(g)) return CoboundaryObservable{g};
  throw IncompatibleError("transfer kind does not fit a rotation system");
}

}  // namespace ergolab
