#pragma once
// Desk-scale measure-preserving systems.
//
//   cyclic   x -> x + step on Z/N, gcd(step, N) = 1, uniform measure
//   shift    product measure on alphabet^Z; a point is a lazily realized
//            two-sided symbol stream keyed by (seed, point id); the map
//            slides the window one coordinate
//   rotation x -> x + angle mod 1 on [0,1), Lebesgue measure
//
// Orbit powers may be negative on every system.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <variant>
#include <vector>

#include "ergolab/errors.hpp"
#include "ergolab/rng.hpp"

namespace ergolab {

enum class SystemKind { cyclic, shift, rotation };

namespace detail {
// domain separation tags for the counter rng
inline constexpr std::uint64_t kTagSample = 0x73616d706c65ull;   // "sample"
inline constexpr std::uint64_t kTagSymbol = 0x73796d626f6cull;   // "symbol"
inline constexpr std::uint64_t kTagRotate = 0x726f74617465ull;   // "rotate"
}  // namespace detail

struct CyclicSystem {
  std::int64_t size = 1;
  std::int64_t step = 1;
  std::uint64_t seed = 0;

  CyclicSystem() = default;
  CyclicSystem(std::int64_t n, std::int64_t st = 1, std::uint64_t sd = 0)
      : size(n), seed(sd) {
    if (n < 1) throw ValidationError("cyclic system size must be >= 1");
    step = ((st % n) + n) % n;
    if (std::gcd(step, size) != 1)
      throw ValidationError("cyclic step must be coprime to the size");
  }
};

struct ShiftSystem {
  int alphabet = 2;
  std::vector<double> probs;
  std::uint64_t seed = 0;
  std::vector<double> cdf;  // cdf[k] = prob of symbol < k, cdf[alphabet] = 1

  ShiftSystem() : ShiftSystem(2, {0.5, 0.5}, 0) {}
  ShiftSystem(int s, std::vector<double> p, std::uint64_t sd)
      : alphabet(s), probs(std::move(p)), seed(sd) {
    if (alphabet < 2) throw ValidationError("shift alphabet must be >= 2");
    if (static_cast<int>(probs.size()) != alphabet)
      throw ValidationError("shift needs one probability per symbol");
    double sum = 0;
    for (double q : probs) {
      if (q < 0) throw ValidationError("symbol probabilities must be >= 0");
      sum += q;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw ValidationError("symbol probabilities must sum to 1 within 1e-12");
    cdf.resize(alphabet + 1);
    cdf[0] = 0;
    for (int k = 0; k < alphabet; ++k) cdf[k + 1] = cdf[k] + probs[k];
    cdf[alphabet] = 1.0;
  }

  // coordinate `coord` of point `id`; re-queries always agree
  int symbol(std::uint64_t id, std::int64_t coord) const {
    const double u = unit_double(
        mix64(seed, detail::kTagSymbol, id, static_cast<std::uint64_t>(coord)));
    int k = 0;
    while (k + 1 < alphabet && u >= cdf[k + 1]) ++k;
    return k;
  }
};

struct RotationSystem {
  double angle = 0.5;
  bool convergent_angle = false;  // bookkeeping: angle came from a continued-fraction convergent
  std::uint64_t seed = 0;

  // interval-membership tolerance for rotation coordinates
  static constexpr double kEps = 1e-15;

  RotationSystem() = default;
  RotationSystem(double a, std::uint64_t sd, bool conv = false)
      : angle(a), convergent_angle(conv), seed(sd) {
    if (!(a > 0.0) || !(a < 1.0))
      throw ValidationError("rotation angle must lie in (0,1)");
  }
};

using System = std::variant<CyclicSystem, ShiftSystem, RotationSystem>;

inline SystemKind kind_of(const System& sys) {
  switch (sys.index()) {
    case 0: return SystemKind::cyclic;
    case 1: return SystemKind::shift;
    default: return SystemKind::rotation;
  }
}

struct PointHandle {
  SystemKind kind = SystemKind::cyclic;
  std::int64_t index = 0;   // cyclic position
  std::uint64_t id = 0;     // shift stream id
  std::int64_t offset = 0;  // shift window displacement
  double x = 0.0;           // rotation coordinate
};

inline PointHandle cyclic_point(const CyclicSystem& sys, std::int64_t i) {
  if (i < 0 || i >= sys.size) throw ValidationError("cyclic index out of range");
  PointHandle p;
  p.kind = SystemKind::cyclic;
  p.index = i;
  return p;
}

inline PointHandle shift_point(std::uint64_t id, std::int64_t offset = 0) {
  PointHandle p;
  p.kind = SystemKind::shift;
  p.id = id;
  p.offset = offset;
  return p;
}

inline PointHandle rotation_point(double x) {
  if (!(x >= 0.0) || !(x < 1.0))
    throw ValidationError("rotation coordinate must lie in [0,1)");
  PointHandle p;
  p.kind = SystemKind::rotation;
  p.x = x;
  return p;
}

// T^power applied to p
inline PointHandle advance(const System& sys, PointHandle p, std::int64_t power) {
  switch (p.kind) {
    case SystemKind::cyclic: {
      const auto& c = std::get<CyclicSystem>(sys);
      const std::int64_t n = c.size;
      const std::int64_t r = ((power % n) + n) % n;
      // r * step can reach ~n^2; widen
      const auto wide = static_cast<__int128>(p.index) +
                        static_cast<__int128>(r) * c.step;
      p.index = static_cast<std::int64_t>(wide % n);
      return p;
    }
    case SystemKind::shift: {
      constexpr std::int64_t lim = std::int64_t{1} << 62;
      if (power >= lim || power <= -lim)
        throw OverflowError("shift orbit power out of range");
      const std::int64_t next = p.offset + power;  // |offset| < 2^62 always
      if (next >= lim || next <= -lim)
        throw OverflowError("shift orbit power out of range");
      p.offset = next;
      return p;
    }
    default: {
      const auto& r = std::get<RotationSystem>(sys);
      double t = std::fmod(p.x + static_cast<double>(power) * r.angle, 1.0);
      if (t < 0) t += 1.0;
      if (t >= 1.0) t = 0.0;
      p.x = t;
      return p;
    }
  }
}

// deterministic function of (system seed, trial)
inline PointHandle sample_point(const System& sys, std::uint64_t trial) {
  switch (kind_of(sys)) {
    case SystemKind::cyclic: {
      const auto& c = std::get<CyclicSystem>(sys);
      PointHandle p;
      p.kind = SystemKind::cyclic;
      p.index = static_cast<std::int64_t>(
          mix64(c.seed, detail::kTagSample, trial) %
          static_cast<std::uint64_t>(c.size));
      return p;
    }
    case SystemKind::shift:
      return shift_point(trial);
    default: {
      const auto& r = std::get<RotationSystem>(sys);
      return rotation_point(unit_double(mix64(r.seed, detail::kTagRotate, trial)));
    }
  }
}

}  // namespace ergolab
