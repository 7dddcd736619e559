#pragma once

// Deterministic low-discrepancy sampling of mode boxes and guard surfaces.
// Every stream is addressed by integer index, so enlarging a sample count
// extends the sequence without moving earlier points, and parallel
// evaluation reduces to the same max regardless of order.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/norms.hpp"

namespace hybridcontract {

namespace detail {

inline constexpr int kHaltonPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                        23, 29, 31, 37, 41, 43, 47, 53};

// Radical-inverse of i in the given base; in [0,1).
[[nodiscard]] inline double halton(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
  }
  return r;
}

}  // namespace detail

struct Box {
  Vec lo;
  Vec hi;
};

// Point #index of the Halton sequence scaled into the box. Index 0 is the
// lower corner; callers start at 1.
[[nodiscard]] inline Vec halton_in_box(const Box& box, std::uint64_t index) {
  const int n = static_cast<int>(box.lo.size());
  if (n > static_cast<int>(sizeof(detail::kHaltonPrimes) / sizeof(int)))
    throw InvalidArgument("box dimension exceeds available Halton bases");
  Vec p(n);
  for (int d = 0; d < n; ++d)
    p(d) = box.lo(d) + (box.hi(d) - box.lo(d)) *
                           detail::halton(index, detail::kHaltonPrimes[d]);
  return p;
}

inline void validate_box(const Box& box, int dim) {
  if (box.lo.size() != dim || box.hi.size() != dim)
    throw DimensionMismatch("sampler box dimension does not match mode");
  for (int d = 0; d < dim; ++d)
    if (!(box.hi(d) > box.lo(d)))
      throw InvalidArgument("sampler box must have positive volume");
}

// First `count` box points passing the mode's membership test. Rejection
// preserves prefix stability: accepted point #k never depends on count.
[[nodiscard]] inline std::vector<Vec> sample_mode_points(
    const HybridSystem& sys, ModeId mode, const Box& box, int count) {
  validate_box(box, sys.mode(mode).dim);
  if (count <= 0) throw InvalidArgument("sample count must be positive");
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(count));
  const std::uint64_t max_tries = 1000ull * static_cast<std::uint64_t>(count);
  for (std::uint64_t i = 1; i <= max_tries &&
                            pts.size() < static_cast<std::size_t>(count);
       ++i) {
    Vec p = halton_in_box(box, i);
    if (sys.member(mode, p)) pts.push_back(std::move(p));
  }
  return pts;
}

namespace detail {

// Walk x along -Dg direction (or +Dg when g < 0) to a bracket, then bisect
// until |g| is inside tol. Returns nothing when no bracket exists in the box.
[[nodiscard]] inline std::optional<Vec> root_toward_guard(
    const HybridSystem& sys, int arc_index, const Vec& seed, const Box& box,
    double tol) {
  const double g0 = sys.guard(arc_index, seed);
  if (std::abs(g0) <= tol) return seed;
  Row grad = sys.guard_gradient(arc_index, seed);
  const double gn = grad.norm();
  if (gn < 1e-12) return std::nullopt;
  Vec dir = -(grad.transpose()) / gn;  // g decreases along dir to first order
  if (g0 < 0.0) dir = -dir;

  const double t_max = (box.hi - box.lo).norm();
  double ta = 0.0, ga = g0;
  double tb = 0.0;
  bool bracketed = false;
  const int kScan = 64;
  for (int k = 1; k <= kScan; ++k) {
    const double t = t_max * k / kScan;
    const double g = sys.guard(arc_index, seed + t * dir);
    if (g == 0.0 || (g < 0.0) != (ga < 0.0)) {
      tb = t;
      bracketed = true;
      break;
    }
    ta = t;
    ga = g;
  }
  if (!bracketed) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    const double tm = 0.5 * (ta + tb);
    const double gm = sys.guard(arc_index, seed + tm * dir);
    if (std::abs(gm) <= tol) return seed + tm * dir;
    if ((gm < 0.0) == (ga < 0.0)) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
    }
  }
  Vec x = seed + 0.5 * (ta + tb) * dir;
  return std::abs(sys.guard(arc_index, x)) <= tol ? std::optional<Vec>(x)
                                                  : std::nullopt;
}

}  // namespace detail

// Points on the guard surface of one arc, |g| <= tol, inside the departing
// mode's domain. Uses the arc's chart when it has one, otherwise roots along
// the guard gradient from box seeds.
[[nodiscard]] inline std::vector<Vec> sample_guard_points(
    const HybridSystem& sys, int arc_index, const Box& from_box, int count,
    double tol = 1e-8) {
  if (count <= 0) throw InvalidArgument("sample count must be positive");
  const GuardArc& arc = sys.arc(arc_index);
  const ModeId from = arc.from;
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(count));

  if (arc.chart) {
    Box cbox{arc.chart_lo, arc.chart_hi};
    const int cd = static_cast<int>(arc.chart_lo.size());
    if (cd <= 0 || arc.chart_hi.size() != cd)
      throw InvalidArgument("arc " + arc.label + " chart box is malformed");
    const std::uint64_t max_tries =
        1000ull * static_cast<std::uint64_t>(count);
    for (std::uint64_t i = 1;
         i <= max_tries && pts.size() < static_cast<std::size_t>(count); ++i) {
      Vec x = arc.chart(halton_in_box(cbox, i));
      if (std::abs(sys.guard(arc_index, x)) > tol) continue;
      if (!sys.member(from, x)) continue;
      pts.push_back(std::move(x));
    }
    return pts;
  }

  validate_box(from_box, sys.mode(from).dim);
  const std::uint64_t max_tries = 1000ull * static_cast<std::uint64_t>(count);
  for (std::uint64_t i = 1;
       i <= max_tries && pts.size() < static_cast<std::size_t>(count); ++i) {
    auto x = detail::root_toward_guard(sys, arc_index,
                                       halton_in_box(from_box, i), from_box,
                                       tol);
    if (!x || !sys.member(from, *x)) continue;
    pts.push_back(std::move(*x));
  }
  return pts;
}

// Prefix-stable time grid on [t_lo, t_hi]: the van der Corput sequence in
// base 2, starting at 0 so t_lo itself is always sampled.
[[nodiscard]] inline std::vector<double> sample_times(double t_lo, double t_hi,
                                                      int count) {
  if (count <= 0) throw InvalidArgument("time sample count must be positive");
  if (t_hi < t_lo) throw InvalidArgument("time range is reversed");
  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(count));
  if (t_hi == t_lo) {
    ts.push_back(t_lo);
    return ts;
  }
  for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(count); ++k)
    ts.push_back(t_lo + (t_hi - t_lo) * detail::halton(k, 2));
  return ts;
}

// Sampling plan for certification: per-mode boxes, per-mode point counts,
// guard point counts per arc, and a time grid (a single t for autonomous
// fields).
struct RegionSampler {
  std::vector<Box> boxes;  // one per mode
  int samples_per_mode = 10000;
  int guard_samples_per_arc = 256;
  double t_lo = 0.0;
  double t_hi = 0.0;  // t_hi == t_lo: autonomous, sample t_lo only
  int time_samples = 32;

  [[nodiscard]] std::vector<double> times() const {
    return t_hi == t_lo ? std::vector<double>{t_lo}
                        : sample_times(t_lo, t_hi, time_samples);
  }
};

inline void validate_sampler(const HybridSystem& sys,
                             const RegionSampler& s) {
  if (static_cast<int>(s.boxes.size()) != sys.n_modes())
    throw InvalidArgument("sampler needs one box per mode");
  for (int m = 0; m < sys.n_modes(); ++m)
    validate_box(s.boxes[static_cast<std::size_t>(m)],
                 sys.mode(ModeId{m}).dim);
  if (s.samples_per_mode <= 0 || s.guard_samples_per_arc <= 0 ||
      s.time_samples <= 0)
    throw InvalidArgument("sample counts must be positive");
  if (s.t_hi < s.t_lo) throw InvalidArgument("time range is reversed");
}

}  // namespace hybridcontract
