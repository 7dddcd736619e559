#pragma once

// Upper bound on the intrinsic distance between hybrid states: the best
// R-connected path found among straight segments joined by reset jumps at
// optimized guard points. Jumps cost nothing; segment lengths are measured
// in the norm of the mode they lie in. The infimum itself is out of reach,
// so every result is an upper bound.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/integrate.hpp"
#include "hybridcontract/nelder_mead.hpp"
#include "hybridcontract/norms.hpp"
#include "hybridcontract/sampling.hpp"

namespace hybridcontract {

struct PathHop {
  ModeId mode;
  Vec start;
  Vec end;
  double length = 0.0;
};

struct PathJump {
  int arc_index = -1;
  Vec guard_point;
};

// hops[j] ends on the guard of jumps[j]; the next hop starts at its reset
// image. total_length is the sum of hop lengths; reversed marks estimates
// whose hops run from b to a (reset jumps are traversed forward only, so
// both directions are searched and the shorter kept).
struct PathEstimate {
  std::vector<PathHop> hops;
  std::vector<PathJump> jumps;
  double total_length = std::numeric_limits<double>::infinity();
  bool reversed = false;
};

struct DistanceOptions {
  int max_hops = 2;
  int multistarts = 8;
  double on_guard_tol = 1e-8;
  bool search_reverse = true;
  NelderMeadOptions nm{};
};

namespace detail {

[[nodiscard]] inline double mode_len(const HybridSystem& sys, ModeId m,
                                     const Vec& u) {
  return vector_norm(u, sys.mode(m).norm);
}

// All arc sequences of 1..max_hops arcs leading from `cur` to `to`.
inline void collect_sequences(const HybridSystem& sys, ModeId cur, ModeId to,
                              int hops_left, std::vector<int>& prefix,
                              std::vector<std::vector<int>>& out) {
  if (!prefix.empty() && cur == to) out.push_back(prefix);
  if (hops_left == 0) return;
  for (int a : sys.arcs_from(cur)) {
    prefix.push_back(a);
    collect_sequences(sys, sys.arc(a).to, to, hops_left - 1, prefix, out);
    prefix.pop_back();
  }
}

// Newton steps along the guard gradient; returns false when |g| cannot be
// brought inside tol (the path invariant requires jump points on the
// surface).
inline bool polish_onto_guard(const HybridSystem& sys, int arc, Vec& p,
                              double tol) {
  for (int it = 0; it < 25; ++it) {
    const double g = sys.guard(arc, p);
    if (std::abs(g) <= tol) return true;
    const Row grad = sys.guard_gradient(arc, p);
    const double n2 = grad.squaredNorm();
    if (n2 < 1e-16) return false;
    p -= (g / n2) * grad.transpose();
  }
  return std::abs(sys.guard(arc, p)) <= tol;
}

// Path length through fixed guard points, with a flat penalty for points
// outside the departing mode's domain. Used as the optimization objective.
[[nodiscard]] inline double sequence_length(const HybridSystem& sys,
                                            const std::vector<int>& seq,
                                            const HybridState& a,
                                            const HybridState& b,
                                            const std::vector<Vec>& points) {
  double L = 0.0;
  ModeId m = a.mode;
  Vec cur = a.x;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    const Vec& p = points[j];
    if (!sys.member(m, p)) L += 1e9;
    L += mode_len(sys, m, p - cur);
    cur = sys.reset(seq[j], p);
    m = sys.arc(seq[j]).to;
  }
  L += mode_len(sys, m, b.x - cur);
  return L;
}

[[nodiscard]] inline PathEstimate assemble_path(const HybridSystem& sys,
                                                const std::vector<int>& seq,
                                                const HybridState& a,
                                                const HybridState& b,
                                                const std::vector<Vec>& points,
                                                double on_guard_tol) {
  PathEstimate pe;
  std::vector<Vec> pts = points;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (!polish_onto_guard(sys, seq[j], pts[j], on_guard_tol)) return pe;
    if (!sys.member(sys.arc(seq[j]).from, pts[j])) return pe;
  }
  pe.total_length = 0.0;
  ModeId m = a.mode;
  Vec cur = a.x;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    const double len = mode_len(sys, m, pts[j] - cur);
    pe.hops.push_back({m, cur, pts[j], len});
    pe.jumps.push_back({seq[j], pts[j]});
    pe.total_length += len;
    cur = sys.reset(seq[j], pts[j]);
    m = sys.arc(seq[j]).to;
  }
  const double len = mode_len(sys, m, b.x - cur);
  pe.hops.push_back({m, cur, b.x, len});
  pe.total_length += len;
  return pe;
}

[[nodiscard]] inline PathEstimate straight_path(const HybridSystem& sys,
                                                const HybridState& a,
                                                const HybridState& b) {
  PathEstimate pe;
  const double len = mode_len(sys, a.mode, b.x - a.x);
  pe.hops.push_back({a.mode, a.x, b.x, len});
  pe.total_length = len;
  return pe;
}

// Joint Nelder-Mead over the concatenated chart parameters of the sequence,
// multistarted from the box midpoint plus Halton points.
[[nodiscard]] inline PathEstimate optimize_charted(
    const HybridSystem& sys, const std::vector<int>& seq,
    const HybridState& a, const HybridState& b, const DistanceOptions& o) {
  int total_dim = 0;
  for (int s : seq) total_dim += static_cast<int>(sys.arc(s).chart_lo.size());
  Vec lo(total_dim), hi(total_dim);
  {
    int at = 0;
    for (int s : seq) {
      const GuardArc& arc = sys.arc(s);
      const int d = static_cast<int>(arc.chart_lo.size());
      lo.segment(at, d) = arc.chart_lo;
      hi.segment(at, d) = arc.chart_hi;
      at += d;
    }
  }

  auto to_points = [&](const Vec& theta) {
    std::vector<Vec> pts;
    pts.reserve(seq.size());
    int at = 0;
    for (int s : seq) {
      const GuardArc& arc = sys.arc(s);
      const int d = static_cast<int>(arc.chart_lo.size());
      pts.push_back(arc.chart(theta.segment(at, d)));
      at += d;
    }
    return pts;
  };
  std::function<double(const Vec&)> objective = [&](const Vec& theta) {
    return sequence_length(sys, seq, a, b, to_points(theta));
  };

  Vec best_theta;
  double best_f = std::numeric_limits<double>::infinity();
  Box box{lo, hi};
  for (int s = 0; s < o.multistarts; ++s) {
    const Vec seed = (s == 0) ? Vec(0.5 * (lo + hi))
                              : halton_in_box(box, static_cast<std::uint64_t>(s));
    const NelderMeadResult r = nelder_mead(objective, seed, lo, hi, o.nm);
    if (r.f < best_f) {
      best_f = r.f;
      best_theta = r.x;
    }
  }
  if (!std::isfinite(best_f) || best_f >= 1e9) return {};
  return assemble_path(sys, seq, a, b, to_points(best_theta), o.on_guard_tol);
}

// Chartless fallback: seed each jump point by rooting g along the ray
// toward b, then coordinate moves projected back onto the guard surface.
[[nodiscard]] inline PathEstimate optimize_chartless(
    const HybridSystem& sys, const std::vector<int>& seq,
    const HybridState& a, const HybridState& b, const DistanceOptions& o) {
  std::vector<Vec> pts;
  pts.reserve(seq.size());
  ModeId m = a.mode;
  Vec cur = a.x;
  for (int s : seq) {
    if (sys.mode(m).dim != static_cast<int>(b.x.size()) ||
        cur.size() != b.x.size())
      return {};
    const double g0 = sys.guard(s, cur);
    double tau_a = 0.0, g_a = g0, tau_hit = -1.0;
    const int kScan = 128;
    for (int k = 1; k <= 4 * kScan; ++k) {
      const double tau = static_cast<double>(k) / kScan;
      const double g = sys.guard(s, cur + tau * (b.x - cur));
      if (g == 0.0 || (g < 0.0) != (g_a < 0.0)) {
        double ta = tau_a, tb = tau;
        for (int it = 0; it < 200; ++it) {
          const double tm = 0.5 * (ta + tb);
          const double gm = sys.guard(s, cur + tm * (b.x - cur));
          if ((gm < 0.0) == (g_a < 0.0))
            ta = tm;
          else
            tb = tm;
        }
        tau_hit = 0.5 * (ta + tb);
        break;
      }
      tau_a = tau;
      g_a = g;
    }
    if (tau_hit < 0.0) return {};
    Vec p = cur + tau_hit * (b.x - cur);
    if (!polish_onto_guard(sys, s, p, o.on_guard_tol)) return {};
    pts.push_back(p);
    cur = sys.reset(s, pts.back());
    m = sys.arc(s).to;
  }

  double best = sequence_length(sys, seq, a, b, pts);
  double step = 0.25;
  for (const Vec& p : pts) step = std::max(step, 0.25 * (1.0 + p.norm()));
  for (int pass = 0; pass < 80 && step > 1e-9; ++pass) {
    bool improved = false;
    for (std::size_t j = 0; j < seq.size(); ++j) {
      const int n = static_cast<int>(pts[j].size());
      for (int d = 0; d < n; ++d) {
        for (double sgn : {1.0, -1.0}) {
          Vec p = pts[j];
          const Row grad = sys.guard_gradient(seq[j], p);
          const double n2 = grad.squaredNorm();
          if (n2 < 1e-16) continue;
          Vec dir = Vec::Zero(n);
          dir(d) = 1.0;
          dir -= (grad(d) / n2) * grad.transpose();  // tangent component
          p += sgn * step * dir;
          if (!polish_onto_guard(sys, seq[j], p, o.on_guard_tol)) continue;
          std::vector<Vec> trial = pts;
          trial[j] = p;
          const double L = sequence_length(sys, seq, a, b, trial);
          if (L < best - 1e-14) {
            best = L;
            pts = std::move(trial);
            improved = true;
          }
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  if (best >= 1e9) return {};
  return assemble_path(sys, seq, a, b, pts, o.on_guard_tol);
}

[[nodiscard]] inline PathEstimate eval_sequence(const HybridSystem& sys,
                                                const std::vector<int>& seq,
                                                const HybridState& a,
                                                const HybridState& b,
                                                const DistanceOptions& o) {
  PathEstimate best;

  // A start already on the first guard makes the first hop free; this is
  // what realizes d(x, R(x)) = 0 exactly.
  if (std::abs(sys.guard(seq.front(), a.x)) <= o.on_guard_tol &&
      sys.member(a.mode, a.x)) {
    const HybridState a2{sys.arc(seq.front()).to, sys.reset(seq.front(), a.x)};
    PathEstimate rest;
    if (seq.size() == 1)
      rest = straight_path(sys, a2, b);
    else
      rest = eval_sequence(sys, {seq.begin() + 1, seq.end()}, a2, b, o);
    if (std::isfinite(rest.total_length)) {
      PathEstimate cand;
      cand.hops.push_back({a.mode, a.x, a.x, 0.0});
      cand.jumps.push_back({seq.front(), a.x});
      cand.hops.insert(cand.hops.end(), rest.hops.begin(), rest.hops.end());
      cand.jumps.insert(cand.jumps.end(), rest.jumps.begin(),
                        rest.jumps.end());
      cand.total_length = rest.total_length;
      best = std::move(cand);
    }
  }

  const bool all_charted =
      std::all_of(seq.begin(), seq.end(), [&](int s) {
        return static_cast<bool>(sys.arc(s).chart) &&
               sys.arc(s).chart_lo.size() > 0;
      });
  PathEstimate opt = all_charted ? optimize_charted(sys, seq, a, b, o)
                                 : optimize_chartless(sys, seq, a, b, o);
  if (opt.total_length < best.total_length) best = std::move(opt);
  return best;
}

}  // namespace detail

[[nodiscard]] inline PathEstimate intrinsic_distance(
    const HybridSystem& sys, const HybridState& a, const HybridState& b,
    const DistanceOptions& opts = {}) {
  if (a.x.size() != sys.mode(a.mode).dim || b.x.size() != sys.mode(b.mode).dim)
    throw DimensionMismatch("state dimension does not match its mode");

  PathEstimate best;
  if (a.mode == b.mode) best = detail::straight_path(sys, a, b);

  std::vector<std::vector<int>> seqs;
  std::vector<int> prefix;
  detail::collect_sequences(sys, a.mode, b.mode, opts.max_hops, prefix, seqs);
  bool any_route = a.mode == b.mode || !seqs.empty();
  for (const auto& seq : seqs) {
    PathEstimate cand = detail::eval_sequence(sys, seq, a, b, opts);
    if (cand.total_length < best.total_length) best = std::move(cand);
  }

  if (opts.search_reverse) {
    seqs.clear();
    detail::collect_sequences(sys, b.mode, a.mode, opts.max_hops, prefix,
                              seqs);
    any_route = any_route || !seqs.empty();
    for (const auto& seq : seqs) {
      PathEstimate cand = detail::eval_sequence(sys, seq, b, a, opts);
      if (cand.total_length < best.total_length) {
        cand.reversed = true;
        best = std::move(cand);
      }
    }
  }

  if (!std::isfinite(best.total_length)) {
    if (!any_route)
      throw NoPathFound("no arc sequence joins mode " +
                        sys.mode(a.mode).name + " to mode " +
                        sys.mode(b.mode).name + " within " +
                        std::to_string(opts.max_hops) + " hops");
    throw NoPathFound("every candidate path between the given states failed "
                      "guard-point optimization");
  }
  return best;
}

// d_upper(t) along two executions from the same start time; right-continuous
// sampling, so at an event time the post-reset state is used.
[[nodiscard]] inline std::vector<std::pair<double, double>> divergence_series(
    const HybridSystem& sys, const HybridState& a0, const HybridState& b0,
    const std::vector<double>& t_grid, const IntegratorOptions& int_opts = {},
    const DistanceOptions& dist_opts = {}, double t0 = 0.0) {
  std::vector<std::pair<double, double>> out;
  if (t_grid.empty()) return out;
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  const Execution ea = flow(sys, t0, a0, t_max, int_opts);
  const Execution eb = flow(sys, t0, b0, t_max, int_opts);
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    const HybridState xa = sample(ea, t);
    const HybridState xb = sample(eb, t);
    out.emplace_back(t,
                     intrinsic_distance(sys, xa, xb, dist_opts).total_length);
  }
  return out;
}

}  // namespace hybridcontract
