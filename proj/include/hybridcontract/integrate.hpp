#pragma once
// Event-detected integration of hybrid executions. Between resets the state
// follows the mode's ODE under an adaptive Dormand-Prince 5(4) embedded pair;
// guard crossings are detected by endpoint sign change of g across an
// accepted step and located by time bisection on the integrated solution,
// so the located pre-state carries the integrator's accuracy, not the dense
// output's. Executions are right-continuous: at an event time the state is
// post-reset.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"

namespace hybridcontract {

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  double event_tol = 1e-10;      // time-bisection width for event location
  long max_events = 10000;
  double min_dwell_warn = 1e-6;  // inter-event gap that counts toward Zeno
  double transversality_eps = 1e-8;
};

inline void validate_options(const IntegratorOptions& o) {
  if (!(o.rel_tol > 0) || !(o.abs_tol > 0) || !(o.max_step > 0) ||
      !(o.event_tol > 0) || o.max_events <= 0 || !(o.min_dwell_warn > 0) ||
      !(o.transversality_eps > 0))
    throw InvalidArgument("integrator options must all be positive");
}

struct ResetEvent {
  double time = 0.0;
  int arc_index = -1;
  ModeId from;
  ModeId to;
  Vec pre_state;   // chi(t-), on the guard surface up to the located residual
  Vec post_state;  // R(pre_state), exactly
  double guard_residual = 0.0;  // g(pre_state)
  double transversality = 0.0;  // Dg(pre_state) . F(t, pre_state), < 0
};

// Dense output of one inter-event stretch: (t, x, f) at every accepted step,
// interpolated with the matching cubic Hermite polynomial.
struct Segment {
  ModeId mode;
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> f;
};

struct Execution {
  double t0 = 0.0;
  double t_end = 0.0;
  std::vector<Segment> segments;
  std::vector<ResetEvent> events;
  // Arcs whose resets were applied at t0 because the initial state lay in
  // their guard region (no flow precedes them, so they are not events).
  std::vector<int> initial_resets;
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_finite(const Vec& x, double t, const char* what) {
  if (!x.allFinite())
    throw NonFiniteState(std::string(what) + " became non-finite at t=" +
                         std::to_string(t));
}

// Cubic Hermite interpolation on [ta, tb] from endpoint states/derivatives.
[[nodiscard]] inline Vec hermite(double ta, const Vec& xa, const Vec& fa,
                                 double tb, const Vec& xb, const Vec& fb,
                                 double t) {
  const double h = tb - ta;
  if (h <= 0.0) return xb;
  const double s = (t - ta) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * xa + ((s3 - 2 * s2 + s) * h) * fa +
         (-2 * s3 + 3 * s2) * xb + ((s3 - s2) * h) * fb;
}

// Dormand-Prince 5(4) pair with FSAL; `f0` must be f(t, x). Returns the
// 5th-order solution, its derivative (reusable as the next step's f0), and
// the scaled RMS error estimate of the embedded 4th-order difference.
struct Dp45Result {
  Vec x;
  Vec f;
  double err;
};

template <class RHS>
[[nodiscard]] Dp45Result dp45_step(const RHS& rhs, double t, const Vec& x,
                                   const Vec& f0, double h, double rel_tol,
                                   double abs_tol) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b*: difference against the embedded 4th-order weights.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;

  const Vec k1 = f0;
  const Vec k2 = rhs(t + c2 * h, x + h * (a21 * k1));
  const Vec k3 = rhs(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
  const Vec k4 = rhs(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vec k5 = rhs(t + c5 * h,
                     x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vec k6 = rhs(
      t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  Vec x1 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Vec k7 = rhs(t + h, x1);
  const Vec diff =
      h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double sc =
        abs_tol + rel_tol * std::max(std::abs(x(i)), std::abs(x1(i)));
    const double q = diff(i) / sc;
    sum += q * q;
  }
  const double err = std::sqrt(sum / static_cast<double>(x.size()));
  return {std::move(x1), k7, err};
}

[[nodiscard]] inline double initial_step(const Vec& x, const Vec& f,
                                         double horizon, double rel_tol,
                                         double abs_tol, double max_step) {
  double d0 = 0.0, d1 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double sc = abs_tol + rel_tol * std::abs(x(i));
    d0 += (x(i) / sc) * (x(i) / sc);
    d1 += (f(i) / sc) * (f(i) / sc);
  }
  d0 = std::sqrt(d0 / static_cast<double>(x.size()));
  d1 = std::sqrt(d1 / static_cast<double>(x.size()));
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  return std::min({h, horizon, max_step});
}

// Plain adaptive integration (no event checks) from (t0, x0) to t_target.
template <class RHS>
[[nodiscard]] std::pair<Vec, Vec> integrate_plain(const RHS& rhs, double t0,
                                                  const Vec& x0,
                                                  double t_target,
                                                  const IntegratorOptions& o) {
  double t = t0;
  Vec x = x0;
  Vec f = rhs(t0, x0);
  if (t_target <= t0) return {x, f};
  double h = initial_step(x, f, t_target - t0, o.rel_tol, o.abs_tol,
                          o.max_step);
  int consecutive_rejects = 0;
  while (t < t_target) {
    const double remaining = t_target - t;
    double h_step = std::min(h, o.max_step);
    if (h_step >= remaining) {
      h_step = remaining;
    } else if (h_step < 1e-14 * (1.0 + std::abs(t))) {
      throw IntegrationFailure("step size underflow at t=" +
                               std::to_string(t));
    }
    auto step = dp45_step(rhs, t, x, f, h_step, o.rel_tol, o.abs_tol);
    if (step.err <= 1.0) {
      t += h_step;
      x = std::move(step.x);
      f = std::move(step.f);
      check_finite(x, t, "state");
      consecutive_rejects = 0;
      h = h_step * std::clamp(0.9 * std::pow(std::max(step.err, 1e-10), -0.2),
                              1.0, 5.0);
    } else {
      if (++consecutive_rejects > 60)
        throw IntegrationFailure("step control failed to converge at t=" +
                                 std::to_string(t));
      h = h_step * std::clamp(0.9 * std::pow(step.err, -0.2), 0.1, 0.9);
    }
  }
  return {x, f};
}

struct LocatedEvent {
  int arc_index = -1;
  double time = 0.0;
  Vec pre_state;
  double guard_residual = 0.0;
  double transversality = 0.0;
};

struct SegmentRun {
  Segment seg;
  std::optional<LocatedEvent> event;
};

// Scale for deciding whether a guard value "is zero" at a segment start:
// the located residual is bounded by |dg/dt| * event_tol, padded by 100x.
[[nodiscard]] inline double start_tolerance(double gdot, double event_tol) {
  return std::max(1e-12, 100.0 * event_tol * (1.0 + std::abs(gdot)));
}

// Integrates one segment in `mode` from (t_start, x_start) until t_target or
// the first guard crossing, whichever comes first.
inline SegmentRun run_segment(const HybridSystem& sys, ModeId mode,
                              double t_start, const Vec& x_start,
                              double t_target, const IntegratorOptions& o,
                              std::vector<std::string>& warnings) {
  const auto rhs = [&](double t, const Vec& x) {
    return sys.field(mode, t, x);
  };
  SegmentRun run;
  run.seg.mode = mode;

  Vec x = x_start;
  Vec f = rhs(t_start, x);
  check_finite(f, t_start, "vector field");
  run.seg.t.push_back(t_start);
  run.seg.x.push_back(x);
  run.seg.f.push_back(f);

  const std::vector<int>& arcs = sys.arcs_from(mode);
  const int n_arcs = static_cast<int>(arcs.size());
  std::vector<double> g_prev(n_arcs);
  std::vector<bool> was_positive(n_arcs, false);
  for (int k = 0; k < n_arcs; ++k) {
    const int a = arcs[k];
    g_prev[k] = sys.guard(a, x);
    const double gdot = sys.guard_gradient(a, x).dot(f);
    const double tol = start_tolerance(gdot, o.event_tol);
    if (g_prev[k] < -tol)
      throw AssumptionViolation(
          "state lies strictly inside guard region of arc " +
          sys.arc(a).label + " at t=" + std::to_string(t_start) +
          " (reset image in a guard set)");
    if (g_prev[k] <= 0.0 && gdot < -o.transversality_eps) {
      // Landed on the surface moving inward: a zero-dwell crossing.
      run.event = LocatedEvent{a, t_start, x, g_prev[k], gdot};
      return run;
    }
    was_positive[k] = g_prev[k] > tol;
  }

  if (t_target <= t_start) return run;

  double t = t_start;
  double h = initial_step(x, f, t_target - t_start, o.rel_tol, o.abs_tol,
                          o.max_step);
  int consecutive_rejects = 0;
  std::vector<double> g_new(n_arcs);

  while (t < t_target) {
    const double remaining = t_target - t;
    double h_step = std::min(h, o.max_step);
    if (h_step >= remaining) {
      h_step = remaining;
    } else if (h_step < 1e-14 * (1.0 + std::abs(t))) {
      throw IntegrationFailure("step size underflow at t=" +
                               std::to_string(t));
    }
    auto step = dp45_step(rhs, t, x, f, h_step, o.rel_tol, o.abs_tol);
    if (step.err > 1.0) {
      if (++consecutive_rejects > 60)
        throw IntegrationFailure("step control failed to converge at t=" +
                                 std::to_string(t));
      h = h_step * std::clamp(0.9 * std::pow(step.err, -0.2), 0.1, 0.9);
      continue;
    }
    consecutive_rejects = 0;
    const double t1 = t + h_step;
    check_finite(step.x, t1, "state");

    int crossing_arc = -1;  // position in `arcs`
    double crossing_time = std::numeric_limits<double>::infinity();
    double crossing_trans = 0.0;
    Vec crossing_state;
    for (int k = 0; k < n_arcs; ++k) {
      const int a = arcs[k];
      g_new[k] = sys.guard(a, step.x);
      if (!was_positive[k] || !(g_prev[k] > 0.0 && g_new[k] <= 0.0)) continue;
      // Bisect on the exact solution, not the dense-output interpolant: the
      // Hermite error is O(h^4) mid-step and would leave a guard residual
      // far above |dg/dt| * event_tol. Marching the left bracket state
      // forward halves each integration span, so the total cost stays near
      // one extra step.
      double ta = t, tb = t1;
      Vec xa = x, xb = step.x;
      for (int it = 0; it < 200 && (tb - ta) > o.event_tol; ++it) {
        const double tm = 0.5 * (ta + tb);
        Vec xm = integrate_plain(rhs, ta, xa, tm, o).first;
        if (sys.guard(a, xm) > 0.0) {
          ta = tm;
          xa = std::move(xm);
        } else {
          tb = tm;
          xb = std::move(xm);
        }
      }
      const double tr = sys.guard_gradient(a, xb).dot(sys.field(mode, tb, xb));
      const bool earlier = tb < crossing_time - o.event_tol;
      const bool tied = std::abs(tb - crossing_time) <= o.event_tol;
      if (crossing_arc >= 0 && tied) {
        warnings.push_back("simultaneous guard crossings near t=" +
                           std::to_string(tb) + "; taking the more " +
                           "transversal arc");
        if (tr < crossing_trans) {
          crossing_arc = k;
          crossing_time = tb;
          crossing_trans = tr;
          crossing_state = xb;
        }
      } else if (crossing_arc < 0 || earlier) {
        crossing_arc = k;
        crossing_time = tb;
        crossing_trans = tr;
        crossing_state = xb;
      }
    }

    if (crossing_arc >= 0) {
      const int a = arcs[crossing_arc];
      Vec pre = std::move(crossing_state);
      const double g_res = sys.guard(a, pre);
      const double trans =
          sys.guard_gradient(a, pre).dot(sys.field(mode, crossing_time, pre));
      if (trans >= -o.transversality_eps)
        throw TransversalityViolation(
            "Dg.F = " + std::to_string(trans) + " at crossing of arc " +
            sys.arc(a).label + " at t=" + std::to_string(crossing_time));
      run.seg.t.push_back(crossing_time);
      run.seg.x.push_back(pre);
      run.seg.f.push_back(sys.field(mode, crossing_time, pre));
      run.event = LocatedEvent{a, crossing_time, std::move(pre), g_res, trans};
      return run;
    }

    // An arc that started on its surface (boundary landing) cannot fire the
    // sign-change test until g has been seen strictly positive. If instead g
    // drifts negative the flow is sliding into the guard region, which the
    // transversality assumption excludes.
    for (int k = 0; k < n_arcs; ++k) {
      if (was_positive[k]) continue;
      const double tol = start_tolerance(
          sys.guard_gradient(arcs[k], step.x).dot(step.f), o.event_tol);
      if (g_new[k] > tol)
        was_positive[k] = true;
      else if (g_new[k] < -tol)
        throw TransversalityViolation(
            "flow slid into the guard region of arc " + sys.arc(arcs[k]).label +
            " without a transversal crossing near t=" + std::to_string(t1));
    }

    t = t1;
    x = std::move(step.x);
    f = std::move(step.f);
    std::swap(g_prev, g_new);
    run.seg.t.push_back(t);
    run.seg.x.push_back(x);
    run.seg.f.push_back(f);
    h = h_step *
        std::clamp(0.9 * std::pow(std::max(step.err, 1e-10), -0.2), 1.0, 5.0);
  }
  return run;
}

}  // namespace detail

// The flow phi(t, t0, state0): integrate from t0 to t_end, applying resets at
// located guard crossings. If state0 lies in a guard region (g <= 0 on some
// outgoing arc) the reset is applied first; the returned execution starts
// from the post-reset state.
[[nodiscard]] inline Execution flow(const HybridSystem& sys, double t0,
                                    const HybridState& state0, double t_end,
                                    const IntegratorOptions& opts = {}) {
  validate_options(opts);
  if (!(t_end >= t0))
    throw InvalidArgument("t_end must be >= t0");
  Execution exec;
  exec.t0 = t0;
  exec.t_end = t_end;

  ModeId mode = state0.mode;
  Vec x = state0.x;
  if (x.size() != sys.mode(mode).dim)
    throw DimensionMismatch("initial state dimension does not match mode " +
                            sys.mode(mode).name);
  detail::check_finite(x, t0, "initial state");

  // Initial-condition-in-guard convention: reset before flowing.
  for (int chain = 0;; ++chain) {
    if (chain > 10)
      throw ZenoSuspected("initial reset chain exceeded 10 applications");
    int best_arc = -1;
    double best_g = 0.0;
    for (int a : sys.arcs_from(mode)) {
      const double g = sys.guard(a, x);
      if (g <= 0.0 && (best_arc < 0 || g < best_g)) {
        best_arc = a;
        best_g = g;
      }
    }
    if (best_arc < 0) break;
    x = sys.reset(best_arc, x);
    detail::check_finite(x, t0, "reset image");
    mode = sys.arc(best_arc).to;
    exec.initial_resets.push_back(best_arc);
    if (best_g == 0.0) break;  // boundary start: reset once, then flow
  }

  double t = t0;
  int short_dwell_count = 0;
  while (true) {
    detail::SegmentRun run =
        detail::run_segment(sys, mode, t, x, t_end, opts, exec.warnings);
    exec.segments.push_back(std::move(run.seg));
    if (!run.event) break;

    const detail::LocatedEvent& ev = *run.event;
    const GuardArc& arc = sys.arc(ev.arc_index);
    Vec post = sys.reset(ev.arc_index, ev.pre_state);
    detail::check_finite(post, ev.time, "reset image");

    if (!exec.events.empty()) {
      const double dwell = ev.time - exec.events.back().time;
      if (dwell < opts.min_dwell_warn) {
        exec.warnings.push_back("dwell time " + std::to_string(dwell) +
                                " below min_dwell_warn at t=" +
                                std::to_string(ev.time));
        if (++short_dwell_count >= 10)
          throw ZenoSuspected("10 consecutive-event gaps below " +
                              std::to_string(opts.min_dwell_warn) +
                              "; execution looks Zeno near t=" +
                              std::to_string(ev.time));
      }
    }
    exec.events.push_back(ResetEvent{ev.time, ev.arc_index, arc.from, arc.to,
                                     ev.pre_state, post, ev.guard_residual,
                                     ev.transversality});
    if (static_cast<long>(exec.events.size()) > opts.max_events)
      throw ZenoSuspected("more than " + std::to_string(opts.max_events) +
                          " events before t=" + std::to_string(ev.time));
    mode = arc.to;
    x = std::move(post);
    t = ev.time;
    if (t >= t_end) {
      // Event located exactly at the horizon: right-continuity puts the
      // post-reset point at t_end in a one-sample trailing segment.
      Segment tail;
      tail.mode = mode;
      tail.t.push_back(t_end);
      tail.x.push_back(x);
      tail.f.push_back(sys.field(mode, t_end, x));
      exec.segments.push_back(std::move(tail));
      break;
    }
  }
  return exec;
}

// Right-continuous evaluation: at an event time, the post-event segment wins.
[[nodiscard]] inline HybridState sample(const Execution& exec, double t) {
  const double slack = 1e-12 * (1.0 + std::abs(t));
  if (t < exec.t0 - slack || t > exec.t_end + slack)
    throw InvalidArgument("sample time outside [t0, t_end]");
  t = std::clamp(t, exec.t0, exec.t_end);

  // Latest segment starting at or before t.
  int s = 0;
  for (int i = static_cast<int>(exec.segments.size()) - 1; i >= 0; --i) {
    if (exec.segments[static_cast<std::size_t>(i)].t.front() <= t) {
      s = i;
      break;
    }
  }
  const Segment& seg = exec.segments[static_cast<std::size_t>(s)];
  const auto& ts = seg.t;
  if (t >= ts.back()) return {seg.mode, seg.x.back()};
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = static_cast<std::size_t>(
      std::max<std::ptrdiff_t>(0, (it - ts.begin()) - 1));
  return {seg.mode,
          detail::hermite(ts[i], seg.x[i], seg.f[i], ts[i + 1], seg.x[i + 1],
                          seg.f[i + 1], t)};
}

[[nodiscard]] inline HybridState final_state(const Execution& exec) {
  const Segment& seg = exec.segments.back();
  return {seg.mode, seg.x.back()};
}

// Arc indices in application order (initial resets, then crossings); used to
// decide whether two nearby trajectories experienced the same switches.
[[nodiscard]] inline std::vector<int> event_signature(const Execution& exec) {
  std::vector<int> sig = exec.initial_resets;
  for (const ResetEvent& e : exec.events) sig.push_back(e.arc_index);
  return sig;
}

}  // namespace hybridcontract
