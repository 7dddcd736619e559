#pragma once

// Sensitivity of the flow to its initial condition. Between events the
// Jacobian W(t) obeys the variational equation dW/dt = DxF(t, psi(t)) W over
// the reference trajectory psi; at a guard crossing it picks up a saltation
// factor W(t+) = Xi(t, psi(t-)) W(t-).

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/integrate.hpp"
#include "hybridcontract/norms.hpp"

namespace hybridcontract {

// One saltation factor together with the pieces it was assembled from.
// matrix == DR + (F_post - DR F_pre) Dg / denom, denom = Dg . F_pre < 0.
struct SaltationRecord {
  double time = 0.0;
  int arc_index = -1;
  ModeId from;
  ModeId to;
  Vec point;    // pre-reset state on the guard surface
  Vec F_pre;    // field of the departing mode at (time, point)
  Vec F_post;   // field of the arriving mode at (time, R(point))
  Row Dg;       // guard gradient at point
  Mat DR;       // reset Jacobian at point
  double denom = 0.0;
  Mat matrix;
};

namespace detail {

// Rank-one correction of the reset Jacobian; no transversality gate so the
// assembly is testable on its own.
[[nodiscard]] inline Mat saltation_raw(const Vec& F_pre, const Vec& F_post,
                                       const Row& Dg, const Mat& DR,
                                       double denom) {
  return DR + ((F_post - DR * F_pre) * Dg) / denom;
}

}  // namespace detail

[[nodiscard]] inline SaltationRecord saltation_matrix(const HybridSystem& sys,
                                                      int arc_index, double t,
                                                      const Vec& x) {
  const GuardArc& arc = sys.arc(arc_index);
  SaltationRecord rec;
  rec.time = t;
  rec.arc_index = arc_index;
  rec.from = arc.from;
  rec.to = arc.to;
  rec.point = x;
  rec.F_pre = sys.field(arc.from, t, x);
  rec.Dg = sys.guard_gradient(arc_index, x);
  rec.DR = sys.reset_jacobian(arc_index, x);
  rec.F_post = sys.field(arc.to, t, sys.reset(arc_index, x));
  rec.denom = rec.Dg.dot(rec.F_pre);
  if (rec.denom >= -kEpsTransversality)
    throw TransversalityViolation(
        "Dg.F = " + std::to_string(rec.denom) + " at saltation point of arc " +
        arc.label + "; the crossing is not transversal");
  rec.matrix = detail::saltation_raw(rec.F_pre, rec.F_post, rec.Dg, rec.DR,
                                     rec.denom);
  return rec;
}

struct FlowJacobianResult {
  Mat jacobian;  // D phi(t_end, t0, .) at x0, dims n_end x n_0
  std::vector<SaltationRecord> saltations;
};

namespace detail {

// Integrate dW/dt = DxF(t, psi(t)) W across one stored segment, with psi
// evaluated on the segment's Hermite dense output.
inline void propagate_segment(const HybridSystem& sys, const Segment& seg,
                              Mat& W, const IntegratorOptions& o) {
  if (seg.t.size() < 2) return;
  const ModeId mode = seg.mode;
  const auto& ts = seg.t;
  const long rows = W.rows();
  const long cols = W.cols();

  auto rhs = [&](double t, const Vec& w_flat) -> Vec {
    std::size_t i = static_cast<std::size_t>(
        std::max<std::ptrdiff_t>(
            0, std::upper_bound(ts.begin(), ts.end(), t) - ts.begin() - 1));
    if (i + 1 >= ts.size()) i = ts.size() - 2;
    const Vec psi = hermite(ts[i], seg.x[i], seg.f[i], ts[i + 1],
                            seg.x[i + 1], seg.f[i + 1],
                            std::clamp(t, ts.front(), ts.back()));
    const Mat J = sys.field_jacobian(mode, t, psi);
    const Eigen::Map<const Mat> Wm(w_flat.data(), rows, cols);
    Vec out(rows * cols);
    Eigen::Map<Mat>(out.data(), rows, cols) = J * Wm;
    return out;
  };

  Vec w0(rows * cols);
  Eigen::Map<Mat>(w0.data(), rows, cols) = W;
  const Vec w1 = integrate_plain(rhs, ts.front(), w0, ts.back(), o).first;
  W = Eigen::Map<const Mat>(w1.data(), rows, cols);
}

}  // namespace detail

// Initial conditions inside a guard region are reset before flowing; the
// map x -> R(x) happens at fixed time t0 there, so those factors are plain
// reset Jacobians, not saltation matrices.
[[nodiscard]] inline FlowJacobianResult flow_jacobian(
    const HybridSystem& sys, double t0, const HybridState& state0,
    double t_end, const IntegratorOptions& opts = {}) {
  const Execution exec = flow(sys, t0, state0, t_end, opts);
  for (const ResetEvent& ev : exec.events)
    if (std::abs(ev.time - t_end) <= opts.event_tol)
      throw EventAtHorizon("event on arc " + sys.arc(ev.arc_index).label +
                           " at t=" + std::to_string(ev.time) +
                           " coincides with t_end; the flow map is not "
                           "differentiable there");

  FlowJacobianResult res;
  const int n0 = sys.mode(state0.mode).dim;
  res.jacobian = Mat::Identity(n0, n0);

  Vec x = state0.x;
  for (int a : exec.initial_resets) {
    res.jacobian = sys.reset_jacobian(a, x) * res.jacobian;
    x = sys.reset(a, x);
  }

  std::size_t seg_i = 0;
  for (const ResetEvent& ev : exec.events) {
    detail::propagate_segment(sys, exec.segments[seg_i++], res.jacobian, opts);
    SaltationRecord rec =
        saltation_matrix(sys, ev.arc_index, ev.time, ev.pre_state);
    res.jacobian = rec.matrix * res.jacobian;
    res.saltations.push_back(std::move(rec));
  }
  for (; seg_i < exec.segments.size(); ++seg_i)
    detail::propagate_segment(sys, exec.segments[seg_i], res.jacobian, opts);
  return res;
}

// Central-difference oracle for flow_jacobian. Perturbed runs must realize
// the reference event sequence; the step shrinks by 10 up to three times
// before giving up. Tolerances are tightened so the h^2 truncation error
// dominates the integration error.
[[nodiscard]] inline Mat finite_difference_flow_jacobian(
    const HybridSystem& sys, double t0, const HybridState& state0,
    double t_end, const IntegratorOptions& opts = {}, double h = 0.0) {
  IntegratorOptions o = opts;
  o.rel_tol = std::min(opts.rel_tol, 1e-10);
  o.abs_tol = std::min(opts.abs_tol, 1e-12);

  const Execution ref = flow(sys, t0, state0, t_end, o);
  const std::vector<int> ref_sig = event_signature(ref);
  const int n0 = sys.mode(state0.mode).dim;

  if (h <= 0.0) h = 1e-5 * (1.0 + state0.x.norm());
  for (int attempt = 0;; ++attempt) {
    bool mismatch = false;
    Mat J;
    for (int col = 0; col < n0 && !mismatch; ++col) {
      Vec dx = Vec::Zero(n0);
      dx(col) = h;
      const Execution plus =
          flow(sys, t0, {state0.mode, state0.x + dx}, t_end, o);
      const Execution minus =
          flow(sys, t0, {state0.mode, state0.x - dx}, t_end, o);
      if (event_signature(plus) != ref_sig ||
          event_signature(minus) != ref_sig) {
        mismatch = true;
        break;
      }
      const Vec xp = final_state(plus).x;
      const Vec xm = final_state(minus).x;
      if (col == 0) J.resize(xp.size(), n0);
      J.col(col) = (xp - xm) / (2.0 * h);
    }
    if (!mismatch) return J;
    if (attempt >= 3)
      throw EventSequenceMismatch(
          "perturbed trajectories change their event sequence even at h=" +
          std::to_string(h) + "; no valid difference quotient");
    h /= 10.0;
  }
}

}  // namespace hybridcontract
