#pragma once

// Sampled contraction certificates. c bounds the matrix measure of the flow
// Jacobian over mode domains, K bounds induced norms of saltation matrices
// over guard surfaces; the envelope max{K^ceil(t/dwell_min),
// K^floor(t/dwell_max)} e^{ct} then bounds distance growth between
// executions. Bounds come from low-discrepancy sampling, so certificates are
// sampled certificates: witness points let the user verify analytically.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/integrate.hpp"
#include "hybridcontract/metric.hpp"
#include "hybridcontract/norms.hpp"
#include "hybridcontract/sampling.hpp"
#include "hybridcontract/variational.hpp"

namespace hybridcontract {

namespace detail {

// Index-addressed max reduction: fn(i) is pure, so any chunking yields the
// same result; ties break toward the lowest index.
struct ScoredIndex {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  bool valid = false;
};

template <typename Fn>
[[nodiscard]] ScoredIndex parallel_arg_max(std::size_t count, int threads,
                                           Fn&& fn) {
  ScoredIndex best;
  if (count == 0) return best;
  const int n_threads = std::max(
      1, std::min<int>(threads, static_cast<int>(
                                    std::min<std::size_t>(count, 1024))));
  auto scan = [&fn](std::size_t lo, std::size_t hi, ScoredIndex& out) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::optional<double> v = fn(i);
      if (!v) continue;
      if (!out.valid || *v > out.value) {
        out.value = *v;
        out.index = i;
        out.valid = true;
      }
    }
  };
  if (n_threads == 1) {
    scan(0, count, best);
    return best;
  }
  std::vector<ScoredIndex> slots(static_cast<std::size_t>(n_threads));
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + static_cast<std::size_t>(n_threads) - 1) /
                            static_cast<std::size_t>(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t) * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(scan, lo, hi, std::ref(slots[static_cast<std::size_t>(t)]));
  }
  for (auto& th : pool) th.join();
  for (const ScoredIndex& s : slots) {
    if (!s.valid) continue;
    if (!best.valid || s.value > best.value ||
        (s.value == best.value && s.index < best.index)) {
      best = s;
    }
  }
  return best;
}

}  // namespace detail

struct MeasureWitness {
  ModeId mode;
  double time = 0.0;
  Vec point;
  double value = 0.0;
};

struct MeasureBound {
  double c = 0.0;
  std::optional<MeasureWitness> witness;
  long samples_evaluated = 0;
};

// Max matrix measure of the field Jacobian over sampled mode boxes and the
// sampler's time grid, each mode in its own norm.
[[nodiscard]] inline MeasureBound bound_flow_measure(const HybridSystem& sys,
                                                     const RegionSampler& s,
                                                     int threads = 1) {
  validate_sampler(sys, s);
  const std::vector<double> times = s.times();

  std::vector<std::vector<Vec>> pts(static_cast<std::size_t>(sys.n_modes()));
  std::vector<std::size_t> offset(static_cast<std::size_t>(sys.n_modes()) + 1,
                                  0);
  for (int m = 0; m < sys.n_modes(); ++m) {
    pts[static_cast<std::size_t>(m)] = sample_mode_points(
        sys, ModeId{m}, s.boxes[static_cast<std::size_t>(m)],
        s.samples_per_mode);
    offset[static_cast<std::size_t>(m) + 1] =
        offset[static_cast<std::size_t>(m)] +
        pts[static_cast<std::size_t>(m)].size() * times.size();
  }
  const std::size_t total = offset[static_cast<std::size_t>(sys.n_modes())];

  auto locate = [&](std::size_t i) {
    int m = 0;
    while (i >= offset[static_cast<std::size_t>(m) + 1]) ++m;
    const std::size_t local = i - offset[static_cast<std::size_t>(m)];
    return std::tuple<int, std::size_t, std::size_t>(
        m, local / times.size(), local % times.size());
  };
  const detail::ScoredIndex best =
      detail::parallel_arg_max(total, threads, [&](std::size_t i) {
        const auto [m, ip, it] = locate(i);
        const ModeId mode{m};
        const Vec& x = pts[static_cast<std::size_t>(m)][ip];
        const Mat J = sys.field_jacobian(mode, times[it], x);
        return std::optional<double>(matrix_measure(J, sys.mode(mode).norm));
      });

  MeasureBound out;
  out.samples_evaluated = static_cast<long>(total);
  if (!best.valid) {
    out.c = 0.0;  // no samples: vacuous bound
    return out;
  }
  const auto [m, ip, it] = locate(best.index);
  out.c = best.value;
  out.witness = MeasureWitness{ModeId{m}, times[it],
                               pts[static_cast<std::size_t>(m)][ip],
                               best.value};
  return out;
}

struct SaltationWitness {
  int arc_index = -1;
  double time = 0.0;
  Vec point;
  double value = 0.0;
};

struct SaltationBound {
  double K = 1.0;  // empty max convention: no resets expand nothing
  std::optional<SaltationWitness> witness;
  bool exact = true;  // false when any mixed-norm arc used the sampled norm
  long samples_evaluated = 0;
  long skipped_non_transversal = 0;
  std::vector<std::string> arc_notes;
};

// Max induced norm of the saltation matrix over sampled guard points and
// times. Points where the crossing is not transversal carry no saltation
// factor along any execution and are skipped.
[[nodiscard]] inline SaltationBound bound_saltation_norm(
    const HybridSystem& sys, const RegionSampler& s, int threads = 1) {
  validate_sampler(sys, s);
  const std::vector<double> times = s.times();
  SaltationBound out;

  const int n_arcs = sys.n_arcs();
  std::vector<std::vector<Vec>> pts(static_cast<std::size_t>(n_arcs));
  std::vector<std::size_t> offset(static_cast<std::size_t>(n_arcs) + 1, 0);
  for (int a = 0; a < n_arcs; ++a) {
    const ModeId from = sys.arc(a).from;
    pts[static_cast<std::size_t>(a)] = sample_guard_points(
        sys, a, s.boxes[static_cast<std::size_t>(from.index)],
        s.guard_samples_per_arc);
    if (pts[static_cast<std::size_t>(a)].empty())
      out.arc_notes.push_back("arc " + sys.arc(a).label +
                              ": no guard points found in the sample box");
    offset[static_cast<std::size_t>(a) + 1] =
        offset[static_cast<std::size_t>(a)] +
        pts[static_cast<std::size_t>(a)].size() * times.size();
  }
  const std::size_t total = offset[static_cast<std::size_t>(n_arcs)];
  out.samples_evaluated = static_cast<long>(total);

  auto locate = [&](std::size_t i) {
    int a = 0;
    while (i >= offset[static_cast<std::size_t>(a) + 1]) ++a;
    const std::size_t local = i - offset[static_cast<std::size_t>(a)];
    return std::tuple<int, std::size_t, std::size_t>(
        a, local / times.size(), local % times.size());
  };

  std::atomic<long> skipped{0};
  std::atomic<bool> inexact{false};
  const detail::ScoredIndex best =
      detail::parallel_arg_max(total, threads, [&](std::size_t i)
                                   -> std::optional<double> {
        const auto [a, ip, it] = locate(i);
        const Vec& x = pts[static_cast<std::size_t>(a)][ip];
        const double t = times[it];
        const GuardArc& arc = sys.arc(a);
        const Vec F_pre = sys.field(arc.from, t, x);
        if (sys.guard_gradient(a, x).dot(F_pre) >= -kEpsTransversality) {
          skipped.fetch_add(1, std::memory_order_relaxed);
          return std::nullopt;
        }
        const SaltationRecord rec = saltation_matrix(sys, a, t, x);
        const InducedNorm nv =
            induced_norm(rec.matrix, sys.mode(arc.to).norm,
                         sys.mode(arc.from).norm);
        if (!nv.exact) inexact.store(true, std::memory_order_relaxed);
        return nv.value;
      });
  out.skipped_non_transversal = skipped.load();
  out.exact = !inexact.load();
  if (!best.valid) return out;  // K stays 1 by convention

  const auto [a, ip, it] = locate(best.index);
  out.K = best.value;
  out.witness = SaltationWitness{a, times[it],
                                 pts[static_cast<std::size_t>(a)][ip],
                                 best.value};
  return out;
}

// Nonexpansive: K <= 1, the envelope is the pure exponential e^{ct}.
// DwellTime: K > 1, growth between events must be traded against dwell time.
// NotCertified: some bound could not be computed exactly.
enum class CertificateKind { Nonexpansive, DwellTime, NotCertified };

[[nodiscard]] inline const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::Nonexpansive: return "nonexpansive";
    case CertificateKind::DwellTime: return "dwell_time";
    default: return "not_certified";
  }
}

struct ContractionCertificate {
  double c = 0.0;
  double K = 1.0;
  double dwell_min = 0.0;
  double dwell_max = std::numeric_limits<double>::infinity();
  std::vector<NormSpec> norms;
  CertificateKind kind = CertificateKind::NotCertified;
  std::optional<MeasureWitness> c_witness;
  std::optional<SaltationWitness> K_witness;

  // max{K^ceil(t/dwell_min), K^floor(t/dwell_max)} e^{ct}; dwell_min = 0
  // allows infinitely many events (the ceil branch becomes K^inf), dwell_max
  // = inf forces none (the floor branch is 1). Exactly e^{ct} when K = 1;
  // exactly 1 at t = 0.
  [[nodiscard]] double envelope(double t) const {
    if (t <= 0.0) return 1.0;
    double up, down;
    if (K == 1.0) {
      up = down = 1.0;
    } else {
      if (dwell_min == 0.0)
        up = K < 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
      else
        up = std::pow(K, std::ceil(t / dwell_min));
      if (std::isinf(dwell_max))
        down = 1.0;
      else
        down = std::pow(K, std::floor(t / dwell_max));
    }
    return std::max(up, down) * std::exp(c * t);
  }

  // max{K e^{c dwell_min}, K e^{c dwell_max}} < 1: one event plus one dwell
  // shrinks distance at both dwell extremes.
  [[nodiscard]] bool contractive() const {
    auto term = [&](double tau) {
      if (std::isinf(tau))
        return c < 0.0 ? 0.0
                       : (c > 0.0 ? std::numeric_limits<double>::infinity()
                                  : K);
      return K * std::exp(c * tau);
    };
    return std::max(term(dwell_min), term(dwell_max)) < 1.0;
  }
};

[[nodiscard]] inline ContractionCertificate make_certificate(
    double c, double K, double dwell_min,
    double dwell_max = std::numeric_limits<double>::infinity(),
    bool exact_norms = true, std::vector<NormSpec> norms = {},
    std::optional<MeasureWitness> c_witness = {},
    std::optional<SaltationWitness> K_witness = {}) {
  if (!(K >= 0.0)) throw InvalidArgument("saltation bound K must be >= 0");
  if (!(dwell_min >= 0.0) || !(dwell_max > 0.0) || dwell_min > dwell_max)
    throw InvalidArgument("dwell bounds need 0 <= dwell_min <= dwell_max, "
                          "dwell_max > 0");
  ContractionCertificate cert;
  cert.c = c;
  cert.K = K;
  cert.dwell_min = dwell_min;
  cert.dwell_max = dwell_max;
  cert.norms = std::move(norms);
  cert.c_witness = std::move(c_witness);
  cert.K_witness = std::move(K_witness);
  if (!exact_norms)
    cert.kind = CertificateKind::NotCertified;
  else if (K <= 1.0 + 1e-10)
    cert.kind = CertificateKind::Nonexpansive;
  else
    cert.kind = CertificateKind::DwellTime;
  return cert;
}

struct PairEnvelopeResult {
  HybridState xi;
  HybridState zeta;
  double d0 = 0.0;
  double max_ratio = 0.0;  // max over grid of d(t) / (envelope(t) d0)
  double t_at_max = 0.0;
  bool pass = true;
  bool possibly_estimator_slack = false;  // ratio > 1 can be slack, not proof
  std::vector<std::pair<double, double>> series;  // (t, d_upper)
};

struct EnvelopeReport {
  double tol_env = 1e-3;
  bool all_pass = true;
  std::vector<PairEnvelopeResult> pairs;
};

// Empirical check of the certificate envelope along simulated pairs. d is an
// upper-bound estimate, so a ratio above 1 is reported as a violation OR
// estimator slack; raw numbers are kept for inspection.
[[nodiscard]] inline EnvelopeReport check_envelope(
    const HybridSystem& sys, const ContractionCertificate& cert,
    const std::vector<std::pair<HybridState, HybridState>>& pairs,
    const std::vector<double>& t_grid, const IntegratorOptions& int_opts = {},
    const DistanceOptions& dist_opts = {}, double tol_env = 1e-3) {
  EnvelopeReport report;
  report.tol_env = tol_env;
  for (const auto& [xi, zeta] : pairs) {
    PairEnvelopeResult r;
    r.xi = xi;
    r.zeta = zeta;
    r.d0 = intrinsic_distance(sys, xi, zeta, dist_opts).total_length;
    r.series =
        divergence_series(sys, xi, zeta, t_grid, int_opts, dist_opts);
    if (r.d0 <= 1e-15) {
      // identical (or reset-identified) states: any finite series passes
      for (const auto& [t, d] : r.series)
        if (d > 1e-9) {
          r.pass = false;
          r.max_ratio = std::numeric_limits<double>::infinity();
          r.t_at_max = t;
        }
    } else {
      for (const auto& [t, d] : r.series) {
        const double env = cert.envelope(t) * r.d0;
        const double ratio =
            env > 0.0 ? d / env : std::numeric_limits<double>::infinity();
        if (ratio > r.max_ratio) {
          r.max_ratio = ratio;
          r.t_at_max = t;
        }
      }
      r.pass = r.max_ratio <= 1.0 + tol_env;
      r.possibly_estimator_slack = r.max_ratio > 1.0;
    }
    report.all_pass = report.all_pass && r.pass;
    report.pairs.push_back(std::move(r));
  }
  return report;
}

struct TranslationReport {
  int arc_index = -1;
  long samples = 0;
  long skipped_non_transversal = 0;
  bool norms_match = false;
  bool euclidean = false;  // both mode norms unweighted 2-norms
  double min_norm = std::numeric_limits<double>::infinity();
  double max_norm = 0.0;
  // Euclidean-only diagnostics: is F_post - F_pre parallel to the guard
  // normal, and does its coefficient alpha sit in [0, -2 Dg.F/|Dg|^2]?
  bool parallel_ok = true;
  double max_parallel_residual_rel = 0.0;
  bool alpha_in_interval = true;
  double min_alpha = std::numeric_limits<double>::infinity();
  double max_alpha = -std::numeric_limits<double>::infinity();
};

// For identity-or-translation resets the saltation norm can never drop below
// one, and in Euclidean norms it equals one exactly when the field jump is a
// guard-normal translation with a bounded coefficient.
[[nodiscard]] inline TranslationReport check_translation_reset(
    const HybridSystem& sys, int arc_index, const RegionSampler& s) {
  validate_sampler(sys, s);
  const GuardArc& arc = sys.arc(arc_index);
  const std::vector<double> times = s.times();
  const std::vector<Vec> pts = sample_guard_points(
      sys, arc_index, s.boxes[static_cast<std::size_t>(arc.from.index)],
      s.guard_samples_per_arc);

  TranslationReport rep;
  rep.arc_index = arc_index;
  const NormSpec& from_norm = sys.mode(arc.from).norm;
  const NormSpec& to_norm = sys.mode(arc.to).norm;
  rep.norms_match = from_norm == to_norm;
  rep.euclidean = rep.norms_match && from_norm.kind == NormKind::Two &&
                  !from_norm.is_weighted();

  for (const Vec& x : pts) {
    const Mat DR = sys.reset_jacobian(arc_index, x);
    if (DR.rows() != DR.cols() ||
        (DR - Mat::Identity(DR.rows(), DR.cols())).cwiseAbs().maxCoeff() >
            1e-8)
      throw NotATranslation("arc " + arc.label +
                            " reset Jacobian differs from identity at a "
                            "sampled guard point");
    for (double t : times) {
      const Vec F_pre = sys.field(arc.from, t, x);
      const Row Dg = sys.guard_gradient(arc_index, x);
      const double denom = Dg.dot(F_pre);
      if (denom >= -kEpsTransversality) {
        ++rep.skipped_non_transversal;
        continue;
      }
      const SaltationRecord rec = saltation_matrix(sys, arc_index, t, x);
      const double nv = induced_norm(rec.matrix, to_norm, from_norm).value;
      rep.min_norm = std::min(rep.min_norm, nv);
      rep.max_norm = std::max(rep.max_norm, nv);
      ++rep.samples;

      if (!rep.euclidean) continue;
      const Vec diff = rec.F_post - rec.F_pre;
      const double g2 = Dg.squaredNorm();
      const double dn = diff.norm();
      const double alpha = g2 > 0.0 ? Dg.dot(diff) / g2 : 0.0;
      const Vec residual = diff - alpha * Dg.transpose();
      const double rel =
          dn > 1e-12 * (1.0 + rec.F_pre.norm()) ? residual.norm() / dn : 0.0;
      rep.max_parallel_residual_rel =
          std::max(rep.max_parallel_residual_rel, rel);
      if (rel > 1e-6) rep.parallel_ok = false;
      rep.min_alpha = std::min(rep.min_alpha, alpha);
      rep.max_alpha = std::max(rep.max_alpha, alpha);
      const double upper = -2.0 * denom / g2;
      if (alpha < -1e-9 || alpha > upper + 1e-9 * (1.0 + std::abs(upper)))
        rep.alpha_in_interval = false;
    }
  }
  return rep;
}

struct DwellEstimate {
  double min_gap = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  long gaps = 0;
};

// Observed inter-event gaps over finished executions. Empirical: a sampled
// stand-in for true dwell bounds, which are assumptions the caller supplies,
// not facts this library can establish.
[[nodiscard]] inline DwellEstimate empirical_dwell(
    const std::vector<Execution>& execs) {
  DwellEstimate d;
  for (const Execution& e : execs) {
    for (std::size_t i = 1; i < e.events.size(); ++i) {
      const double gap = e.events[i].time - e.events[i - 1].time;
      d.min_gap = std::min(d.min_gap, gap);
      d.max_gap = std::max(d.max_gap, gap);
      ++d.gaps;
    }
  }
  return d;
}

}  // namespace hybridcontract
