#pragma once
// Hybrid system representation: modes carrying vector fields and norms, and
// guard arcs carrying resets. An arc (j -> j') fires when its scalar guard
// function becomes nonpositive along the flow in mode j; the reset then maps
// the state into mode j'. At most one arc per ordered mode pair; the guard
// region within mode j is {x : g(x) <= 0}.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/norms.hpp"

namespace hybridcontract {

// Crossings with Dg·F >= -kEpsTransversality are treated as grazing.
inline constexpr double kEpsTransversality = 1e-8;

struct ModeId {
  int index = -1;
  friend bool operator==(ModeId a, ModeId b) { return a.index == b.index; }
  friend bool operator!=(ModeId a, ModeId b) { return a.index != b.index; }
  friend bool operator<(ModeId a, ModeId b) { return a.index < b.index; }
};

using VectorField = std::function<Vec(double, const Vec&)>;
using FieldJacobianFn = std::function<Mat(double, const Vec&)>;
using MembershipFn = std::function<bool(const Vec&)>;
using GuardFn = std::function<double(const Vec&)>;
using GuardGradientFn = std::function<Row(const Vec&)>;
using ResetFn = std::function<Vec(const Vec&)>;
using ResetJacobianFn = std::function<Mat(const Vec&)>;
// (n-1)-dimensional parameterization of the guard surface {g = 0}.
using GuardChartFn = std::function<Vec(const Vec&)>;

struct Mode {
  ModeId id;  // overwritten with the position index on construction
  int dim = 0;
  NormSpec norm;
  std::string name;
  VectorField field;
  FieldJacobianFn field_jacobian;  // optional; central differences otherwise
  MembershipFn domain_membership;  // optional; whole space otherwise
};

struct GuardArc {
  ModeId from;
  ModeId to;
  GuardFn guard_fn;
  GuardGradientFn guard_gradient;  // optional; central differences otherwise
  ResetFn reset;
  ResetJacobianFn reset_jacobian;  // optional; central differences otherwise
  GuardChartFn chart;              // optional; used by metric/certify seeding
  Vec chart_lo, chart_hi;          // seed box for chart parameters
  std::string label;
};

struct HybridState {
  ModeId mode;
  Vec x;
};

namespace detail {

[[nodiscard]] inline double fd_step(const Vec& x) {
  return 1e-6 * (1.0 + x.norm());
}

template <class F>
[[nodiscard]] Mat fd_jacobian(F&& f, const Vec& x, Eigen::Index out_dim) {
  const double h = fd_step(x);
  Mat J(out_dim, x.size());
  Vec xp = x;
  Vec xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) += h;
    xm(i) -= h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return J;
}

template <class F>
[[nodiscard]] Row fd_gradient(F&& f, const Vec& x) {
  const double h = fd_step(x);
  Row g(x.size());
  Vec xp = x;
  Vec xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return g;
}

}  // namespace detail

class HybridSystem {
 public:
  HybridSystem(std::vector<Mode> modes, std::vector<GuardArc> arcs)
      : modes_(std::move(modes)), arcs_(std::move(arcs)) {
    if (modes_.empty()) throw InvalidArgument("system needs at least one mode");
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      Mode& m = modes_[i];
      m.id = ModeId{static_cast<int>(i)};
      if (m.dim <= 0) throw InvalidArgument("mode dimension must be positive");
      if (!m.field) throw InvalidArgument("mode is missing its vector field");
      validate_norm_spec(m.norm, m.dim);
      if (m.name.empty()) m.name = "m" + std::to_string(i);
    }
    std::unordered_set<long long> seen_pairs;
    arcs_from_.assign(modes_.size(), {});
    for (std::size_t k = 0; k < arcs_.size(); ++k) {
      GuardArc& a = arcs_[k];
      check_mode(a.from);
      check_mode(a.to);
      if (!a.guard_fn || !a.reset)
        throw InvalidArgument("guard arc is missing guard_fn or reset");
      const long long key =
          static_cast<long long>(a.from.index) * 1000003 + a.to.index;
      if (!seen_pairs.insert(key).second)
        throw InvalidArgument("duplicate guard arc for mode pair " +
                              mode(a.from).name + " -> " + mode(a.to).name);
      if (a.chart && a.chart_lo.size() != a.chart_hi.size())
        throw InvalidArgument("chart seed box bounds have unequal sizes");
      if (a.label.empty())
        a.label = mode(a.from).name + "->" + mode(a.to).name;
      arcs_from_[a.from.index].push_back(static_cast<int>(k));
    }
  }

  [[nodiscard]] int n_modes() const { return static_cast<int>(modes_.size()); }
  [[nodiscard]] int n_arcs() const { return static_cast<int>(arcs_.size()); }
  [[nodiscard]] const std::vector<Mode>& modes() const { return modes_; }
  [[nodiscard]] const std::vector<GuardArc>& arcs() const { return arcs_; }

  [[nodiscard]] const Mode& mode(ModeId j) const {
    check_mode(j);
    return modes_[j.index];
  }

  [[nodiscard]] const GuardArc& arc(int i) const {
    if (i < 0 || i >= static_cast<int>(arcs_.size()))
      throw InvalidArgument("arc index out of range");
    return arcs_[static_cast<std::size_t>(i)];
  }

  [[nodiscard]] const std::vector<int>& arcs_from(ModeId j) const {
    check_mode(j);
    return arcs_from_[j.index];
  }

  [[nodiscard]] std::optional<int> find_arc(ModeId from, ModeId to) const {
    check_mode(from);
    for (int k : arcs_from_[from.index])
      if (arcs_[k].to == to) return k;
    return std::nullopt;
  }

  [[nodiscard]] std::optional<ModeId> mode_by_name(
      const std::string& name) const {
    for (const Mode& m : modes_)
      if (m.name == name) return m.id;
    return std::nullopt;
  }

  [[nodiscard]] Vec field(ModeId j, double t, const Vec& x) const {
    const Mode& m = mode(j);
    check_dim(m, x);
    Vec f = m.field(t, x);
    if (f.size() != m.dim)
      throw DimensionMismatch("vector field output has wrong dimension");
    return f;
  }

  [[nodiscard]] Mat field_jacobian(ModeId j, double t, const Vec& x) const {
    const Mode& m = mode(j);
    check_dim(m, x);
    if (m.field_jacobian) return m.field_jacobian(t, x);
    return detail::fd_jacobian([&](const Vec& y) { return m.field(t, y); }, x,
                               m.dim);
  }

  [[nodiscard]] double guard(int arc_index, const Vec& x) const {
    return arc(arc_index).guard_fn(x);
  }

  [[nodiscard]] Row guard_gradient(int arc_index, const Vec& x) const {
    const GuardArc& a = arc(arc_index);
    if (a.guard_gradient) return a.guard_gradient(x);
    return detail::fd_gradient(a.guard_fn, x);
  }

  [[nodiscard]] Vec reset(int arc_index, const Vec& x) const {
    const GuardArc& a = arc(arc_index);
    Vec y = a.reset(x);
    if (y.size() != mode(a.to).dim)
      throw DimensionMismatch("reset output has wrong dimension");
    return y;
  }

  [[nodiscard]] Mat reset_jacobian(int arc_index, const Vec& x) const {
    const GuardArc& a = arc(arc_index);
    if (a.reset_jacobian) return a.reset_jacobian(x);
    return detail::fd_jacobian(a.reset, x, mode(a.to).dim);
  }

  // True when the mode has no membership predicate.
  [[nodiscard]] bool member(ModeId j, const Vec& x) const {
    const Mode& m = mode(j);
    return m.domain_membership ? m.domain_membership(x) : true;
  }

 private:
  void check_mode(ModeId j) const {
    if (j.index < 0 || j.index >= static_cast<int>(modes_.size()))
      throw InvalidArgument("mode id out of range: " +
                            std::to_string(j.index));
  }

  static void check_dim(const Mode& m, const Vec& x) {
    if (x.size() != m.dim)
      throw DimensionMismatch("state dimension " + std::to_string(x.size()) +
                              " does not match mode " + m.name + " (dim " +
                              std::to_string(m.dim) + ")");
  }

  std::vector<Mode> modes_;
  std::vector<GuardArc> arcs_;
  std::vector<std::vector<int>> arcs_from_;
};

[[nodiscard]] inline Vec eval_field(const HybridSystem& sys, double t,
                                    const HybridState& state) {
  return sys.field(state.mode, t, state.x);
}

// Dg·F in the arc's source mode; negative means the flow pushes the guard
// value down (a genuine crossing direction).
[[nodiscard]] inline double transversality(const HybridSystem& sys,
                                           int arc_index, double t,
                                           const Vec& x) {
  const GuardArc& a = sys.arc(arc_index);
  return sys.guard_gradient(arc_index, x).dot(sys.field(a.from, t, x));
}

}  // namespace hybridcontract
