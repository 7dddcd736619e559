#pragma once

// Built-in systems: a two-mode diagonal linear system split at x1 = 1, a
// planar piecewise-rotation with coordinate-scaling resets, and a two-link
// traffic network with capacity-drop hysteresis. Fields, Jacobians, guard
// gradients, resets, and guard charts are all closed-form.

#include <cmath>
#include <string>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/norms.hpp"
#include "hybridcontract/sampling.hpp"

namespace hybridcontract {

// ---------------------------------------------------------------------------
// Two diagonal stable linear modes on the positive orthant, switching at the
// line x1 = 1 with identity reset. Mode L owns x1 < 1, mode R owns x1 > 1.

struct Example1Params {
  double a_L = 1.0;
  double b_L = 1.0;
  double a_R = 2.0;
  double b_R = 1.0;
};

inline void validate(const Example1Params& p) {
  if (!(p.a_L > 0.0 && p.b_L > 0.0 && p.a_R > 0.0 && p.b_R > 0.0))
    throw InvalidArgument("example1 rates must be strictly positive");
}

[[nodiscard]] inline HybridSystem build_example1(const Example1Params& p = {}) {
  validate(p);
  auto orthant = [](const Vec& x) { return x(0) >= 0.0 && x(1) >= 0.0; };
  auto linear_mode = [&](std::string name, double a, double b) {
    Mode m;
    m.name = std::move(name);
    m.dim = 2;
    m.norm = NormSpec::two();
    m.field = [a, b](double, const Vec& x) {
      Vec f(2);
      f << -a * x(0), -b * x(1);
      return f;
    };
    m.field_jacobian = [a, b](double, const Vec&) {
      Mat J(2, 2);
      J << -a, 0.0, 0.0, -b;
      return J;
    };
    m.domain_membership = orthant;
    return m;
  };

  auto line_chart = [](const Vec& th) {
    Vec x(2);
    x << 1.0, th(0);
    return x;
  };
  Vec chart_lo(1), chart_hi(1);
  chart_lo << 0.0;
  chart_hi << 10.0;

  GuardArc r_to_l;
  r_to_l.from = ModeId{1};
  r_to_l.to = ModeId{0};
  r_to_l.label = "R->L";
  r_to_l.guard_fn = [](const Vec& x) { return x(0) - 1.0; };
  r_to_l.guard_gradient = [](const Vec&) {
    Row g(2);
    g << 1.0, 0.0;
    return g;
  };
  r_to_l.reset = [](const Vec& x) { return x; };
  r_to_l.reset_jacobian = [](const Vec&) { return Mat::Identity(2, 2); };
  r_to_l.chart = line_chart;
  r_to_l.chart_lo = chart_lo;
  r_to_l.chart_hi = chart_hi;

  GuardArc l_to_r = r_to_l;
  l_to_r.from = ModeId{0};
  l_to_r.to = ModeId{1};
  l_to_r.label = "L->R";
  l_to_r.guard_fn = [](const Vec& x) { return 1.0 - x(0); };
  l_to_r.guard_gradient = [](const Vec&) {
    Row g(2);
    g << -1.0, 0.0;
    return g;
  };

  return HybridSystem({linear_mode("L", p.a_L, p.b_L),
                       linear_mode("R", p.a_R, p.b_R)},
                      {r_to_l, l_to_r});
}

[[nodiscard]] inline RegionSampler example1_sampler() {
  RegionSampler s;
  Vec lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << 3.0, 3.0;
  s.boxes = {Box{lo, hi}, Box{lo, hi}};
  return s;  // autonomous: t = 0 only
}

// ---------------------------------------------------------------------------
// Planar rotation alpha +/- i beta in each half-plane; crossing x1 = 0
// rescales x2 by c. The crossing set of the plus mode is the upper half of
// the axis, of the minus mode the lower half; transversality enforces this
// (Dg.F = -beta x2 resp. +beta x2), so charts cover only the valid half.

struct PlanarPwlParams {
  double alpha_plus = 0.0;
  double alpha_minus = 0.0;
  double beta_plus = 1.0;
  double beta_minus = 1.0;
  double c_plus = 1.0;
  double c_minus = 1.0;
};

inline void validate(const PlanarPwlParams& p) {
  if (!(p.beta_plus > 0.0 && p.beta_minus > 0.0))
    throw InvalidArgument("pwl rotation rates beta must be strictly positive");
  if (!(p.c_plus > 0.0 && p.c_minus > 0.0))
    throw InvalidArgument("pwl reset scales c must be strictly positive");
}

[[nodiscard]] inline HybridSystem build_planar_pwl(
    const PlanarPwlParams& p = {}) {
  validate(p);
  auto rotation_mode = [](std::string name, double alpha, double beta,
                          bool plus) {
    Mode m;
    m.name = std::move(name);
    m.dim = 2;
    m.norm = NormSpec::two();
    m.field = [alpha, beta](double, const Vec& x) {
      Vec f(2);
      f << alpha * x(0) - beta * x(1), beta * x(0) + alpha * x(1);
      return f;
    };
    m.field_jacobian = [alpha, beta](double, const Vec&) {
      Mat J(2, 2);
      J << alpha, -beta, beta, alpha;
      return J;
    };
    m.domain_membership = [plus](const Vec& x) {
      return plus ? x(0) >= 0.0 : x(0) <= 0.0;
    };
    return m;
  };

  auto scaling_reset = [](double c) {
    GuardArc a;
    a.reset = [c](const Vec& x) {
      Vec y(2);
      y << x(0), c * x(1);
      return y;
    };
    a.reset_jacobian = [c](const Vec&) {
      Mat J(2, 2);
      J << 1.0, 0.0, 0.0, c;
      return J;
    };
    a.chart = [](const Vec& th) {
      Vec x(2);
      x << 0.0, th(0);
      return x;
    };
    return a;
  };

  GuardArc plus_to_minus = scaling_reset(p.c_plus);
  plus_to_minus.from = ModeId{0};
  plus_to_minus.to = ModeId{1};
  plus_to_minus.label = "plus->minus";
  plus_to_minus.guard_fn = [](const Vec& x) { return x(0); };
  plus_to_minus.guard_gradient = [](const Vec&) {
    Row g(2);
    g << 1.0, 0.0;
    return g;
  };
  plus_to_minus.chart_lo = Vec::Constant(1, 0.1);
  plus_to_minus.chart_hi = Vec::Constant(1, 10.0);

  GuardArc minus_to_plus = scaling_reset(p.c_minus);
  minus_to_plus.from = ModeId{1};
  minus_to_plus.to = ModeId{0};
  minus_to_plus.label = "minus->plus";
  minus_to_plus.guard_fn = [](const Vec& x) { return -x(0); };
  minus_to_plus.guard_gradient = [](const Vec&) {
    Row g(2);
    g << -1.0, 0.0;
    return g;
  };
  minus_to_plus.chart_lo = Vec::Constant(1, -10.0);
  minus_to_plus.chart_hi = Vec::Constant(1, -0.1);

  return HybridSystem(
      {rotation_mode("plus", p.alpha_plus, p.beta_plus, true),
       rotation_mode("minus", p.alpha_minus, p.beta_minus, false)},
      {plus_to_minus, minus_to_plus});
}

// Closed-form saltation for the half-plane crossing, derived from the
// rank-one correction with F of the arriving mode evaluated at the reset
// image (0, c x2): both columns of the correction pick up the factor c.
[[nodiscard]] inline Mat pwl_saltation_closed_form(const PlanarPwlParams& p,
                                                   bool from_plus) {
  const double a_from = from_plus ? p.alpha_plus : p.alpha_minus;
  const double a_to = from_plus ? p.alpha_minus : p.alpha_plus;
  const double b_from = from_plus ? p.beta_plus : p.beta_minus;
  const double b_to = from_plus ? p.beta_minus : p.beta_plus;
  const double c = from_plus ? p.c_plus : p.c_minus;
  Mat xi(2, 2);
  xi << c * b_to / b_from, 0.0, c * (a_from - a_to) / b_from, c;
  return xi;
}

[[nodiscard]] inline RegionSampler pwl_sampler() {
  RegionSampler s;
  Vec lo_p(2), hi_p(2), lo_m(2), hi_m(2);
  lo_p << 0.0, -3.0;
  hi_p << 3.0, 3.0;
  lo_m << -3.0, -3.0;
  hi_m << 0.0, 3.0;
  s.boxes = {Box{lo_p, hi_p}, Box{lo_m, hi_m}};
  return s;
}

// ---------------------------------------------------------------------------
// Two-link traffic with capacity drop. Densities in vehicles, time in hours.
// Modes: 0 SC (supply adequate, hysteresis off), 1 SbarC (congested), 2
// SCbar, 3 SbarCbar. Only SbarCbar -> SbarC changes the governing field;
// every reset is the identity.

struct TrafficParams {
  double cap1 = 2400.0;  // veh/h
  double scale1 = 33.0;  // veh
  double cap2 = 1900.0;
  double scale2 = 33.0;
  double supply_slope = 20.0;  // 1/h
  double x_jam = 160.0;        // veh
  double x2_bar = 60.0;        // congestion onset density
  double x2_under = 55.0;      // congestion recovery density
  double u0 = 1500.0;          // veh/h
  double u_amp = 800.0;
  double u_freq = 1.0;  // cycles/h
};

inline void validate(const TrafficParams& p) {
  if (!(p.cap1 > 0.0 && p.cap2 > 0.0 && p.scale1 > 0.0 && p.scale2 > 0.0))
    throw InvalidArgument("traffic demand parameters must be positive");
  if (!(p.supply_slope > 0.0 && p.x_jam > 0.0))
    throw InvalidArgument("traffic supply parameters must be positive");
  if (!(0.0 <= p.x2_under && p.x2_under < p.x2_bar))
    throw InvalidArgument("traffic needs 0 <= x2_under < x2_bar");
  // congestion onset must sit below the critical density Delta2 = S2
  const double d2 = p.cap2 * (1.0 - std::exp(-p.x2_bar / p.scale2));
  const double s2 = p.supply_slope * (p.x_jam - p.x2_bar);
  if (!(d2 < s2))
    throw InvalidArgument("traffic x2_bar must lie below the critical "
                          "density where demand meets supply");
}

[[nodiscard]] inline double traffic_demand1(const TrafficParams& p, double x1) {
  return p.cap1 * (1.0 - std::exp(-x1 / p.scale1));
}
[[nodiscard]] inline double traffic_demand2(const TrafficParams& p, double x2) {
  return p.cap2 * (1.0 - std::exp(-x2 / p.scale2));
}
[[nodiscard]] inline double traffic_supply2(const TrafficParams& p, double x2) {
  return p.supply_slope * (p.x_jam - x2);
}
[[nodiscard]] inline double traffic_d_demand1(const TrafficParams& p,
                                              double x1) {
  return p.cap1 / p.scale1 * std::exp(-x1 / p.scale1);
}
[[nodiscard]] inline double traffic_d_demand2(const TrafficParams& p,
                                              double x2) {
  return p.cap2 / p.scale2 * std::exp(-x2 / p.scale2);
}
[[nodiscard]] inline double traffic_input(const TrafficParams& p, double t) {
  return p.u0 + p.u_amp * std::cos(2.0 * M_PI * p.u_freq * t);
}
// Demand density achieving flow y on link 1; y must stay below cap1.
[[nodiscard]] inline double traffic_demand1_inverse(const TrafficParams& p,
                                                    double y) {
  if (!(y >= 0.0 && y < p.cap1))
    throw InvalidArgument("flow outside the invertible demand range");
  return -p.scale1 * std::log(1.0 - y / p.cap1);
}

// Jump coefficient of the capacity-drop saltation.
[[nodiscard]] inline double traffic_rho(const TrafficParams& p, double x1) {
  const double d1 = traffic_demand1(p, x1);
  return (d1 - traffic_supply2(p, p.x2_bar)) /
         (d1 - traffic_demand2(p, p.x2_bar));
}

[[nodiscard]] inline HybridSystem build_traffic(const TrafficParams& p = {}) {
  validate(p);
  const double slack = 1e-6;  // membership boundaries are inclusive

  auto uncon_field = [p](double t, const Vec& x) {
    const double d1 = traffic_demand1(p, x(0));
    Vec f(2);
    f << traffic_input(p, t) - d1, d1 - traffic_demand2(p, x(1));
    return f;
  };
  auto uncon_jac = [p](double, const Vec& x) {
    const double dd1 = traffic_d_demand1(p, x(0));
    Mat J(2, 2);
    J << -dd1, 0.0, dd1, -traffic_d_demand2(p, x(1));
    return J;
  };
  auto con_field = [p](double t, const Vec& x) {
    const double s2 = traffic_supply2(p, x(1));
    Vec f(2);
    f << traffic_input(p, t) - s2, s2 - traffic_demand2(p, x(1));
    return f;
  };
  auto con_jac = [p](double, const Vec& x) {
    Mat J(2, 2);
    J << 0.0, p.supply_slope, 0.0,
        -p.supply_slope - traffic_d_demand2(p, x(1));
    return J;
  };

  auto in_X = [p, slack](const Vec& x) {
    return x(0) >= -slack && x(1) >= -slack && x(1) <= p.x_jam + slack;
  };
  auto supply_ok = [p, slack](const Vec& x) {
    return traffic_demand1(p, x(0)) <= traffic_supply2(p, x(1)) + slack;
  };
  auto supply_short = [p, slack](const Vec& x) {
    return traffic_demand1(p, x(0)) >= traffic_supply2(p, x(1)) - slack;
  };

  auto make_mode = [&](std::string name, bool congested) {
    Mode m;
    m.name = std::move(name);
    m.dim = 2;
    m.norm = NormSpec::one();
    m.field = congested ? VectorField(con_field) : VectorField(uncon_field);
    m.field_jacobian =
        congested ? FieldJacobianFn(con_jac) : FieldJacobianFn(uncon_jac);
    return m;
  };

  Mode sc = make_mode("SC", false);
  sc.domain_membership = [=](const Vec& x) {
    return in_X(x) && supply_ok(x) && x(1) >= p.x2_under - slack;
  };
  Mode sbar_c = make_mode("SbarC", true);
  sbar_c.domain_membership = [=](const Vec& x) {
    return in_X(x) && supply_short(x) && x(1) >= p.x2_under - slack;
  };
  Mode sc_bar = make_mode("SCbar", false);
  sc_bar.domain_membership = [=](const Vec& x) {
    return in_X(x) && supply_ok(x) && x(1) <= p.x2_bar + slack;
  };
  Mode sbar_c_bar = make_mode("SbarCbar", false);
  sbar_c_bar.domain_membership = [=](const Vec& x) {
    return in_X(x) && supply_short(x) && x(1) <= p.x2_bar + slack;
  };

  const int SC = 0, SbarC = 1, SCbar = 2, SbarCbar = 3;

  auto identity_reset = [](GuardArc a) {
    a.reset = [](const Vec& x) { return x; };
    a.reset_jacobian = [](const Vec&) { return Mat::Identity(2, 2); };
    return a;
  };

  // Chart along the supply-meets-demand curve, parameterized by x2.
  auto interface_chart = [p](const Vec& th) {
    Vec x(2);
    x << traffic_demand1_inverse(p, traffic_supply2(p, th(0))), th(0);
    return x;
  };
  auto supply_minus_demand = [p](const Vec& x) {
    return traffic_supply2(p, x(1)) - traffic_demand1(p, x(0));
  };
  auto supply_minus_demand_grad = [p](const Vec& x) {
    Row g(2);
    g << -traffic_d_demand1(p, x(0)), -p.supply_slope;
    return g;
  };
  auto demand_minus_supply = [p](const Vec& x) {
    return traffic_demand1(p, x(0)) - traffic_supply2(p, x(1));
  };
  auto demand_minus_supply_grad = [p](const Vec& x) {
    Row g(2);
    g << traffic_d_demand1(p, x(0)), p.supply_slope;
    return g;
  };
  // x2 range where the interface curve stays inside the state space: the
  // supply flow must stay below cap1 for the demand inverse to exist.
  const double x2_interface_lo =
      std::max(0.0, p.x_jam - (p.cap1 * 0.995) / p.supply_slope);

  auto horizontal_chart = [](double level) {
    return GuardChartFn([level](const Vec& th) {
      Vec x(2);
      x << th(0), level;
      return x;
    });
  };

  std::vector<GuardArc> arcs;
  {
    GuardArc a;  // SC -> SbarC: supply runs out while hysteresis is on
    a.from = ModeId{SC};
    a.to = ModeId{SbarC};
    a.label = "SC->SbarC";
    a.guard_fn = supply_minus_demand;
    a.guard_gradient = supply_minus_demand_grad;
    a.chart = interface_chart;
    a.chart_lo = Vec::Constant(1, std::max(p.x2_under, x2_interface_lo));
    a.chart_hi = Vec::Constant(1, p.x_jam - 1.0);
    arcs.push_back(identity_reset(a));
  }
  {
    GuardArc a;  // SCbar -> SbarCbar
    a.from = ModeId{SCbar};
    a.to = ModeId{SbarCbar};
    a.label = "SCbar->SbarCbar";
    a.guard_fn = supply_minus_demand;
    a.guard_gradient = supply_minus_demand_grad;
    a.chart = interface_chart;
    a.chart_lo = Vec::Constant(1, std::max(x2_interface_lo, 0.0));
    a.chart_hi = Vec::Constant(1, p.x2_bar);
    arcs.push_back(identity_reset(a));
  }
  {
    GuardArc a;  // SbarC -> SC: supply recovers
    a.from = ModeId{SbarC};
    a.to = ModeId{SC};
    a.label = "SbarC->SC";
    a.guard_fn = demand_minus_supply;
    a.guard_gradient = demand_minus_supply_grad;
    a.chart = interface_chart;
    a.chart_lo = Vec::Constant(1, std::max(p.x2_under, x2_interface_lo));
    a.chart_hi = Vec::Constant(1, p.x_jam - 1.0);
    arcs.push_back(identity_reset(a));
  }
  {
    GuardArc a;  // SbarCbar -> SCbar
    a.from = ModeId{SbarCbar};
    a.to = ModeId{SCbar};
    a.label = "SbarCbar->SCbar";
    a.guard_fn = demand_minus_supply;
    a.guard_gradient = demand_minus_supply_grad;
    a.chart = interface_chart;
    a.chart_lo = Vec::Constant(1, std::max(x2_interface_lo, 0.0));
    a.chart_hi = Vec::Constant(1, p.x2_bar);
    arcs.push_back(identity_reset(a));
  }
  {
    GuardArc a;  // SCbar -> SC: hysteresis arms at the onset density
    a.from = ModeId{SCbar};
    a.to = ModeId{SC};
    a.label = "SCbar->SC";
    a.guard_fn = [p](const Vec& x) { return p.x2_bar - x(1); };
    a.guard_gradient = [](const Vec&) {
      Row g(2);
      g << 0.0, -1.0;
      return g;
    };
    a.chart = horizontal_chart(p.x2_bar);
    a.chart_lo = Vec::Constant(1, 0.0);
    a.chart_hi = Vec::Constant(1, 200.0);
    arcs.push_back(identity_reset(a));
  }
  {
    GuardArc a;  // SbarCbar -> SbarC: capacity drop, the one real jump
    a.from = ModeId{SbarCbar};
    a.to = ModeId{SbarC};
    a.label = "SbarCbar->SbarC";
    a.guard_fn = [p](const Vec& x) { return p.x2_bar - x(1); };
    a.guard_gradient = [](const Vec&) {
      Row g(2);
      g << 0.0, -1.0;
      return g;
    };
    a.chart = horizontal_chart(p.x2_bar);
    a.chart_lo = Vec::Constant(1, 0.0);
    a.chart_hi = Vec::Constant(1, 200.0);
    arcs.push_back(identity_reset(a));
  }
  {
    GuardArc a;  // SC -> SCbar: hysteresis disarms at the recovery density
    a.from = ModeId{SC};
    a.to = ModeId{SCbar};
    a.label = "SC->SCbar";
    a.guard_fn = [p](const Vec& x) { return x(1) - p.x2_under; };
    a.guard_gradient = [](const Vec&) {
      Row g(2);
      g << 0.0, 1.0;
      return g;
    };
    a.chart = horizontal_chart(p.x2_under);
    a.chart_lo = Vec::Constant(1, 0.0);
    a.chart_hi = Vec::Constant(1, 200.0);
    arcs.push_back(identity_reset(a));
  }

  return HybridSystem({sc, sbar_c, sc_bar, sbar_c_bar}, arcs);
}

[[nodiscard]] inline RegionSampler traffic_sampler(const TrafficParams& p = {}) {
  RegionSampler s;
  Vec lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << 200.0, p.x_jam;
  s.boxes.assign(4, Box{lo, hi});
  s.t_lo = 0.0;
  s.t_hi = p.u_freq > 0.0 ? 1.0 / p.u_freq : 1.0;  // one input period
  return s;
}

}  // namespace hybridcontract
