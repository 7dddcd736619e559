// Event-detected integration: closed-form accuracy, event location, sampling,
// semigroup property, and every diagnostic exit (Zeno, slide, blowup).
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "hybridcontract/integrate.hpp"
#include "hybridcontract/models.hpp"

namespace hc = hybridcontract;
using hc::Vec;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

Vec v1(double a) {
  Vec x(1);
  x << a;
  return x;
}

// 1-D mode with constant drift `rate` (field independent of the state).
hc::Mode drift_mode(std::string name, double rate) {
  hc::Mode m;
  m.name = std::move(name);
  m.dim = 1;
  m.norm = hc::NormSpec::two();
  m.field = [rate](double, const Vec&) { return v1(rate); };
  m.field_jacobian = [](double, const Vec&) { return hc::Mat::Zero(1, 1); };
  return m;
}

hc::ModeId mode_of(const hc::HybridSystem& sys, const std::string& name) {
  return *sys.mode_by_name(name);
}

int arc_of(const hc::HybridSystem& sys, const std::string& from,
           const std::string& to) {
  return *sys.find_arc(mode_of(sys, from), mode_of(sys, to));
}

hc::GuardArc scalar_arc(int from, int to, std::string label,
                        std::function<double(const Vec&)> g,
                        std::function<Vec(const Vec&)> reset) {
  hc::GuardArc a;
  a.from = hc::ModeId{from};
  a.to = hc::ModeId{to};
  a.label = std::move(label);
  a.guard_fn = [g = std::move(g)](const Vec& x) { return g(x); };
  a.reset = std::move(reset);
  return a;
}

}  // namespace

TEST_CASE("smooth integration matches closed forms") {
  SECTION("non-normal linear decay") {
    hc::Mode m;
    m.name = "lin";
    m.dim = 2;
    m.norm = hc::NormSpec::two();
    m.field = [](double, const Vec& x) { return v2(-x(0) + 2 * x(1), -3 * x(1)); };
    m.field_jacobian = [](double, const Vec&) {
      hc::Mat J(2, 2);
      J << -1, 2, 0, -3;
      return J;
    };
    hc::HybridSystem sys({m}, {});
    auto exec = hc::flow(sys, 0.0, {hc::ModeId{0}, v2(1, 1)}, 2.0);
    // x(t) = 2 e^{-t} (1,0) - e^{-3t} (1,-1)
    const Vec exact = v2(2 * std::exp(-2.0) - std::exp(-6.0), std::exp(-6.0));
    CHECK((hc::final_state(exec).x - exact).norm() < 1e-8);
    CHECK(exec.events.empty());
    CHECK(exec.segments.size() == 1);
  }

  SECTION("time-dependent drift") {
    hc::Mode m;
    m.name = "forced";
    m.dim = 1;
    m.norm = hc::NormSpec::one();
    m.field = [](double t, const Vec&) { return v1(std::cos(t)); };
    hc::HybridSystem sys({m}, {});
    auto exec = hc::flow(sys, 0.0, {hc::ModeId{0}, v1(0.3)}, 2.0);
    CHECK(hc::final_state(exec).x(0) == Catch::Approx(0.3 + std::sin(2.0)).margin(1e-9));
  }
}

TEST_CASE("guard crossings are located to event tolerance") {
  auto sys = hc::build_example1();  // a_L=1, a_R=2, b_L=b_R=1
  auto exec = hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(2, 1)}, 2.0);

  REQUIRE(exec.events.size() == 1);
  const hc::ResetEvent& e = exec.events[0];
  const double t_star = 0.5 * std::log(2.0);  // 2 e^{-2t} = 1
  CHECK(e.time == Catch::Approx(t_star).margin(5e-9));
  CHECK(sys.mode(e.from).name == "R");
  CHECK(sys.mode(e.to).name == "L");
  CHECK(std::abs(e.guard_residual) < 1e-8);
  CHECK(e.guard_residual <= 0.0);  // located state is on the closed guard side
  CHECK(e.pre_state(0) == Catch::Approx(1.0).margin(1e-8));
  CHECK(e.pre_state(1) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-8));
  CHECK(e.transversality == Catch::Approx(-2.0).margin(1e-6));
  CHECK((e.post_state - e.pre_state).norm() == 0.0);  // identity reset

  const Vec exact_final =
      v2(std::sqrt(2.0) * std::exp(-2.0), std::exp(-2.0));
  CHECK((hc::final_state(exec).x - exact_final).norm() < 1e-7);
  CHECK(hc::event_signature(exec) == std::vector<int>{arc_of(sys, "R", "L")});
}

TEST_CASE("sampling an execution is right-continuous") {
  auto sys = hc::build_example1();
  hc::IntegratorOptions opts;
  opts.max_step = 0.02;  // keep the dense-output error below the check margin
  auto exec = hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(2, 1)}, 2.0, opts);
  REQUIRE(exec.events.size() == 1);
  const double t_star = exec.events[0].time;

  SECTION("at the endpoints and at stored knots") {
    CHECK((hc::sample(exec, 0.0).x - v2(2, 1)).norm() == 0.0);
    CHECK((hc::sample(exec, 2.0).x - hc::final_state(exec).x).norm() == 0.0);
    const auto& seg = exec.segments.front();
    REQUIRE(seg.t.size() >= 3);
    CHECK((hc::sample(exec, seg.t[1]).x - seg.x[1]).norm() == 0.0);
  }

  SECTION("the post-event segment wins at the event time") {
    auto at = hc::sample(exec, t_star);
    CHECK(sys.mode(at.mode).name == "L");
    CHECK((at.x - exec.events[0].post_state).norm() == 0.0);
    CHECK(sys.mode(hc::sample(exec, t_star - 1e-3).mode).name == "R");
  }

  SECTION("dense output tracks the exact solution between knots") {
    for (int i = 0; i <= 50; ++i) {
      const double t = 0.3 * i / 50.0;  // strictly before the event
      const Vec exact = v2(2 * std::exp(-2 * t), std::exp(-t));
      CHECK((hc::sample(exec, t).x - exact).norm() < 1e-7);
    }
  }

  SECTION("out-of-range times are rejected") {
    CHECK_THROWS_AS(hc::sample(exec, -0.1), hc::InvalidArgument);
    CHECK_THROWS_AS(hc::sample(exec, 2.1), hc::InvalidArgument);
  }
}

TEST_CASE("the flow restarted mid-execution lands on the same endpoint") {
  auto sys = hc::build_example1();
  auto exec = hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(2, 1)}, 2.0);
  const Vec full = hc::final_state(exec).x;

  SECTION("from a pre-event knot") {
    const auto& seg = exec.segments.front();
    REQUIRE(seg.t.size() >= 2);
    const double tm = seg.t[1];
    REQUIRE(tm < exec.events[0].time);
    auto tail = hc::flow(sys, tm, {seg.mode, seg.x[1]}, 2.0);
    REQUIRE(tail.events.size() == 1);
    CHECK((hc::final_state(tail).x - full).norm() < 1e-8);
  }

  SECTION("from the post-event state") {
    const hc::ResetEvent& e = exec.events[0];
    auto tail = hc::flow(sys, e.time, {e.to, e.post_state}, 2.0);
    CHECK(tail.events.empty());
    CHECK((hc::final_state(tail).x - full).norm() < 1e-9);
  }
}

TEST_CASE("tightening tolerances tightens the answer") {
  hc::Mode m;
  m.name = "forced_decay";
  m.dim = 1;
  m.norm = hc::NormSpec::one();
  m.field = [](double t, const Vec& x) { return v1(-x(0) + std::sin(t)); };
  hc::HybridSystem sys({m}, {});
  // x(t) = (x0 + 1/2) e^{-t} + (sin t - cos t)/2
  const double exact =
      1.5 * std::exp(-3.0) + 0.5 * (std::sin(3.0) - std::cos(3.0));

  hc::IntegratorOptions loose;
  loose.rel_tol = 1e-4;
  loose.abs_tol = 1e-8;
  hc::IntegratorOptions tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;

  const double err_loose = std::abs(
      hc::final_state(hc::flow(sys, 0, {hc::ModeId{0}, v1(1)}, 3, loose)).x(0) -
      exact);
  const double err_tight = std::abs(
      hc::final_state(hc::flow(sys, 0, {hc::ModeId{0}, v1(1)}, 3, tight)).x(0) -
      exact);
  CHECK(err_tight < 1e-10);
  CHECK(err_loose < 1e-2);
  CHECK(err_tight <= err_loose + 1e-14);
}

TEST_CASE("zero-dwell reset loops raise a Zeno diagnosis") {
  // Two copies of dx/dt = -1 exchanging the state identically at x = 0: the
  // post-reset state sits on the next guard moving inward, forever.
  auto arcs = {scalar_arc(0, 1, "A->B", [](const Vec& x) { return x(0); },
                          [](const Vec& x) { return x; }),
               scalar_arc(1, 0, "B->A", [](const Vec& x) { return x(0); },
                          [](const Vec& x) { return x; })};
  hc::HybridSystem sys({drift_mode("A", -1), drift_mode("B", -1)}, arcs);
  CHECK_THROWS_AS(hc::flow(sys, 0.0, {hc::ModeId{0}, v1(1)}, 3.0),
                  hc::ZenoSuspected);
}

TEST_CASE("exceeding the event budget raises a Zeno diagnosis") {
  hc::PlanarPwlParams p;
  p.alpha_plus = 0.0;
  p.alpha_minus = 0.0;
  p.beta_plus = 1.0;
  p.beta_minus = 1.0;
  p.c_plus = 1.0;
  p.c_minus = 1.0;
  auto sys = hc::build_planar_pwl(p);  // crossings every pi time units
  hc::IntegratorOptions opts;
  opts.max_events = 3;
  CHECK_THROWS_AS(
      hc::flow(sys, 0.0, {mode_of(sys, "plus"), v2(1, 0)}, 20.0, opts),
      hc::ZenoSuspected);
}

TEST_CASE("sliding into a guard region without crossing is rejected") {
  // Starting within the surface tolerance on the outside, the flow must move
  // away before the sign-change detector can arm; drifting inward instead is
  // a transversality failure, not an event.
  auto arcs = {scalar_arc(0, 1, "A->B", [](const Vec& x) { return x(0); },
                          [](const Vec& x) { return x; })};
  hc::HybridSystem sys({drift_mode("A", -1), drift_mode("B", -1)}, arcs);
  CHECK_THROWS_AS(hc::flow(sys, 0.0, {hc::ModeId{0}, v1(1e-12)}, 1.0),
                  hc::TransversalityViolation);
}

TEST_CASE("a reset image strictly inside another guard region is rejected") {
  auto arcs = {scalar_arc(0, 1, "A->B", [](const Vec& x) { return x(0); },
                          [](const Vec& x) { return v1(x(0) - 1.0); }),
               scalar_arc(1, 2, "B->C", [](const Vec& x) { return x(0) + 0.5; },
                          [](const Vec& x) { return x; })};
  hc::HybridSystem sys(
      {drift_mode("A", -1), drift_mode("B", -1), drift_mode("C", -1)}, arcs);
  CHECK_THROWS_AS(hc::flow(sys, 0.0, {hc::ModeId{0}, v1(1)}, 3.0),
                  hc::AssumptionViolation);
}

TEST_CASE("an initial state in a guard region is reset before flowing") {
  auto sys = hc::build_example1();

  SECTION("strict interior start") {
    auto exec = hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(0.5, 1)}, 2.0);
    CHECK(exec.initial_resets == std::vector<int>{arc_of(sys, "R", "L")});
    CHECK(exec.events.empty());
    REQUIRE(!exec.segments.empty());
    CHECK(sys.mode(exec.segments.front().mode).name == "L");
    const Vec exact = v2(0.5 * std::exp(-2.0), std::exp(-2.0));
    CHECK((hc::final_state(exec).x - exact).norm() < 1e-8);
  }

  SECTION("boundary start resets once, then flows") {
    auto exec = hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(1, 1)}, 2.0);
    CHECK(exec.initial_resets == std::vector<int>{arc_of(sys, "R", "L")});
    CHECK(exec.events.empty());
    CHECK(sys.mode(hc::final_state(exec).mode).name == "L");
    const Vec exact = v2(std::exp(-2.0), std::exp(-2.0));
    CHECK((hc::final_state(exec).x - exact).norm() < 1e-8);
  }

  SECTION("an unbounded initial reset chain raises a Zeno diagnosis") {
    auto arcs = {scalar_arc(0, 1, "A->B",
                            [](const Vec& x) { return x(0) - 2.0; },
                            [](const Vec& x) { return x; }),
                 scalar_arc(1, 0, "B->A",
                            [](const Vec& x) { return x(0) - 2.0; },
                            [](const Vec& x) { return x; })};
    hc::HybridSystem sys2({drift_mode("A", -1), drift_mode("B", -1)}, arcs);
    CHECK_THROWS_AS(hc::flow(sys2, 0.0, {hc::ModeId{0}, v1(0)}, 1.0),
                    hc::ZenoSuspected);
  }
}

TEST_CASE("degenerate horizons and invalid inputs") {
  auto sys = hc::build_example1();

  SECTION("t_end equal to t0 returns the initial sample") {
    auto exec = hc::flow(sys, 1.0, {mode_of(sys, "R"), v2(2, 1)}, 1.0);
    CHECK(exec.events.empty());
    REQUIRE(exec.segments.size() == 1);
    CHECK(exec.segments[0].t == std::vector<double>{1.0});
    CHECK((hc::final_state(exec).x - v2(2, 1)).norm() == 0.0);
    CHECK((hc::sample(exec, 1.0).x - v2(2, 1)).norm() == 0.0);
  }

  SECTION("t_end before t0 is rejected") {
    CHECK_THROWS_AS(hc::flow(sys, 1.0, {mode_of(sys, "R"), v2(2, 1)}, 0.5),
                    hc::InvalidArgument);
  }

  SECTION("option validation") {
    hc::IntegratorOptions bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(
        hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(2, 1)}, 1.0, bad),
        hc::InvalidArgument);
    bad = {};
    bad.event_tol = -1.0;
    CHECK_THROWS_AS(
        hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(2, 1)}, 1.0, bad),
        hc::InvalidArgument);
    bad = {};
    bad.max_events = 0;
    CHECK_THROWS_AS(
        hc::flow(sys, 0.0, {mode_of(sys, "R"), v2(2, 1)}, 1.0, bad),
        hc::InvalidArgument);
  }

  SECTION("dimension and finiteness of the initial state") {
    Vec x3(3);
    x3 << 1, 2, 3;
    CHECK_THROWS_AS(hc::flow(sys, 0.0, {mode_of(sys, "R"), x3}, 1.0),
                    hc::DimensionMismatch);
    CHECK_THROWS_AS(
        hc::flow(sys, 0.0,
                 {mode_of(sys, "R"),
                  v2(std::numeric_limits<double>::quiet_NaN(), 1)},
                 1.0),
        hc::NonFiniteState);
  }
}

TEST_CASE("finite-time blowup is reported, not silently truncated") {
  hc::Mode m;
  m.name = "blowup";
  m.dim = 1;
  m.norm = hc::NormSpec::two();
  m.field = [](double, const Vec& x) { return v1(x(0) * x(0)); };
  hc::HybridSystem sys({m}, {});
  // dx/dt = x^2 from 1 escapes at t = 1 < t_end.
  CHECK_THROWS_AS(hc::flow(sys, 0.0, {hc::ModeId{0}, v1(1)}, 2.0), hc::Error);
}
