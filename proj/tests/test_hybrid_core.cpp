#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/models.hpp"

using namespace hybridcontract;
using Catch::Approx;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

Mode simple_mode(std::string name) {
  Mode m;
  m.name = std::move(name);
  m.dim = 2;
  m.norm = NormSpec::two();
  m.field = [](double t, const Vec& x) {
    Vec f(2);
    f << std::sin(t) * x(1), x(0) * x(0) - x(1);
    return f;
  };
  return m;
}

GuardArc simple_arc(int from, int to) {
  GuardArc a;
  a.from = ModeId{from};
  a.to = ModeId{to};
  a.guard_fn = [](const Vec& x) { return x(0) - 1.0; };
  a.reset = [](const Vec& x) {
    Vec y(2);
    y << x(0), std::exp(x(1));
    return y;
  };
  return a;
}

}  // namespace

TEST_CASE("construction assigns ids, names, labels", "[core]") {
  Mode unnamed = simple_mode("");
  const HybridSystem sys({simple_mode("A"), unnamed},
                         {simple_arc(0, 1), simple_arc(1, 0)});
  CHECK(sys.n_modes() == 2);
  CHECK(sys.n_arcs() == 2);
  CHECK(sys.mode(ModeId{0}).name == "A");
  CHECK(sys.mode(ModeId{1}).name == "m1");
  CHECK(sys.arc(0).label == "A->m1");
  CHECK(sys.mode_by_name("A"));
  CHECK(sys.mode_by_name("A")->index == 0);
  CHECK_FALSE(sys.mode_by_name("Z"));
  REQUIRE(sys.find_arc(ModeId{0}, ModeId{1}));
  CHECK(*sys.find_arc(ModeId{0}, ModeId{1}) == 0);
  CHECK_FALSE(sys.find_arc(ModeId{0}, ModeId{0}));
  CHECK(sys.arcs_from(ModeId{1}) == std::vector<int>{1});
}

TEST_CASE("construction rejects malformed systems", "[core]") {
  CHECK_THROWS_AS(HybridSystem({}, {}), InvalidArgument);

  Mode bad_dim = simple_mode("A");
  bad_dim.dim = 0;
  CHECK_THROWS_AS(HybridSystem({bad_dim}, {}), InvalidArgument);

  Mode no_field = simple_mode("A");
  no_field.field = nullptr;
  CHECK_THROWS_AS(HybridSystem({no_field}, {}), InvalidArgument);

  // duplicate arc on a mode pair
  CHECK_THROWS_AS(
      HybridSystem({simple_mode("A"), simple_mode("B")},
                   {simple_arc(0, 1), simple_arc(0, 1)}),
      InvalidArgument);

  GuardArc no_reset = simple_arc(0, 1);
  no_reset.reset = nullptr;
  CHECK_THROWS_AS(HybridSystem({simple_mode("A"), simple_mode("B")},
                               {no_reset}),
                  InvalidArgument);

  GuardArc bad_chart = simple_arc(0, 1);
  bad_chart.chart = [](const Vec& th) { return th; };
  bad_chart.chart_lo = Vec::Zero(1);
  bad_chart.chart_hi = Vec::Zero(2);
  CHECK_THROWS_AS(HybridSystem({simple_mode("A"), simple_mode("B")},
                               {bad_chart}),
                  InvalidArgument);
}

TEST_CASE("finite difference fallbacks agree with analytic forms", "[core]") {
  // the example systems carry analytic Jacobians/gradients; strip them and
  // compare against the central-difference fallback
  const HybridSystem full = build_example1();
  std::vector<Mode> modes = full.modes();
  std::vector<GuardArc> arcs = full.arcs();
  for (Mode& m : modes) m.field_jacobian = nullptr;
  for (GuardArc& a : arcs) {
    a.guard_gradient = nullptr;
    a.reset_jacobian = nullptr;
  }
  const HybridSystem bare(modes, arcs);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int i = 0; i < 50; ++i) {
    const Vec x = v2(u(rng), u(rng));
    for (int m = 0; m < 2; ++m) {
      const Mat J0 = full.field_jacobian(ModeId{m}, 0.0, x);
      const Mat J1 = bare.field_jacobian(ModeId{m}, 0.0, x);
      CHECK((J0 - J1).cwiseAbs().maxCoeff() < 1e-7);
    }
    for (int a = 0; a < 2; ++a) {
      CHECK((full.guard_gradient(a, x) - bare.guard_gradient(a, x))
                .cwiseAbs()
                .maxCoeff() < 1e-7);
      CHECK((full.reset_jacobian(a, x) - bare.reset_jacobian(a, x))
                .cwiseAbs()
                .maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("dimension checks on evaluation", "[core]") {
  const HybridSystem sys = build_example1();
  Vec x3(3);
  x3.setZero();
  CHECK_THROWS_AS(sys.field(ModeId{0}, 0.0, x3), DimensionMismatch);
  CHECK_THROWS_AS(sys.mode(ModeId{5}), InvalidArgument);
  CHECK_THROWS_AS(sys.arc(9), InvalidArgument);
}

TEST_CASE("membership defaults to the whole space", "[core]") {
  const HybridSystem sys({simple_mode("A")}, {});
  CHECK(sys.member(ModeId{0}, v2(-100.0, 100.0)));
  const HybridSystem ex = build_example1();
  CHECK(ex.member(ModeId{0}, v2(0.5, 0.5)));
  CHECK_FALSE(ex.member(ModeId{0}, v2(-0.5, 0.5)));
}

TEST_CASE("transversality sign convention", "[core]") {
  const HybridSystem sys = build_example1();
  // R->L guard x1 - 1: flow of mode R points toward smaller x1
  const int r_to_l = *sys.find_arc(*sys.mode_by_name("R"),
                                   *sys.mode_by_name("L"));
  CHECK(transversality(sys, r_to_l, 0.0, v2(1.0, 1.0)) == Approx(-2.0));
  // L->R guard 1 - x1: mode L also shrinks x1, so the guard value grows
  const int l_to_r = *sys.find_arc(*sys.mode_by_name("L"),
                                   *sys.mode_by_name("R"));
  CHECK(transversality(sys, l_to_r, 0.0, v2(1.0, 1.0)) == Approx(1.0));
}

TEST_CASE("reset dimension validation", "[core]") {
  GuardArc bad = simple_arc(0, 1);
  bad.reset = [](const Vec&) { return Vec::Zero(3); };
  const HybridSystem sys({simple_mode("A"), simple_mode("B")}, {bad});
  CHECK_THROWS_AS(sys.reset(0, v2(1.0, 1.0)), DimensionMismatch);
}
