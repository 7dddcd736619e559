// Sampled contraction certificates: envelope algebra, bound computation over
// mode boxes and guard surfaces, translation-reset diagnostics, and the
// deterministic parallel reduction they all share.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hybridcontract/certify.hpp"
#include "hybridcontract/models.hpp"

namespace hc = hybridcontract;
using hc::Vec;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

hc::ModeId mode_of(const hc::HybridSystem& sys, const std::string& name) {
  return *sys.mode_by_name(name);
}

int arc_of(const hc::HybridSystem& sys, const std::string& from,
           const std::string& to) {
  return *sys.find_arc(mode_of(sys, from), mode_of(sys, to));
}

hc::Box box2(double lo, double hi) {
  Vec l(2), h(2);
  l << lo, lo;
  h << hi, hi;
  return {l, h};
}

hc::RegionSampler small_sampler(int n_modes, int per_mode = 100,
                                int per_arc = 64) {
  hc::RegionSampler s;
  for (int i = 0; i < n_modes; ++i) s.boxes.push_back(box2(0.0, 3.0));
  s.samples_per_mode = per_mode;
  s.guard_samples_per_arc = per_arc;
  return s;
}

}  // namespace

TEST_CASE("the envelope matches hand values") {
  SECTION("both dwell branches active") {
    auto cert = hc::make_certificate(0.0, 0.5, 1.0, 2.0);
    CHECK(cert.envelope(4.0) == Catch::Approx(0.25).margin(1e-12));
    CHECK(cert.envelope(0.0) == 1.0);
    CHECK(cert.envelope(-1.0) == 1.0);
  }

  SECTION("K = 1 collapses to the pure exponential, exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uc(-2.0, 2.0), ut(0.0, 10.0);
    for (int i = 0; i < 100; ++i) {
      const double c = uc(rng), t = ut(rng);
      CHECK(hc::make_certificate(c, 1.0, 0.0).envelope(t) == std::exp(c * t));
    }
  }

  SECTION("unbounded event counts") {
    // K < 1 with dwell_min = 0: arbitrarily many shrinking resets, so the
    // event branch vanishes and the flow branch alone remains.
    CHECK(hc::make_certificate(-0.5, 0.9, 0.0).envelope(2.0) ==
          Catch::Approx(std::exp(-1.0)).margin(1e-15));
    // K > 1 with dwell_min = 0: nothing limits growth.
    CHECK(std::isinf(hc::make_certificate(-0.5, 1.1, 0.0).envelope(2.0)));
  }
}

TEST_CASE("contractivity needs shrink at both dwell extremes") {
  CHECK_FALSE(hc::make_certificate(-1.0, 1.0, 0.0).contractive());
  CHECK(hc::make_certificate(-1.0, 0.5, 0.1, 3.0).contractive());
  CHECK(hc::make_certificate(0.2, 0.5, 1.0, 2.0).contractive());
  CHECK_FALSE(hc::make_certificate(0.2, 0.5, 1.0).contractive());
  CHECK(hc::make_certificate(0.0, 0.9, 1.0).contractive());
  CHECK_FALSE(hc::make_certificate(0.0, 1.0, 1.0).contractive());
}

TEST_CASE("certificate kinds and validation") {
  CHECK(hc::make_certificate(-1.0, 1.0, 0.0).kind ==
        hc::CertificateKind::Nonexpansive);
  CHECK(hc::make_certificate(-1.0, 1.5, 0.5).kind ==
        hc::CertificateKind::DwellTime);
  CHECK(hc::make_certificate(-1.0, 0.5, 0.5, 1.0, false).kind ==
        hc::CertificateKind::NotCertified);

  CHECK(std::string(hc::to_string(hc::CertificateKind::Nonexpansive)) ==
        "nonexpansive");
  CHECK(std::string(hc::to_string(hc::CertificateKind::DwellTime)) ==
        "dwell_time");
  CHECK(std::string(hc::to_string(hc::CertificateKind::NotCertified)) ==
        "not_certified");

  CHECK_THROWS_AS(hc::make_certificate(0.0, -0.1, 0.0), hc::InvalidArgument);
  CHECK_THROWS_AS(hc::make_certificate(0.0, 1.0, -1.0), hc::InvalidArgument);
  CHECK_THROWS_AS(hc::make_certificate(0.0, 1.0, 0.0, 0.0),
                  hc::InvalidArgument);
  CHECK_THROWS_AS(hc::make_certificate(0.0, 1.0, 2.0, 1.0),
                  hc::InvalidArgument);
}

TEST_CASE("the parallel max reduction is chunking-invariant") {
  const std::size_t count = 1000;
  auto fn = [](std::size_t i) -> std::optional<double> {
    if (i % 11 == 0) return std::nullopt;          // holes
    if (i % 7 == 3) return 5.0;                    // repeated global max
    return static_cast<double>(i % 5);             // repeated small values
  };
  const auto ref = hc::detail::parallel_arg_max(count, 1, fn);
  REQUIRE(ref.valid);
  CHECK(ref.value == 5.0);
  CHECK(ref.index == 3);
  for (int threads : {2, 3, 4, 7, 8}) {
    const auto got = hc::detail::parallel_arg_max(count, threads, fn);
    CHECK(got.valid);
    CHECK(got.value == ref.value);
    CHECK(got.index == ref.index);
  }

  CHECK_FALSE(hc::detail::parallel_arg_max(0, 4, fn).valid);
  const auto none = hc::detail::parallel_arg_max(
      50, 4, [](std::size_t) -> std::optional<double> { return std::nullopt; });
  CHECK_FALSE(none.valid);
}

TEST_CASE("the measure bound recovers state-independent decay rates") {
  SECTION("two-rate diagonal fields") {
    auto sys = hc::build_example1();
    auto b = hc::bound_flow_measure(sys, small_sampler(2));
    CHECK(b.c == Catch::Approx(-1.0).margin(1e-12));
    REQUIRE(b.witness);
    CHECK(b.witness->value == b.c);
    CHECK(b.samples_evaluated == 200);
  }

  SECTION("rotation fields expose the real part") {
    hc::PlanarPwlParams p;
    p.alpha_plus = -0.2;
    p.alpha_minus = 0.3;
    auto sys = hc::build_planar_pwl(p);
    auto s = small_sampler(2);
    s.boxes = {box2(0.0, 3.0), box2(-3.0, 0.0)};
    // box corners avoid guard surfaces; membership needs the half-planes
    s.boxes[0].lo << 0.01, -3.0;
    s.boxes[0].hi << 3.0, 3.0;
    s.boxes[1].lo << -3.0, -3.0;
    s.boxes[1].hi << -0.01, 3.0;
    auto b = hc::bound_flow_measure(sys, s);
    CHECK(b.c == Catch::Approx(0.3).margin(1e-12));
  }
}

TEST_CASE("the measure bound grows with the sample prefix") {
  hc::Mode m;
  m.name = "cubic";
  m.dim = 1;
  m.norm = hc::NormSpec::two();
  m.field = [](double, const Vec& x) {
    Vec f(1);
    f << -x(0) * x(0) * x(0);
    return f;
  };
  m.field_jacobian = [](double, const Vec& x) {
    hc::Mat J(1, 1);
    J << -3.0 * x(0) * x(0);
    return J;
  };
  hc::HybridSystem sys({m}, {});

  hc::RegionSampler s;
  Vec lo(1), hi(1);
  lo << 0.5;
  hi << 1.5;
  s.boxes = {hc::Box{lo, hi}};

  s.samples_per_mode = 50;
  const double c50 = hc::bound_flow_measure(sys, s).c;
  s.samples_per_mode = 400;
  const double c400 = hc::bound_flow_measure(sys, s).c;

  CHECK(c400 >= c50);            // prefix-stable sampling never loses the max
  CHECK(c400 <= -0.75 + 1e-12);  // sup over the box is -3 (0.5)^2
  CHECK(c400 > -0.76);
}

TEST_CASE("the saltation bound skips non-transversal arcs") {
  auto sys = hc::build_example1();
  auto s = small_sampler(2);
  auto b = hc::bound_saltation_norm(sys, s);

  // The L field points away from the L->R surface, so that whole arc is
  // skipped; the R->L factor diag(1/2, 1) has unit spectral norm.
  CHECK(b.K == Catch::Approx(1.0).margin(1e-12));
  CHECK(b.exact);
  REQUIRE(b.witness);
  CHECK(b.witness->arc_index == arc_of(sys, "R", "L"));
  CHECK(b.skipped_non_transversal == 64);
  CHECK(b.samples_evaluated == 128);
}

TEST_CASE("the saltation bound matches the closed-form factors") {
  hc::PlanarPwlParams p;
  p.alpha_plus = -0.2;
  p.alpha_minus = 0.3;
  p.beta_plus = 2.0;
  p.beta_minus = 1.0;
  p.c_plus = 0.8;
  p.c_minus = 1.7;
  auto sys = hc::build_planar_pwl(p);
  auto s = small_sampler(2);
  s.boxes[0].lo << 0.0, -3.0;
  s.boxes[1].hi << 0.0, 3.0;
  s.boxes[1].lo << -3.0, -3.0;
  auto b = hc::bound_saltation_norm(sys, s);

  const double expect = std::max(
      hc::induced_norm(hc::pwl_saltation_closed_form(p, true),
                       hc::NormSpec::two(), hc::NormSpec::two())
          .value,
      hc::induced_norm(hc::pwl_saltation_closed_form(p, false),
                       hc::NormSpec::two(), hc::NormSpec::two())
          .value);
  CHECK(b.K == Catch::Approx(expect).margin(1e-9));
  CHECK(b.exact);
}

TEST_CASE("the saltation bound defaults to 1 with nothing to bound") {
  hc::Mode m;
  m.name = "only";
  m.dim = 2;
  m.norm = hc::NormSpec::two();
  m.field = [](double, const Vec& x) { return Vec(-x); };
  m.field_jacobian = [](double, const Vec&) {
    return hc::Mat(-hc::Mat::Identity(2, 2));
  };
  hc::HybridSystem sys({m}, {});
  auto b = hc::bound_saltation_norm(sys, small_sampler(1));
  CHECK(b.K == 1.0);
  CHECK_FALSE(b.witness);
  CHECK(b.samples_evaluated == 0);
  CHECK(b.arc_notes.empty());
}

TEST_CASE("translation-reset diagnostics") {
  SECTION("matched rates give exactly unit norm and a normal field jump") {
    auto sys = hc::build_example1();  // identity resets, b_L == b_R
    auto rep =
        hc::check_translation_reset(sys, arc_of(sys, "R", "L"),
                                    small_sampler(2));
    CHECK(rep.norms_match);
    CHECK(rep.euclidean);
    CHECK(rep.samples == 64);
    CHECK(rep.min_norm == Catch::Approx(1.0).margin(1e-9));
    CHECK(rep.max_norm == Catch::Approx(1.0).margin(1e-9));
    CHECK(rep.parallel_ok);
    CHECK(rep.max_parallel_residual_rel < 1e-9);
    CHECK(rep.alpha_in_interval);
    // field jump ((a_R-a_L) x1, 0) on x1 = 1 against gradient (1, 0)
    CHECK(rep.min_alpha == Catch::Approx(1.0).margin(1e-9));
    CHECK(rep.max_alpha == Catch::Approx(1.0).margin(1e-9));
  }

  SECTION("mismatched rates break parallelism and expand the norm") {
    hc::Example1Params p;
    p.b_R = 1.5;
    auto sys = hc::build_example1(p);
    auto rep =
        hc::check_translation_reset(sys, arc_of(sys, "R", "L"),
                                    small_sampler(2));
    CHECK_FALSE(rep.parallel_ok);
    CHECK(rep.max_parallel_residual_rel > 1e-3);
    CHECK(rep.max_norm > 1.0 + 1e-6);
    CHECK(rep.min_norm >= 1.0 - 1e-9);
  }

  SECTION("a rescaling reset is not a translation") {
    hc::PlanarPwlParams p;
    p.c_plus = 0.8;
    auto sys = hc::build_planar_pwl(p);
    auto s = small_sampler(2);
    s.boxes[0].lo << 0.0, -3.0;
    s.boxes[1].hi << 0.0, 3.0;
    s.boxes[1].lo << -3.0, -3.0;
    CHECK_THROWS_AS(
        hc::check_translation_reset(sys, arc_of(sys, "plus", "minus"), s),
        hc::NotATranslation);
  }

  SECTION("a fully non-transversal arc yields no samples") {
    auto sys = hc::build_example1();
    auto rep = hc::check_translation_reset(sys, arc_of(sys, "L", "R"),
                                           small_sampler(2));
    CHECK(rep.samples == 0);
    CHECK(rep.skipped_non_transversal == 64);
  }
}

TEST_CASE("empirical dwell gaps") {
  hc::PlanarPwlParams p;  // pure rotation, crossings every pi
  auto sys = hc::build_planar_pwl(p);
  auto exec = hc::flow(sys, 0.0, {mode_of(sys, "plus"), v2(1, 0)}, 9.0);
  REQUIRE(exec.events.size() == 3);
  auto d = hc::empirical_dwell({exec});
  CHECK(d.gaps == 2);
  CHECK(d.min_gap == Catch::Approx(M_PI).margin(1e-6));
  CHECK(d.max_gap == Catch::Approx(M_PI).margin(1e-6));
}

TEST_CASE("the envelope check accepts a true certificate, flags a false one") {
  auto sys = hc::build_example1();
  const auto R = mode_of(sys, "R");
  std::vector<std::pair<hc::HybridState, hc::HybridState>> pairs{
      {{R, v2(2, 1)}, {R, v2(2.2, 0.9)}}};
  const std::vector<double> grid{0.0, 0.2, 1.0, 2.0};

  auto good = hc::make_certificate(-1.0, 1.0, 0.0);
  auto rep = hc::check_envelope(sys, good, pairs, grid);
  CHECK(rep.all_pass);
  REQUIRE(rep.pairs.size() == 1);
  CHECK(rep.pairs[0].d0 == Catch::Approx(std::sqrt(0.05)).margin(1e-12));
  CHECK(rep.pairs[0].series.size() == 4);
  CHECK(rep.pairs[0].max_ratio <= 1.0 + 1e-3);

  auto wrong = hc::make_certificate(-3.0, 1.0, 0.0);  // decay claim too fast
  auto rep2 = hc::check_envelope(sys, wrong, pairs, grid);
  CHECK_FALSE(rep2.all_pass);
  CHECK(rep2.pairs[0].max_ratio > 1.5);
  CHECK(rep2.pairs[0].possibly_estimator_slack);

  SECTION("identified states pass trivially") {
    std::vector<std::pair<hc::HybridState, hc::HybridState>> same{
        {{R, v2(2, 1)}, {R, v2(2, 1)}}};
    auto rep3 = hc::check_envelope(sys, good, same, grid);
    CHECK(rep3.all_pass);
    CHECK(rep3.pairs[0].d0 <= 1e-15);
  }
}
