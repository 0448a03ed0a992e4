#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "defkit/estimate.hpp"
#include "defkit/metrics.hpp"
#include "defkit/simulate.hpp"
#include "defkit/warp.hpp"
#include "support.hpp"

#include <numbers>

using namespace defkit;

namespace {

FaultSpec fault(double slip, double angle = 0.6, double d = 5.0, SlipSense sense = SlipSense::LeftLateral) {
  return FaultSpec{32.0, 30.0, angle, slip, d, sense};
}

RegionMask interior(Eigen::Index h, Eigen::Index w, Eigen::Index margin) {
  RegionMask m(h, w);
  m.bits().block(margin, margin, h - 2 * margin, w - 2 * margin).setConstant(true);
  return m;
}

}  // namespace

TEST_CASE("screw dislocation") {
  SUBCASE("zero slip") {
    const DisplacementField df = screw_dislocation_field(fault(0.0), 40, 50);
    CHECK(df.u().abs().maxCoeff() == 0.0);
    CHECK(df.v().abs().maxCoeff() == 0.0);
  }
  SUBCASE("far field approaches half the slip") {
    // A trace along x: the far rows sit at |delta| >= 100 d.
    const FaultSpec f{0.0, 0.0, 0.0, 8.0, 0.05, SlipSense::LeftLateral};
    const DisplacementField df = screw_dislocation_field(f, 20, 3);
    for (Eigen::Index r = 5; r < 20; ++r) {
      const double m = std::hypot(df.u()(r, 1), df.v()(r, 1));
      CHECK(m >= 0.49 * 8.0);
      CHECK(m <= 0.5 * 8.0);
    }
  }
  SUBCASE("odd across the trace") {
    const FaultSpec f{10.0, 10.0, 0.0, 3.0, 2.0, SlipSense::LeftLateral};
    const DisplacementField df = screw_dislocation_field(f, 21, 5);
    for (Eigen::Index k = 1; k <= 10; ++k) {
      CHECK(df.u()(10 + k, 2) == -df.u()(10 - k, 2));
      CHECK(df.u()(10, 2) == 0.0);
    }
  }
  SUBCASE("displacement is trace parallel and sense flips it") {
    const FaultSpec left = fault(4.0, 0.9);
    FaultSpec right = left;
    right.sense = SlipSense::RightLateral;
    const DisplacementField a = screw_dislocation_field(left, 30, 30);
    const DisplacementField b = screw_dislocation_field(right, 30, 30);
    CHECK((a.u() + b.u()).abs().maxCoeff() == 0.0);
    const double cross = (a.u() * std::sin(0.9) - a.v() * std::cos(0.9)).abs().maxCoeff();
    CHECK(cross <= 1e-12);
  }
  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(screw_dislocation_field(fault(1.0, 0.0, 0.0), 4, 4), Error);
    CHECK_THROWS_AS(screw_dislocation_field(fault(31.0), 4, 4), Error);
  }
}

TEST_CASE("ground truth assembly") {
  SimulationSpec spec;
  spec.height = 60;
  spec.width = 64;

  SUBCASE("single fault equals its screw field") {
    spec.faults = {fault(3.0)};
    const GroundTruth gt = make_ground_truth(spec);
    const DisplacementField ref = screw_dislocation_field(spec.faults[0], 60, 64);
    CHECK((gt.df.u() == ref.u()).all());
    CHECK((gt.df.v() == ref.v()).all());
  }
  SUBCASE("mirror faults of opposite sense cancel midway") {
    // Traces along x at rows 20 and 40; the equidistant line is row 30.
    spec.faults = {FaultSpec{0.0, 20.0, 0.0, 5.0, 3.0, SlipSense::LeftLateral},
                   FaultSpec{0.0, 40.0, 0.0, 5.0, 3.0, SlipSense::LeftLateral}};
    const GroundTruth gt = make_ground_truth(spec);
    CHECK(gt.df.u().row(30).abs().maxCoeff() < 1e-9);
    spec.faults[1].sense = SlipSense::RightLateral;
    spec.faults[1].y = 20.0 + 1e-9;
    CHECK(make_ground_truth(spec).df.u().abs().maxCoeff() < 1e-6);
  }
  SUBCASE("mask matches a distance scan") {
    spec.faults = {fault(2.0, 0.35), FaultSpec{10.0, 50.0, -1.1, 1.0, 4.0, SlipSense::RightLateral}};
    spec.near_fault_halfwidth = 6;
    const GroundTruth gt = make_ground_truth(spec);
    Eigen::Index count = 0;
    for (int r = 0; r < 60; ++r) {
      for (int c = 0; c < 64; ++c) {
        bool near = false;
        for (const auto& f : spec.faults) {
          const double dist = std::abs((r - f.y) * std::cos(f.angle) - (c - f.x) * std::sin(f.angle));
          near = near || dist <= 6.0;
        }
        CHECK(gt.near_fault(r, c) == near);
        count += near;
      }
    }
    CHECK(gt.near_fault.count() == count);
  }
  SUBCASE("expected bucket is enforced") {
    spec.faults = {fault(1.0)};
    spec.expected_bucket = RangeBucket::VerySmall;
    CHECK_NOTHROW(make_ground_truth(spec));
    spec.expected_bucket = RangeBucket::Medium;
    CHECK_THROWS_AS(make_ground_truth(spec), Error);
  }
  SUBCASE("fault count") {
    CHECK_THROWS_AS(make_ground_truth(spec), Error);
    spec.faults.assign(4, fault(1.0));
    CHECK_THROWS_AS(make_ground_truth(spec), Error);
    spec.faults.clear();
    spec.constant_shift = Eigen::Vector2d(1.0, 2.0);
    const GroundTruth gt = make_ground_truth(spec);
    CHECK((gt.df.u() == 1.0).all());
    CHECK((gt.df.v() == 2.0).all());
  }
}

TEST_CASE("near-fault gradients dominate the ground truth") {
  SimulationSpec spec;
  spec.faults = {FaultSpec{128.0, 128.0, 1.2, 1.8, 1.5, SlipSense::LeftLateral}};
  const GroundTruth gt = make_ground_truth(spec);
  CHECK(smoothness(gt.df, gt.near_fault) >= 10.0 * smoothness(gt.df, gt.near_fault.complement()));
  spec.faults = {FaultSpec{128.0, 128.0, 0.3, 14.0, 10.0, SlipSense::RightLateral}};
  const GroundTruth g2 = make_ground_truth(spec);
  CHECK(smoothness(g2.df, g2.near_fault) >= 10.0 * smoothness(g2.df, g2.near_fault.complement()));
}

TEST_CASE("make_texture") {
  CHECK((make_texture(40, 50, 4, 16.0, 9).data() == make_texture(40, 50, 4, 16.0, 9).data()).all());
  CHECK((make_texture(40, 50, 4, 16.0, 9).data() != make_texture(40, 50, 4, 16.0, 10).data()).any());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Raster t = make_texture(64, 64, 4, 32.0, seed);
    CHECK(t.data().minCoeff() >= 0.0);
    CHECK(t.data().maxCoeff() <= 1.0);
    CHECK(t.data().maxCoeff() - t.data().minCoeff() >= 0.5);
  }
  SUBCASE("single octave at full scale is one bilinear cell") {
    const Raster t = make_texture(33, 33, 1, 33.0, 4);
    // bilinear in x along each row: second differences vanish
    for (Eigen::Index r = 0; r < 33; r += 8)
      for (Eigen::Index c = 1; c + 1 < 33; ++c) CHECK(std::abs(t(r, c + 1) - 2 * t(r, c) + t(r, c - 1)) <= 1e-12);
    const double corners[4] = {t(0, 0), t(0, 32), t(32, 0), t(32, 32)};
    CHECK(t.data().minCoeff() >= *std::min_element(corners, corners + 4) - 1e-12);
    CHECK(t.data().maxCoeff() <= *std::max_element(corners, corners + 4) + 1e-12);
  }
  CHECK_THROWS_AS(make_texture(8, 8, 0, 4.0, 1), Error);
}

TEST_CASE("synthesize_pair") {
  SimulationSpec spec;
  spec.height = spec.width = 128;

  SUBCASE("zero slip and no perturbations") {
    spec.faults = {fault(0.0)};
    const SyntheticPair p = synthesize_pair(spec);
    CHECK((p.i1.data() == p.i2.data()).all());
  }
  SUBCASE("follows the warp convention") {
    spec.faults = {fault(4.0)};
    const SyntheticPair p = synthesize_pair(spec);
    const Raster expect = warp_image(p.i1, p.df_gt).warped;
    CHECK((p.i2.data() == expect.data()).all());
  }
  SUBCASE("constant shift closes the loop with the estimator") {
    spec.constant_shift = Eigen::Vector2d(2.0, 1.0);
    const SyntheticPair p = synthesize_pair(spec);
    const DisplacementField df = estimate_flow(p.i1, p.i2, {});
    CHECK(epe(df, p.df_gt, interior(128, 128, 16)) < 0.05);
  }
  SUBCASE("perturbations hurt the estimate") {
    spec.faults = {FaultSpec{64.0, 64.0, 1.2, 3.0, 3.0, SlipSense::LeftLateral}};
    const SyntheticPair clean = synthesize_pair(spec);
    spec.perturbations.gaussian_sigma = 0.02;
    spec.perturbations.brightness_gradient = 0.1;
    spec.perturbations.patch_changes = 2;
    spec.perturbations.vegetation_blotches = 3;
    const SyntheticPair dirty = synthesize_pair(spec);
    CHECK((clean.df_gt.u() == dirty.df_gt.u()).all());
    CHECK((clean.i1.data() == dirty.i1.data()).all());
    const double e_clean = epe(estimate_flow(clean.i1, clean.i2, {}), clean.df_gt);
    const double e_dirty = epe(estimate_flow(dirty.i1, dirty.i2, {}), dirty.df_gt);
    CHECK(e_dirty > e_clean);
  }
  SUBCASE("deterministic") {
    spec.faults = {fault(2.0)};
    spec.perturbations.gaussian_sigma = 0.05;
    spec.perturbations.patch_changes = 3;
    const SyntheticPair a = synthesize_pair(spec);
    const SyntheticPair b = synthesize_pair(spec);
    CHECK((a.i2.data() == b.i2.data()).all());
  }
}

TEST_CASE("counter-based rng") {
  CHECK(rng::uniform(1, 2, 3) == rng::uniform(1, 2, 3));
  CHECK(rng::uniform(1, 2, 3) != rng::uniform(1, 2, 4));
  double sum = 0.0;
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng::normal(5, 6, static_cast<std::uint64_t>(i));
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}
