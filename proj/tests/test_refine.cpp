#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "defkit/estimate.hpp"
#include "defkit/metrics.hpp"
#include "defkit/refine.hpp"
#include "defkit/simulate.hpp"
#include "defkit/warp.hpp"
#include "support.hpp"

using namespace defkit;

namespace {

FlowEstimator zncc_estimator(const EstimatorConfig& cfg) {
  return [cfg](const Raster& a, const Raster& b) { return estimate_flow(a, b, cfg); };
}

RegionMask interior(Eigen::Index h, Eigen::Index w, Eigen::Index margin) {
  RegionMask m(h, w);
  m.bits().block(margin, margin, h - 2 * margin, w - 2 * margin).setConstant(true);
  return m;
}

RefinementTrace constant_trace(std::initializer_list<double> values) {
  RefinementTrace t;
  DisplacementField prev(3, 4);
  for (double v : values) {
    const auto df = DisplacementField::constant(3, 4, v, v);
    t.deltas.push_back(df - prev);
    t.fields.push_back(df);
    prev = df;
  }
  return t;
}

}  // namespace

TEST_CASE("fixed point on identical images") {
  const Raster img = make_texture(96, 96, 4, 32.0, 2);
  RefinementConfig cfg;
  cfg.n = 4;
  const RefinementTrace t = iterative_refine(img, img, zncc_estimator({}), cfg);
  REQUIRE(t.fields.size() == 4);
  for (const auto& df : t.fields) {
    CHECK(df.u().abs().maxCoeff() == 0.0);
    CHECK(df.v().abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("single pass equals the estimator") {
  const Raster i1 = make_texture(96, 96, 4, 32.0, 3);
  const Raster i2 = warp_image(i1, DisplacementField::constant(96, 96, 0.7, -0.4)).warped;
  RefinementConfig cfg;
  cfg.n = 1;
  const RefinementTrace t = iterative_refine(i1, i2, zncc_estimator({}), cfg);
  const DisplacementField direct = estimate_flow(i1, i2, {});
  CHECK((t.fields[0].u() == direct.u()).all());
  CHECK((t.fields[0].v() == direct.v()).all());
}

TEST_CASE("second image is resampled by the running estimate") {
  // A recording estimator sees I2 compensated by df_{i-1}.
  const Raster i1 = make_texture(32, 32, 3, 8.0, 4);
  const Raster i2 = warp_image(i1, DisplacementField::constant(32, 32, 2.0, 1.0)).warped;
  std::vector<Raster> seen;
  FlowEstimator fake = [&](const Raster&, const Raster& b) {
    seen.push_back(b);
    return DisplacementField::constant(32, 32, 1.0, 0.5);
  };
  RefinementConfig cfg;
  cfg.n = 3;
  const RefinementTrace t = iterative_refine(i1, i2, fake, cfg);
  REQUIRE(seen.size() == 3);
  CHECK((seen[0].data() == i2.data()).all());
  CHECK((seen[1].data() == compensate_second_image(i2, t.fields[0]).data()).all());
  CHECK((seen[2].data() == compensate_second_image(i2, t.fields[1]).data()).all());
  CHECK(t.fields[2].u()(5, 5) == 3.0);
  // I2 compensated by the true field reproduces I1 where nothing was clamped.
  const Raster back = compensate_second_image(i2, DisplacementField::constant(32, 32, 2.0, 1.0));
  CHECK((back.data().block(2, 2, 28, 28) - i1.data().block(2, 2, 28, 28)).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("refinement closes a gap beyond the search radius") {
  const Raster i1 = make_texture(128, 128, 4, 32.0, 5);
  const auto gt = DisplacementField::constant(128, 128, 6.0, -3.0);
  const Raster i2 = warp_image(i1, gt).warped;
  EstimatorConfig est;
  est.search_radius = 4;
  est.pyramid_levels = 1;
  RefinementConfig cfg;
  cfg.n = 3;
  const RefinementTrace t = iterative_refine(i1, i2, zncc_estimator(est), cfg);
  CHECK(epe(t.fields[2], gt) < epe(t.fields[0], gt));

  const RegionMask inner = interior(128, 128, 20);
  CHECK(epe(t.fields[1], gt, inner) <= epe(t.fields[0], gt, inner));
}

TEST_CASE("warm start inside the search radius") {
  const Raster i1 = make_texture(128, 128, 4, 32.0, 5);
  EstimatorConfig est;
  est.search_radius = 4;
  est.pyramid_levels = 1;
  RefinementConfig cfg;
  cfg.n = 4;
  const RegionMask inner = interior(128, 128, 20);
  for (const auto& [du, dv] : {std::pair{3.0, -2.0}, std::pair{-4.0, 1.0}, std::pair{0.0, 0.0}}) {
    const auto gt = DisplacementField::constant(128, 128, du, dv);
    const RefinementTrace t = iterative_refine(i1, warp_image(i1, gt).warped, zncc_estimator(est), cfg);
    for (int i = 1; i < cfg.n; ++i) CHECK(epe(t.fields[i], gt, inner) <= epe(t.fields[i - 1], gt, inner));
  }
}

TEST_CASE("trace consistency") {
  const Raster i1 = make_texture(96, 96, 4, 32.0, 6);
  SimulationSpec spec;
  spec.height = spec.width = 96;
  spec.faults = {FaultSpec{48.0, 48.0, 0.9, 4.0, 6.0, SlipSense::LeftLateral}};
  const Raster i2 = warp_image(i1, make_ground_truth(spec).df).warped;
  RefinementConfig cfg;
  cfg.n = 4;
  const RefinementTrace t = iterative_refine(i1, i2, zncc_estimator({}), cfg);
  DisplacementField sum(96, 96);
  for (std::size_t i = 0; i < t.deltas.size(); ++i) {
    sum = sum + t.deltas[i];
    CHECK((sum.u() - t.fields[i].u()).abs().maxCoeff() <= 1e-9);
    CHECK((sum.v() - t.fields[i].v()).abs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("estimator failures carry the iteration") {
  const Raster img = make_texture(32, 32, 3, 8.0, 7);
  int calls = 0;
  FlowEstimator flaky = [&](const Raster&, const Raster&) {
    if (++calls == 2) throw std::runtime_error("boom");
    return DisplacementField(32, 32);
  };
  RefinementConfig cfg;
  try {
    iterative_refine(img, img, flaky, cfg);
    FAIL("expected EstimatorFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EstimatorFailure);
    CHECK(std::string(e.what()).find("iteration 2") != std::string::npos);
  }
  FlowEstimator wrong_shape = [](const Raster&, const Raster&) { return DisplacementField(4, 4); };
  CHECK_THROWS_AS(iterative_refine(img, img, wrong_shape, cfg), Error);
  try {
    iterative_refine(img, make_texture(16, 16, 3, 8.0, 7), wrong_shape, cfg);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("intermediate loss examples") {
  const DisplacementField gt(3, 4);
  const RefinementTrace t = constant_trace({1.0, 0.5, 0.0});
  const IntermediateLoss l = intermediate_loss(t, gt, 0.5);
  REQUIRE(l.per_iteration.size() == 3);
  CHECK(l.per_iteration[0] == 1.0);
  CHECK(l.per_iteration[1] == 0.5);
  CHECK(l.per_iteration[2] == 0.0);
  CHECK(std::abs(l.total - 0.5) <= 1e-12);

  const IntermediateLoss flat = intermediate_loss(t, gt, 1.0);
  CHECK(std::abs(flat.total - 1.5) <= 1e-12);

  const RefinementTrace single = constant_trace({0.25});
  for (double g : {0.1, 0.8, 1.0}) CHECK(intermediate_loss(single, gt, g).total == 0.25);

  CHECK_THROWS_AS(intermediate_loss(t, DisplacementField(2, 2), 0.5), Error);
}

TEST_CASE("loss is non-decreasing in gamma") {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    RefinementTrace t;
    for (int i = 0; i < 4; ++i) t.fields.push_back(testing::random_field(gen, 5, 5, 2.0));
    const DisplacementField gt = testing::random_field(gen, 5, 5, 2.0);
    double prev = -1.0;
    for (int k = 1; k <= 20; ++k) {
      const double total = intermediate_loss(t, gt, 0.05 * k).total;
      CHECK(total >= prev);
      prev = total;
    }
  }
}

TEST_CASE("refinement config bounds") {
  RefinementConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  for (int n : {0, 9}) {
    cfg = {};
    cfg.n = n;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
  for (double g : {0.0, -0.1, 1.01}) {
    cfg = {};
    cfg.gamma = g;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
  cfg = {};
  cfg.gamma = 1.0;
  cfg.n = 8;
  CHECK_NOTHROW(cfg.validate());
}
