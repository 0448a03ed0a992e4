#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "defkit/core.hpp"
#include "support.hpp"

#include <limits>

using namespace defkit;

TEST_CASE("field_magnitude_max") {
  CHECK(field_magnitude_max(DisplacementField(5, 7)) == 0.0);
  CHECK(field_magnitude_max(DisplacementField::constant(3, 3, 3.0, 4.0)) == doctest::Approx(5.0).epsilon(1e-15));

  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const DisplacementField df = testing::random_field(gen, 4, 4, 10.0);
    CHECK(field_magnitude_max(df) == testing::brute_max_magnitude(df));
  }
}

TEST_CASE("classify_range thresholds") {
  auto with_max = [](double m) { return classify_range(DisplacementField::constant(2, 2, m, 0.0)); };
  CHECK(with_max(0.4) == RangeBucket::VerySmall);
  CHECK(with_max(0.0) == RangeBucket::VerySmall);
  CHECK(with_max(std::nextafter(1.0, 0.0)) == RangeBucket::VerySmall);
  CHECK(with_max(1.0) == RangeBucket::Small);
  CHECK(with_max(5.0) == RangeBucket::Small);
  CHECK(with_max(std::nextafter(5.0, 6.0)) == RangeBucket::Medium);
  CHECK(with_max(7.2) == RangeBucket::Medium);
  CHECK(with_max(15.0) == RangeBucket::Medium);
  try {
    with_max(15.5);
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfRange);
  }
}

TEST_CASE("bucket names round trip") {
  for (auto b : {RangeBucket::VerySmall, RangeBucket::Small, RangeBucket::Medium}) {
    CHECK(parse_range_bucket(to_string(b)) == b);
  }
  CHECK_THROWS_AS(parse_range_bucket("huge"), Error);
}

TEST_CASE("value types reject non-finite data") {
  Grid g = Grid::Zero(2, 2);
  g(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Raster{g}, Error);
  CHECK_THROWS_AS(DisplacementField(g, Grid::Zero(2, 2)), Error);
  g(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(DisplacementField(Grid::Zero(2, 2), g), Error);
  // out-of-range intensities are allowed
  CHECK_NOTHROW(Raster(Grid::Constant(2, 2, 3.5)));
}

TEST_CASE("field component shapes must agree") {
  try {
    DisplacementField(Grid::Zero(2, 3), Grid::Zero(3, 2));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("row-major indexing") {
  Grid g(3, 4);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = static_cast<double>(i);
  const Raster r(g);
  CHECK(r(2, 1) == 2 * 4 + 1);
  CHECK(r.height() == 3);
  CHECK(r.width() == 4);
}

TEST_CASE("mask complement partitions the grid") {
  RegionMask m(4, 5);
  m(0, 0) = true;
  m(3, 4) = true;
  const RegionMask c = m.complement();
  CHECK(m.count() + c.count() == 20);
  CHECK((m.bits() && c.bits()).count() == 0);
}

TEST_CASE("field arithmetic") {
  const auto a = DisplacementField::constant(2, 2, 1.0, 2.0);
  const auto b = DisplacementField::constant(2, 2, 0.5, -1.0);
  const auto s = a + b;
  CHECK(s.u()(1, 1) == 1.5);
  CHECK(s.v()(0, 1) == 1.0);
  CHECK((a - b).u()(0, 0) == 0.5);
  CHECK((-a).v()(1, 0) == -2.0);
  CHECK((a * 3.0).u()(0, 0) == 3.0);
}

TEST_CASE("float instantiation") {
  using FieldF = BasicDisplacementField<float>;
  const auto f = FieldF::constant(2, 2, 3.0f, 4.0f);
  CHECK(field_magnitude_max(f) == doctest::Approx(5.0f));
}
