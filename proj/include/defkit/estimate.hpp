#pragma once

#include "defkit/core.hpp"

#include <Eigen/Core>

#include <cmath>

namespace defkit {

enum class SubpixelMethod { QuadraticFit3x3, None };

struct EstimatorConfig {
  int patch_radius = 8;    // half-window
  int search_radius = 4;   // per pyramid level
  int grid_step = 4;
  int pyramid_levels = 3;
  double min_correlation = 0.5;
  SubpixelMethod subpixel = SubpixelMethod::QuadraticFit3x3;

  void validate() const;
};

/// ZNCC scores over the (2r+1)^2 integer offsets, row-major with dy outer.
struct CorrelationSurface {
  int side = 0;
  Eigen::ArrayXd scores;

  double at(int dx, int dy) const {
    const int r = side / 2;
    return scores((dy + r) * side + (dx + r));
  }
};

enum class MatchStatus { Ok, LowCorrelation, PeakOnBorder };

struct PatchMatch {
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();  // (dx, dy) in pixels
  double peak_score = 0.0;
  bool valid = false;
  MatchStatus status = MatchStatus::LowCorrelation;
};

/// Zero-normalized cross-correlation of two equally sized patches.
/// Returns 0 when either patch is flat (standard deviation < 1e-12).
template <typename A, typename B>
double zncc(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "zncc: patch sizes differ");
  }
  const auto n = static_cast<double>(a.size());
  if (a.size() < 4) throw Error(ErrorKind::TooShort, "zncc: patches need at least 4 pixels");
  const double ma = a.sum() / n;
  const double mb = b.sum() / n;
  const double saa = (a - ma).square().sum();
  const double sbb = (b - mb).square().sum();
  const double sda = std::sqrt(saa / n);
  const double sdb = std::sqrt(sbb / n);
  if (sda < 1e-12 || sdb < 1e-12) return 0.0;
  return ((a - ma) * (b - mb)).sum() / std::sqrt(saa * sbb);
}

/// Separable parabola vertex through (-1, minus), (0, center), (1, plus),
/// clamped to [-0.5, 0.5]. Returns 0 when the samples are not a proper peak.
double parabolic_peak_offset(double minus, double center, double plus);

/// Scores of the patch of I2 centered at `center` against I1 windows centered
/// at center + search_center + (dx, dy), |dx|, |dy| <= search_radius.
CorrelationSurface correlation_surface(const Raster& i1, const Raster& i2, const Eigen::Vector2i& center,
                                       const Eigen::Vector2i& search_center, int patch_radius,
                                       int search_radius);

/// Exhaustive ZNCC search around `center + search_center` followed by the
/// configured sub-pixel refinement. The returned offset includes
/// search_center. Throws OutOfBounds when the search window does not fit.
PatchMatch match_patch(const Raster& i1, const Raster& i2, const Eigen::Vector2i& center,
                       const EstimatorConfig& cfg, const Eigen::Vector2i& search_center = Eigen::Vector2i::Zero());

/// 2x2 box-filter downsampling (odd trailing row/column dropped).
Raster downsample2(const Raster& img);

/// Coarse-to-fine grid matching, densified by bilinear interpolation.
/// The result follows the library convention: I2(x, y) ~ I1(x + u, y + v).
DisplacementField estimate_flow(const Raster& i1, const Raster& i2, const EstimatorConfig& cfg);

}  // namespace defkit
