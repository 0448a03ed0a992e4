#pragma once

#include "defkit/core.hpp"

namespace defkit {

struct Sample {
  double value = 0.0;
  bool in_bounds = true;
};

struct WarpResult {
  Raster warped;
  RegionMask validity;  // true where every bilinear neighbor was inside the source
};

/// Bilinear lookup at real coordinates (x along columns, y along rows).
/// Coordinates outside [0, W-1] x [0, H-1] are clamped to the edge and
/// reported with in_bounds = false.
Sample bilinear_sample(const Raster& img, double x, double y);

/// Same sampler over a bare grid; used for fields and masks as well.
Sample bilinear_sample(const Grid& grid, double x, double y);

/// Backward warp: out(x, y) = img(x + u(x, y), y + v(x, y)).
WarpResult warp_image(const Raster& img, const DisplacementField& df);

}  // namespace defkit
