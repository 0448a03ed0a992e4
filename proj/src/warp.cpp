#include "defkit/warp.hpp"

#include "defkit/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace defkit {

Sample bilinear_sample(const Grid& grid, double x, double y) {
  const double xmax = static_cast<double>(grid.cols() - 1);
  const double ymax = static_cast<double>(grid.rows() - 1);
  Sample s;
  s.in_bounds = x >= 0.0 && x <= xmax && y >= 0.0 && y <= ymax;
  x = std::clamp(x, 0.0, xmax);
  y = std::clamp(y, 0.0, ymax);

  const auto x0 = static_cast<Eigen::Index>(std::floor(x));
  const auto y0 = static_cast<Eigen::Index>(std::floor(y));
  const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, grid.cols() - 1);
  const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, grid.rows() - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);

  const double top = (1.0 - fx) * grid(y0, x0) + fx * grid(y0, x1);
  const double bottom = (1.0 - fx) * grid(y1, x0) + fx * grid(y1, x1);
  s.value = (1.0 - fy) * top + fy * bottom;
  return s;
}

Sample bilinear_sample(const Raster& img, double x, double y) { return bilinear_sample(img.data(), x, y); }

WarpResult warp_image(const Raster& img, const DisplacementField& df) {
  require_same_shape(img, df, "warp_image");
  const Eigen::Index h = img.height();
  const Eigen::Index w = img.width();
  Grid out(h, w);
  BoolGrid valid(h, w);
  parallel_for(0, h, [&](std::ptrdiff_t r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const Sample s = bilinear_sample(img.data(), static_cast<double>(c) + df.u()(r, c),
                                       static_cast<double>(r) + df.v()(r, c));
      out(r, c) = s.value;
      valid(r, c) = s.in_bounds;
    }
  });
  return WarpResult{Raster(std::move(out)), RegionMask(std::move(valid))};
}

}  // namespace defkit
