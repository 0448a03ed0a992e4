#include "defkit/estimate.hpp"

#include "defkit/parallel.hpp"
#include "defkit/warp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace defkit {

void EstimatorConfig::validate() const {
  if (patch_radius < 2) throw Error(ErrorKind::ConfigInvalid, "patch_radius must be >= 2");
  if (search_radius < 1) throw Error(ErrorKind::ConfigInvalid, "search_radius must be >= 1");
  if (grid_step < 1) throw Error(ErrorKind::ConfigInvalid, "grid_step must be >= 1");
  if (pyramid_levels < 1) throw Error(ErrorKind::ConfigInvalid, "pyramid_levels must be >= 1");
  if (!(min_correlation >= -1.0 && min_correlation <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "min_correlation must lie in [-1, 1]");
  }
}

double parabolic_peak_offset(double minus, double center, double plus) {
  const double curvature = minus - 2.0 * center + plus;
  if (!(curvature < 0.0)) return 0.0;
  return std::clamp((minus - plus) / (2.0 * curvature), -0.5, 0.5);
}

namespace {

bool window_fits(const Raster& img, Eigen::Index cx, Eigen::Index cy, Eigen::Index radius) {
  return cx - radius >= 0 && cy - radius >= 0 && cx + radius < img.width() && cy + radius < img.height();
}

}  // namespace

CorrelationSurface correlation_surface(const Raster& i1, const Raster& i2, const Eigen::Vector2i& center,
                                       const Eigen::Vector2i& search_center, int patch_radius,
                                       int search_radius) {
  const int side = 2 * search_radius + 1;
  const int patch = 2 * patch_radius + 1;
  const int sx = center.x() + search_center.x();
  const int sy = center.y() + search_center.y();
  if (!window_fits(i2, center.x(), center.y(), patch_radius) ||
      !window_fits(i1, sx, sy, patch_radius + search_radius)) {
    throw Error(ErrorKind::OutOfBounds, "match window around (" + std::to_string(center.x()) + ", " +
                                            std::to_string(center.y()) + ") leaves the raster");
  }

  const auto tmpl = i2.data().block(center.y() - patch_radius, center.x() - patch_radius, patch, patch);
  CorrelationSurface surface;
  surface.side = side;
  surface.scores.resize(side * side);
  for (int dy = -search_radius; dy <= search_radius; ++dy) {
    for (int dx = -search_radius; dx <= search_radius; ++dx) {
      const auto cand = i1.data().block(sy + dy - patch_radius, sx + dx - patch_radius, patch, patch);
      surface.scores((dy + search_radius) * side + (dx + search_radius)) = zncc(tmpl, cand);
    }
  }
  return surface;
}

PatchMatch match_patch(const Raster& i1, const Raster& i2, const Eigen::Vector2i& center,
                       const EstimatorConfig& cfg, const Eigen::Vector2i& search_center) {
  const int r = cfg.search_radius;
  const CorrelationSurface surface = correlation_surface(i1, i2, center, search_center, cfg.patch_radius, r);

  // Ties go to the smallest offset magnitude, then row-major order.
  int best_dx = 0;
  int best_dy = 0;
  double best = surface.at(0, 0);
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double s = surface.at(dx, dy);
      const int mag = dx * dx + dy * dy;
      const int best_mag = best_dx * best_dx + best_dy * best_dy;
      if (s > best || (s == best && mag < best_mag)) {
        best = s;
        best_dx = dx;
        best_dy = dy;
      }
    }
  }

  PatchMatch m;
  m.peak_score = best;
  m.offset = Eigen::Vector2d(search_center.x() + best_dx, search_center.y() + best_dy);
  if (best < cfg.min_correlation) {
    m.status = MatchStatus::LowCorrelation;
  } else if (std::abs(best_dx) == r || std::abs(best_dy) == r) {
    m.status = MatchStatus::PeakOnBorder;
  } else {
    m.status = MatchStatus::Ok;
  }
  m.valid = m.status == MatchStatus::Ok;

  // A perfect correlation already sits at the global maximum of ZNCC, so the
  // lattice offset is exact and no parabola is fitted.
  if (m.valid && cfg.subpixel == SubpixelMethod::QuadraticFit3x3 && best < 1.0 - 1e-9) {
    m.offset.x() += parabolic_peak_offset(surface.at(best_dx - 1, best_dy), best, surface.at(best_dx + 1, best_dy));
    m.offset.y() += parabolic_peak_offset(surface.at(best_dx, best_dy - 1), best, surface.at(best_dx, best_dy + 1));
  }
  return m;
}

Raster downsample2(const Raster& img) {
  const Eigen::Index h = img.height() / 2;
  const Eigen::Index w = img.width() / 2;
  Grid out(h, w);
  const Grid& in = img.data();
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      out(r, c) = 0.25 * (in(2 * r, 2 * c) + in(2 * r, 2 * c + 1) + in(2 * r + 1, 2 * c) + in(2 * r + 1, 2 * c + 1));
    }
  }
  return Raster(std::move(out));
}

namespace {

std::vector<Eigen::Index> grid_positions(Eigen::Index extent, Eigen::Index margin, Eigen::Index step) {
  std::vector<Eigen::Index> pos;
  const Eigen::Index last = extent - 1 - margin;
  for (Eigen::Index p = margin; p <= last; p += step) pos.push_back(p);
  if (pos.empty() || pos.back() != last) pos.push_back(last);
  return pos;
}

double median_of(std::vector<double>& values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Iterated median fill over the 8-neighborhood. Each pass reads the state of
// the previous pass so the result is independent of traversal order.
void fill_holes(Grid& gu, Grid& gv, GridT<bool>& known, const Grid& fallback_u, const Grid& fallback_v) {
  const Eigen::Index rows = gu.rows();
  const Eigen::Index cols = gu.cols();
  std::vector<double> nu;
  std::vector<double> nv;
  for (;;) {
    GridT<bool> next_known = known;
    Grid next_u = gu;
    Grid next_v = gv;
    bool changed = false;
    bool holes = false;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (known(r, c)) continue;
        holes = true;
        nu.clear();
        nv.clear();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const Eigen::Index rr = r + dr;
            const Eigen::Index cc = c + dc;
            if ((dr == 0 && dc == 0) || rr < 0 || cc < 0 || rr >= rows || cc >= cols || !known(rr, cc)) continue;
            nu.push_back(gu(rr, cc));
            nv.push_back(gv(rr, cc));
          }
        }
        if (nu.empty()) continue;
        next_u(r, c) = median_of(nu);
        next_v(r, c) = median_of(nv);
        next_known(r, c) = true;
        changed = true;
      }
    }
    gu = std::move(next_u);
    gv = std::move(next_v);
    known = std::move(next_known);
    if (!holes) return;
    if (!changed) break;
  }
  // Nothing valid at this level: keep the incoming prediction.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!known(r, c)) {
        gu(r, c) = fallback_u(r, c);
        gv(r, c) = fallback_v(r, c);
      }
    }
  }
}

// Bilinear densification of grid samples; constant beyond the outer nodes.
Grid densify(const Grid& g, const std::vector<Eigen::Index>& ys, const std::vector<Eigen::Index>& xs,
             Eigen::Index height, Eigen::Index width) {
  auto locate = [](const std::vector<Eigen::Index>& nodes, Eigen::Index p, std::size_t& i0, double& t) {
    if (p <= nodes.front()) {
      i0 = 0;
      t = 0.0;
      return;
    }
    if (p >= nodes.back()) {
      i0 = nodes.size() - 1;
      t = 0.0;
      return;
    }
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), p);
    i0 = static_cast<std::size_t>(it - nodes.begin()) - 1;
    t = static_cast<double>(p - nodes[i0]) / static_cast<double>(nodes[i0 + 1] - nodes[i0]);
  };

  Grid out(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    std::size_t iy = 0;
    double ty = 0.0;
    locate(ys, r, iy, ty);
    const std::size_t iy1 = std::min(iy + 1, ys.size() - 1);
    for (Eigen::Index c = 0; c < width; ++c) {
      std::size_t ix = 0;
      double tx = 0.0;
      locate(xs, c, ix, tx);
      const std::size_t ix1 = std::min(ix + 1, xs.size() - 1);
      const auto iy_ = static_cast<Eigen::Index>(iy);
      const auto iy1_ = static_cast<Eigen::Index>(iy1);
      const auto ix_ = static_cast<Eigen::Index>(ix);
      const auto ix1_ = static_cast<Eigen::Index>(ix1);
      const double top = (1.0 - tx) * g(iy_, ix_) + tx * g(iy_, ix1_);
      const double bottom = (1.0 - tx) * g(iy1_, ix_) + tx * g(iy1_, ix1_);
      out(r, c) = (1.0 - ty) * top + ty * bottom;
    }
  }
  return out;
}

// Doubles resolution and magnitude of a coarse field. Coarse pixel i covers
// fine pixels 2i and 2i+1, so fine coordinate c maps to (c - 0.5) / 2.
Grid upsample_field_component(const Grid& coarse, Eigen::Index height, Eigen::Index width) {
  Grid out(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      out(r, c) = 2.0 * bilinear_sample(coarse, (static_cast<double>(c) - 0.5) / 2.0,
                                        (static_cast<double>(r) - 0.5) / 2.0)
                            .value;
    }
  }
  return out;
}

DisplacementField estimate_level(const Raster& i1, const Raster& i2, const Grid& prior_u, const Grid& prior_v,
                                 const EstimatorConfig& cfg) {
  const Eigen::Index h = i1.height();
  const Eigen::Index w = i1.width();
  const Eigen::Index margin = cfg.patch_radius + cfg.search_radius;
  const auto xs = grid_positions(w, margin, cfg.grid_step);
  const auto ys = grid_positions(h, margin, cfg.grid_step);
  const auto gh = static_cast<Eigen::Index>(ys.size());
  const auto gw = static_cast<Eigen::Index>(xs.size());

  Grid gu(gh, gw);
  Grid gv(gh, gw);
  Grid pu(gh, gw);
  Grid pv(gh, gw);
  GridT<bool> known(gh, gw);

  parallel_for(0, gh, [&](std::ptrdiff_t gr) {
    for (Eigen::Index gc = 0; gc < gw; ++gc) {
      const Eigen::Index cx = xs[static_cast<std::size_t>(gc)];
      const Eigen::Index cy = ys[static_cast<std::size_t>(gr)];
      pu(gr, gc) = prior_u(cy, cx);
      pv(gr, gc) = prior_v(cy, cx);
      // Round the prediction and keep the search window inside I1.
      const auto sx = static_cast<int>(std::clamp<double>(std::round(prior_u(cy, cx)), static_cast<double>(margin - cx),
                                                          static_cast<double>(w - 1 - margin - cx)));
      const auto sy = static_cast<int>(std::clamp<double>(std::round(prior_v(cy, cx)), static_cast<double>(margin - cy),
                                                          static_cast<double>(h - 1 - margin - cy)));
      const PatchMatch m = match_patch(i1, i2, Eigen::Vector2i(static_cast<int>(cx), static_cast<int>(cy)), cfg,
                                       Eigen::Vector2i(sx, sy));
      // A peak on the surface border is a saturated step: the integer offset
      // is kept so later levels or refinement passes can continue from it.
      known(gr, gc) = m.status != MatchStatus::LowCorrelation;
      gu(gr, gc) = m.offset.x();
      gv(gr, gc) = m.offset.y();
    }
  });

  fill_holes(gu, gv, known, pu, pv);
  return DisplacementField(densify(gu, ys, xs, h, w), densify(gv, ys, xs, h, w));
}

}  // namespace

DisplacementField estimate_flow(const Raster& i1, const Raster& i2, const EstimatorConfig& cfg) {
  cfg.validate();
  require_same_shape(i1, i2, "estimate_flow");
  const Eigen::Index min_side = 4 * static_cast<Eigen::Index>(cfg.patch_radius);
  if (i1.height() < min_side || i1.width() < min_side) {
    throw Error(ErrorKind::ImageTooSmall, "rasters must be at least " + std::to_string(min_side) + " px per side");
  }

  // Coarser levels are only used while a full search window still fits.
  const Eigen::Index needed = 2 * (cfg.patch_radius + cfg.search_radius) + 1;
  std::vector<Raster> pyr1{i1};
  std::vector<Raster> pyr2{i2};
  while (static_cast<int>(pyr1.size()) < cfg.pyramid_levels) {
    const Raster& top = pyr1.back();
    if (top.height() / 2 < needed || top.width() / 2 < needed) break;
    pyr1.push_back(downsample2(pyr1.back()));
    pyr2.push_back(downsample2(pyr2.back()));
  }

  Grid prior_u = Grid::Zero(pyr1.back().height(), pyr1.back().width());
  Grid prior_v = prior_u;
  DisplacementField level_field;
  for (auto level = static_cast<std::ptrdiff_t>(pyr1.size()) - 1; level >= 0; --level) {
    const auto l = static_cast<std::size_t>(level);
    level_field = estimate_level(pyr1[l], pyr2[l], prior_u, prior_v, cfg);
    if (level > 0) {
      const Raster& finer = pyr1[l - 1];
      prior_u = upsample_field_component(level_field.u(), finer.height(), finer.width());
      prior_v = upsample_field_component(level_field.v(), finer.height(), finer.width());
    }
  }
  return level_field;
}

}  // namespace defkit
