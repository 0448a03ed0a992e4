#include "defkit/simulate.hpp"

#include "defkit/parallel.hpp"
#include "defkit/warp.hpp"

#include <cmath>
#include <numbers>

namespace defkit {

const char* to_string(SlipSense sense) {
  return sense == SlipSense::LeftLateral ? "left_lateral" : "right_lateral";
}

SlipSense parse_slip_sense(const std::string& name) {
  if (name == "left_lateral") return SlipSense::LeftLateral;
  if (name == "right_lateral") return SlipSense::RightLateral;
  throw Error(ErrorKind::ConfigInvalid, "unknown slip sense '" + name + "'");
}

void FaultSpec::validate() const {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(angle)) {
    throw Error(ErrorKind::ConfigInvalid, "fault trace must be finite");
  }
  if (!(locking_depth > 0.0)) throw Error(ErrorKind::ConfigInvalid, "locking_depth must be > 0");
  if (!(std::abs(slip) <= 30.0)) throw Error(ErrorKind::ConfigInvalid, "|slip| must be <= 30 px");
}

double FaultSpec::signed_distance(double px, double py) const {
  return -(px - x) * std::sin(angle) + (py - y) * std::cos(angle);
}

void SimulationSpec::validate() const {
  if (height < 1 || width < 1) throw Error(ErrorKind::ConfigInvalid, "height and width must be >= 1");
  if (faults.size() > 3 || (faults.empty() && !constant_shift)) {
    throw Error(ErrorKind::ConfigInvalid, "a simulation needs 1 to 3 faults");
  }
  for (const auto& f : faults) f.validate();
  if (texture.octaves < 1) throw Error(ErrorKind::ConfigInvalid, "texture octaves must be >= 1");
  if (!(texture.base_scale > 0.0)) throw Error(ErrorKind::ConfigInvalid, "texture base_scale must be > 0");
  const auto& p = perturbations;
  if (!(p.gaussian_sigma >= 0.0) || p.patch_changes < 0 || p.patch_size < 1 || p.vegetation_blotches < 0 ||
      !(p.blotch_size > 0.0) || !std::isfinite(p.brightness_gradient) || !std::isfinite(p.blotch_amplitude)) {
    throw Error(ErrorKind::ConfigInvalid, "invalid perturbation parameters");
  }
  if (near_fault_halfwidth < 1) throw Error(ErrorKind::ConfigInvalid, "near_fault_halfwidth must be >= 1");
  if (constant_shift && !constant_shift->allFinite()) {
    throw Error(ErrorKind::ConfigInvalid, "constant_shift must be finite");
  }
}

namespace rng {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t h = mix(mix(mix(seed) ^ stream) ^ index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = 1.0 - uniform(seed, stream, 2 * index);  // (0, 1]
  const double u2 = uniform(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

DisplacementField screw_dislocation_field(const FaultSpec& spec, Eigen::Index height, Eigen::Index width) {
  spec.validate();
  const double sign = spec.sense == SlipSense::LeftLateral ? 1.0 : -1.0;
  const double tx = std::cos(spec.angle);
  const double ty = std::sin(spec.angle);
  Grid u(height, width);
  Grid v(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const double delta = spec.signed_distance(static_cast<double>(c), static_cast<double>(r));
      const double m = sign * (spec.slip / std::numbers::pi) * std::atan(delta / spec.locking_depth);
      u(r, c) = m * tx;
      v(r, c) = m * ty;
    }
  }
  return DisplacementField(std::move(u), std::move(v));
}

RegionMask fault_zone_mask(const FaultSpec& spec, Eigen::Index height, Eigen::Index width, double halfwidth) {
  RegionMask mask(height, width, false);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      mask(r, c) = std::abs(spec.signed_distance(static_cast<double>(c), static_cast<double>(r))) <= halfwidth;
    }
  }
  return mask;
}

GroundTruth make_ground_truth(const SimulationSpec& spec) {
  spec.validate();
  GroundTruth gt{DisplacementField(spec.height, spec.width), RegionMask(spec.height, spec.width, false)};
  for (const auto& f : spec.faults) {
    gt.df = gt.df + screw_dislocation_field(f, spec.height, spec.width);
    gt.near_fault = RegionMask(BoolGrid(gt.near_fault.bits() ||
                                        fault_zone_mask(f, spec.height, spec.width, spec.near_fault_halfwidth).bits()));
  }
  if (spec.constant_shift) {
    gt.df = DisplacementField::constant(spec.height, spec.width, spec.constant_shift->x(), spec.constant_shift->y());
  }
  if (spec.expected_bucket) {
    const RangeBucket got = classify_range(gt.df);
    if (got != *spec.expected_bucket) {
      throw Error(ErrorKind::ConfigInvalid, std::string("ground truth falls in bucket ") + to_string(got) +
                                                ", expected " + to_string(*spec.expected_bucket));
    }
  }
  return gt;
}

Raster make_texture(Eigen::Index height, Eigen::Index width, int octaves, double base_scale, std::uint64_t seed) {
  if (octaves < 1) throw Error(ErrorKind::ConfigInvalid, "octaves must be >= 1");
  if (!(base_scale > 0.0)) throw Error(ErrorKind::ConfigInvalid, "base_scale must be > 0");
  Grid acc = Grid::Zero(height, width);
  double amplitude = 1.0;
  for (int o = 0; o < octaves; ++o) {
    const double scale = std::max(1.0, base_scale / std::ldexp(1.0, o));
    const auto nx = static_cast<Eigen::Index>(std::floor(static_cast<double>(width - 1) / scale)) + 2;
    const auto ny = static_cast<Eigen::Index>(std::floor(static_cast<double>(height - 1) / scale)) + 2;
    Grid lattice(ny, nx);
    for (Eigen::Index j = 0; j < ny; ++j) {
      for (Eigen::Index i = 0; i < nx; ++i) {
        lattice(j, i) = rng::uniform(seed, static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(j * nx + i));
      }
    }
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        acc(r, c) += amplitude *
                     bilinear_sample(lattice, static_cast<double>(c) / scale, static_cast<double>(r) / scale).value;
      }
    }
    amplitude *= 0.5;
  }
  const double lo = acc.minCoeff();
  const double hi = acc.maxCoeff();
  if (hi - lo <= 0.0) return Raster(Grid::Zero(height, width));
  return Raster(Grid((acc - lo) / (hi - lo)));
}

namespace {

// Stream identifiers for the perturbation RNG.
constexpr std::uint64_t kPatchStream = 0x100;
constexpr std::uint64_t kBlotchStream = 0x200;
constexpr std::uint64_t kGradientStream = 0x300;
constexpr std::uint64_t kNoiseStream = 0x400;

void apply_perturbations(Grid& img, const SimulationSpec& spec) {
  const auto& p = spec.perturbations;
  const std::uint64_t seed = spec.texture.seed;
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();

  if (p.patch_changes > 0) {
    const Raster fresh = make_texture(h, w, spec.texture.octaves, spec.texture.base_scale, rng::mix(seed ^ 0x5eedULL));
    for (int i = 0; i < p.patch_changes; ++i) {
      const auto k = static_cast<std::uint64_t>(i);
      const auto side = std::min<Eigen::Index>(p.patch_size, std::min(h, w));
      const auto r0 = static_cast<Eigen::Index>(rng::uniform(seed, kPatchStream, 2 * k) * static_cast<double>(h - side + 1));
      const auto c0 = static_cast<Eigen::Index>(rng::uniform(seed, kPatchStream, 2 * k + 1) * static_cast<double>(w - side + 1));
      img.block(r0, c0, side, side) = fresh.data().block(r0, c0, side, side);
    }
  }

  for (int i = 0; i < p.vegetation_blotches; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    const double cy = rng::uniform(seed, kBlotchStream, 3 * k) * static_cast<double>(h - 1);
    const double cx = rng::uniform(seed, kBlotchStream, 3 * k + 1) * static_cast<double>(w - 1);
    const double amp = (2.0 * rng::uniform(seed, kBlotchStream, 3 * k + 2) - 1.0) * p.blotch_amplitude;
    const double inv = 1.0 / (2.0 * p.blotch_size * p.blotch_size);
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const double dy = static_cast<double>(r) - cy;
        const double dx = static_cast<double>(c) - cx;
        img(r, c) += amp * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }

  if (p.brightness_gradient != 0.0) {
    const double theta = 2.0 * std::numbers::pi * rng::uniform(seed, kGradientStream, 0);
    const double gx = std::cos(theta);
    const double gy = std::sin(theta);
    const double corners[4] = {0.0, gx * static_cast<double>(w - 1), gy * static_cast<double>(h - 1),
                               gx * static_cast<double>(w - 1) + gy * static_cast<double>(h - 1)};
    const double lo = *std::min_element(corners, corners + 4);
    const double hi = *std::max_element(corners, corners + 4);
    const double span = hi > lo ? hi - lo : 1.0;
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const double t = (gx * static_cast<double>(c) + gy * static_cast<double>(r) - lo) / span;
        img(r, c) += p.brightness_gradient * t;
      }
    }
  }

  if (p.gaussian_sigma > 0.0) {
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        img(r, c) += p.gaussian_sigma * rng::normal(seed, kNoiseStream, static_cast<std::uint64_t>(r * w + c));
      }
    }
  }
}

}  // namespace

SyntheticPair synthesize_pair(const SimulationSpec& spec) {
  GroundTruth gt = make_ground_truth(spec);
  Raster i1 = make_texture(spec.height, spec.width, spec.texture.octaves, spec.texture.base_scale, spec.texture.seed);
  Grid i2 = warp_image(i1, gt.df).warped.data();
  apply_perturbations(i2, spec);
  return SyntheticPair{std::move(i1), Raster(std::move(i2)), std::move(gt.df), std::move(gt.near_fault)};
}

}  // namespace defkit
