#pragma once

// Desk-scale synthesis of co-seismic image pairs: strike-slip screw
// dislocation fields, value-noise textures and temporal-change perturbations.

#include "defkit/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace defkit {

enum class SlipSense { LeftLateral, RightLateral };

const char* to_string(SlipSense sense);
SlipSense parse_slip_sense(const std::string& name);

struct FaultSpec {
  double x = 0.0;      // a point on the trace, columns
  double y = 0.0;      // rows
  double angle = 0.0;  // trace direction in radians, measured from +x towards +y
  double slip = 0.0;   // total across-fault offset, pixels
  double locking_depth = 10.0;  // decay length, pixels
  SlipSense sense = SlipSense::LeftLateral;

  void validate() const;
  /// Signed perpendicular distance of (px, py) to the trace.
  double signed_distance(double px, double py) const;
};

struct TextureSpec {
  int octaves = 4;
  double base_scale = 32.0;
  std::uint64_t seed = 1;
};

struct PerturbationSpec {
  double gaussian_sigma = 0.0;
  double brightness_gradient = 0.0;  // largest added offset across the image
  int patch_changes = 0;
  int patch_size = 16;
  int vegetation_blotches = 0;
  double blotch_size = 8.0;        // Gaussian sigma of each blob, pixels
  double blotch_amplitude = 0.1;   // peak magnitude

  bool any() const {
    return gaussian_sigma > 0.0 || brightness_gradient != 0.0 || patch_changes > 0 || vegetation_blotches > 0;
  }
};

struct SimulationSpec {
  int height = 256;
  int width = 256;
  std::vector<FaultSpec> faults;
  TextureSpec texture;
  PerturbationSpec perturbations;
  int near_fault_halfwidth = 10;
  /// Replaces the fault model by a constant field (debugging / calibration).
  std::optional<Eigen::Vector2d> constant_shift;
  /// When set, generation fails unless the ground truth lands in this bucket.
  std::optional<RangeBucket> expected_bucket;

  void validate() const;
};

struct GroundTruth {
  DisplacementField df;
  RegionMask near_fault;
};

struct SyntheticPair {
  Raster i1;
  Raster i2;
  DisplacementField df_gt;
  RegionMask near_fault;
};

/// Trace-parallel displacement (s / pi) * atan(delta / d), delta the signed
/// distance to the trace; RightLateral flips the sign.
DisplacementField screw_dislocation_field(const FaultSpec& spec, Eigen::Index height, Eigen::Index width);

/// Points within `halfwidth` of the (infinite) trace line.
RegionMask fault_zone_mask(const FaultSpec& spec, Eigen::Index height, Eigen::Index width, double halfwidth);

GroundTruth make_ground_truth(const SimulationSpec& spec);

/// Multi-octave value noise normalized to [0, 1]; a pure function of its
/// arguments.
Raster make_texture(Eigen::Index height, Eigen::Index width, int octaves, double base_scale, std::uint64_t seed);

/// I2(x, y) = I1(x + u, y + v) followed by the configured perturbations of I2.
SyntheticPair synthesize_pair(const SimulationSpec& spec);

namespace rng {

std::uint64_t mix(std::uint64_t x);
/// Counter-based stream: uniform in [0, 1) from (seed, stream, index).
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
/// Standard normal via Box-Muller on two counter-based uniforms.
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace rng

}  // namespace defkit
