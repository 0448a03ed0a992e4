#pragma once

#include "defkit/core.hpp"

#include <optional>
#include <string>

namespace defkit {

struct MetricsReport {
  double epe = 0.0;
  double smoothness_near_fault = 0.0;
  double smoothness_non_fault = 0.0;
  RangeBucket bucket = RangeBucket::VerySmall;
  Eigen::Index pixels_near_fault = 0;
  Eigen::Index pixels_non_fault = 0;
  std::string estimator_name;
  std::string regularizer_name;
};

/// Mean endpoint error over the masked pixels (all pixels without a mask).
double epe(const DisplacementField& est, const DisplacementField& gt,
           const std::optional<RegionMask>& mask = std::nullopt);

/// Mean over masked pixels of (dx u)^2 + (dy u)^2 + (dx v)^2 + (dy v)^2 with
/// forward differences. Pixels in the last row or column are excluded.
double smoothness(const DisplacementField& df, const RegionMask& mask);

/// EPE over the full image, smoothness on the near-fault mask and on its
/// complement, range bucket of the ground truth.
MetricsReport evaluate_run(const DisplacementField& est, const DisplacementField& gt, const RegionMask& near_fault,
                           const std::string& estimator_name = "", const std::string& regularizer_name = "");

}  // namespace defkit
