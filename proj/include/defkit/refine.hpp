#pragma once

#include "defkit/core.hpp"

#include <functional>
#include <vector>

namespace defkit {

/// Any dense estimator following the library convention
/// I2(x, y) ~ I1(x + u, y + v).
using FlowEstimator = std::function<DisplacementField(const Raster& i1, const Raster& i2)>;

struct RefinementConfig {
  int n = 3;           // iterations, 1..8
  double gamma = 0.8;  // attenuation of earlier iterations in the loss

  void validate() const;
};

struct RefinementTrace {
  std::vector<DisplacementField> fields;  // df_1 .. df_n
  std::vector<DisplacementField> deltas;  // delta_1 .. delta_n
};

/// Estimates df_1 from (I1, I2), then repeatedly resamples I2 with the
/// current field, estimates the residual and accumulates it:
/// df_i = df_{i-1} + estimator(I1, I2 resampled by df_{i-1}), df_0 = 0.
RefinementTrace iterative_refine(const Raster& i1, const Raster& i2, const FlowEstimator& estimator,
                                 const RefinementConfig& cfg);

/// Second image resampled so that its residual displacement to I1 is
/// (ground truth - df): out(x, y) = I2(x - u(x, y), y - v(x, y)).
Raster compensate_second_image(const Raster& i2, const DisplacementField& df);

struct IntermediateLoss {
  double total = 0.0;
  std::vector<double> per_iteration;
};

/// Mean absolute error of each df_i against gt (over pixels and both
/// components), combined as sum_i gamma^(n - i) * err_i.
IntermediateLoss intermediate_loss(const RefinementTrace& trace, const DisplacementField& gt, double gamma);

}  // namespace defkit
