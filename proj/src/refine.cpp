#include "defkit/refine.hpp"

#include "defkit/warp.hpp"

#include <cmath>
#include <exception>

namespace defkit {

void RefinementConfig::validate() const {
  if (n < 1 || n > 8) throw Error(ErrorKind::ConfigInvalid, "refinement n must lie in [1, 8]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::ConfigInvalid, "gamma must lie in (0, 1]");
}

Raster compensate_second_image(const Raster& i2, const DisplacementField& df) {
  return warp_image(i2, -df).warped;
}

RefinementTrace iterative_refine(const Raster& i1, const Raster& i2, const FlowEstimator& estimator,
                                 const RefinementConfig& cfg) {
  cfg.validate();
  require_same_shape(i1, i2, "iterative_refine");

  RefinementTrace trace;
  DisplacementField current(i1.height(), i1.width());
  for (int i = 1; i <= cfg.n; ++i) {
    const Raster warped = i == 1 ? i2 : compensate_second_image(i2, current);
    DisplacementField delta;
    try {
      delta = estimator(i1, warped);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::EstimatorFailure, "iteration " + std::to_string(i) + ": " + e.what());
    }
    if (!same_shape(delta, i1)) {
      throw Error(ErrorKind::DimensionMismatch, "estimator returned a field of the wrong size at iteration " +
                                                    std::to_string(i));
    }
    current = current + delta;
    trace.deltas.push_back(std::move(delta));
    trace.fields.push_back(current);
  }
  return trace;
}

IntermediateLoss intermediate_loss(const RefinementTrace& trace, const DisplacementField& gt, double gamma) {
  IntermediateLoss loss;
  const auto n = static_cast<int>(trace.fields.size());
  for (int i = 0; i < n; ++i) {
    const DisplacementField& df = trace.fields[static_cast<std::size_t>(i)];
    require_same_shape(df, gt, "intermediate_loss");
    const double err = ((gt.u() - df.u()).abs().sum() + (gt.v() - df.v()).abs().sum()) /
                       (2.0 * static_cast<double>(gt.u().size()));
    loss.per_iteration.push_back(err);
    loss.total += std::pow(gamma, n - 1 - i) * err;
  }
  return loss;
}

}  // namespace defkit
