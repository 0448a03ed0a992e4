#include "defkit/metrics.hpp"

namespace defkit {

double epe(const DisplacementField& est, const DisplacementField& gt, const std::optional<RegionMask>& mask) {
  require_same_shape(est, gt, "epe");
  const Grid err = ((est.u() - gt.u()).square() + (est.v() - gt.v()).square()).sqrt();
  if (!mask) {
    if (err.size() == 0) throw Error(ErrorKind::EmptyMask, "epe over an empty field");
    return err.mean();
  }
  require_same_shape(*mask, gt, "epe mask");
  const Eigen::Index n = mask->count();
  if (n == 0) throw Error(ErrorKind::EmptyMask, "epe mask selects no pixels");
  return mask->bits().select(err, 0.0).sum() / static_cast<double>(n);
}

double smoothness(const DisplacementField& df, const RegionMask& mask) {
  require_same_shape(df, mask, "smoothness");
  const Eigen::Index h = df.height() - 1;
  const Eigen::Index w = df.width() - 1;
  if (h < 1 || w < 1) throw Error(ErrorKind::EmptyMask, "smoothness needs at least a 2x2 field");
  auto sq_grad = [&](const Grid& g) -> Grid {
    return (g.block(0, 1, h, w) - g.block(0, 0, h, w)).square() + (g.block(1, 0, h, w) - g.block(0, 0, h, w)).square();
  };
  const Grid total = sq_grad(df.u()) + sq_grad(df.v());
  const auto sel = mask.bits().block(0, 0, h, w);
  const Eigen::Index n = sel.count();
  if (n == 0) throw Error(ErrorKind::EmptyMask, "smoothness mask selects no interior pixels");
  return sel.select(total, 0.0).sum() / static_cast<double>(n);
}

MetricsReport evaluate_run(const DisplacementField& est, const DisplacementField& gt, const RegionMask& near_fault,
                           const std::string& estimator_name, const std::string& regularizer_name) {
  require_same_shape(est, gt, "evaluate_run");
  require_same_shape(near_fault, gt, "evaluate_run mask");
  const RegionMask non_fault = near_fault.complement();
  MetricsReport r;
  r.epe = epe(est, gt);
  r.smoothness_near_fault = smoothness(est, near_fault);
  r.smoothness_non_fault = smoothness(est, non_fault);
  r.bucket = classify_range(gt);
  r.pixels_near_fault = near_fault.count();
  r.pixels_non_fault = non_fault.count();
  r.estimator_name = estimator_name;
  r.regularizer_name = regularizer_name;
  return r;
}

}  // namespace defkit
