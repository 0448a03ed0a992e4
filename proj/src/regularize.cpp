#include "defkit/regularize.hpp"

#include "defkit/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace defkit {

EdgeWeights EdgeWeights::uniform(Eigen::Index height, Eigen::Index width, double lambda) {
  return EdgeWeights{Grid::Constant(height, std::max<Eigen::Index>(width - 1, 0), lambda),
                     Grid::Constant(std::max<Eigen::Index>(height - 1, 0), width, lambda)};
}

namespace {

void check_weights(const Grid& y, const EdgeWeights& w) {
  if (w.horizontal.rows() != y.rows() || w.horizontal.cols() != std::max<Eigen::Index>(y.cols() - 1, 0) ||
      w.vertical.rows() != std::max<Eigen::Index>(y.rows() - 1, 0) || w.vertical.cols() != y.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "edge weights do not match the grid");
  }
  if (!w.horizontal.isFinite().all() || !w.vertical.isFinite().all() || (w.horizontal < 0.0).any() ||
      (w.vertical < 0.0).any()) {
    throw Error(ErrorKind::InvalidValue, "edge weights must be finite and >= 0");
  }
}

Grid prox_rows(const Grid& in, const Grid& weights) {
  Grid out(in.rows(), in.cols());
  parallel_for(0, in.rows(), [&](std::ptrdiff_t r) {
    const Eigen::VectorXd row = in.row(r).transpose();
    const Eigen::VectorXd w = weights.row(r).transpose();
    out.row(r) = weighted_tv1d_prox(row, w).transpose();
  });
  return out;
}

Grid prox_cols(const Grid& in, const Grid& weights) {
  Grid out(in.rows(), in.cols());
  parallel_for(0, in.cols(), [&](std::ptrdiff_t c) {
    const Eigen::VectorXd col = in.col(c);
    const Eigen::VectorXd w = weights.col(c);
    out.col(c) = weighted_tv1d_prox(col, w);
  });
  return out;
}

}  // namespace

DenoiseResult denoise_2d(const Grid& y, const EdgeWeights& weights, const DykstraControls& controls) {
  if (y.size() == 0) throw Error(ErrorKind::TooShort, "denoise_2d: empty grid");
  if (controls.max_iters < 1 || !(controls.tol > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "denoise_2d: need max_iters >= 1 and tol > 0");
  }
  check_weights(y, weights);

  DenoiseResult result;
  Grid z = y;
  Grid p = Grid::Zero(y.rows(), y.cols());
  Grid q = Grid::Zero(y.rows(), y.cols());
  for (int it = 1; it <= controls.max_iters; ++it) {
    const Grid u = prox_rows(z + p, weights.horizontal);
    p = z + p - u;
    Grid z_next = prox_cols(u + q, weights.vertical);
    q = u + q - z_next;
    result.last_change = (z_next - z).abs().maxCoeff();
    z = std::move(z_next);
    result.iterations = it;
    if (result.last_change < controls.tol) {
      result.converged = true;
      break;
    }
  }
  result.solution = std::move(z);
  return result;
}

double weighted_tv_objective(const Grid& u, const Grid& y, const EdgeWeights& w) {
  double value = (u - y).square().sum();
  if (u.cols() > 1) {
    value += (w.horizontal * (u.rightCols(u.cols() - 1) - u.leftCols(u.cols() - 1)).abs()).sum();
  }
  if (u.rows() > 1) {
    value += (w.vertical * (u.bottomRows(u.rows() - 1) - u.topRows(u.rows() - 1)).abs()).sum();
  }
  return value;
}

const char* to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::L2Grad: return "l2grad";
    case PenaltyKind::TV: return "tv";
    case PenaltyKind::LTV: return "ltv";
  }
  return "unknown";
}

PenaltyKind parse_penalty_kind(const std::string& name) {
  if (name == "l2grad") return PenaltyKind::L2Grad;
  if (name == "tv") return PenaltyKind::TV;
  if (name == "ltv") return PenaltyKind::LTV;
  throw Error(ErrorKind::ConfigInvalid, "unknown penalty '" + name + "'");
}

void RegularizerConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::ConfigInvalid, "lambda must be >= 0");
  if (k < 0) throw Error(ErrorKind::ConfigInvalid, "k must be >= 0");
  if (dykstra_iters < 1) throw Error(ErrorKind::ConfigInvalid, "dykstra_iters must be >= 1");
  if (!(dykstra_tol > 0.0)) throw Error(ErrorKind::ConfigInvalid, "dykstra_tol must be > 0");
  if (penalty.kind == PenaltyKind::LTV && !(penalty.epsilon > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "LTV epsilon must be > 0");
  }
}

void SolveReport::absorb(const DenoiseResult& r) {
  ++solves;
  total_iterations += r.iterations;
  all_converged = all_converged && r.converged;
  max_final_change = std::max(max_final_change, r.last_change);
}

EdgeWeights ltv_weights(const Grid& u, double lambda, double epsilon) {
  EdgeWeights w = EdgeWeights::uniform(u.rows(), u.cols(), 0.0);
  if (u.cols() > 1) {
    w.horizontal = lambda / ((u.rightCols(u.cols() - 1) - u.leftCols(u.cols() - 1)).abs() + epsilon);
  }
  if (u.rows() > 1) {
    w.vertical = lambda / ((u.bottomRows(u.rows() - 1) - u.topRows(u.rows() - 1)).abs() + epsilon);
  }
  return w;
}

double ltv_objective(const Grid& u, const Grid& y, double lambda, double epsilon) {
  double penalty = 0.0;
  if (u.cols() > 1) penalty += ((u.rightCols(u.cols() - 1) - u.leftCols(u.cols() - 1)).abs() + epsilon).log().sum();
  if (u.rows() > 1) penalty += ((u.bottomRows(u.rows() - 1) - u.topRows(u.rows() - 1)).abs() + epsilon).log().sum();
  return (u - y).square().sum() + lambda * penalty;
}

Grid ltv_denoise_component(const Grid& noisy, const RegularizerConfig& cfg, SolveReport* report,
                           std::vector<Grid>* iterates) {
  cfg.validate();
  if (iterates) iterates->assign(1, noisy);
  if (cfg.lambda == 0.0) {
    if (iterates) iterates->resize(static_cast<std::size_t>(cfg.k) + 1, noisy);
    return noisy;
  }
  Grid current = noisy;
  for (int t = 1; t <= cfg.k; ++t) {
    const EdgeWeights w = ltv_weights(current, cfg.lambda, cfg.penalty.epsilon);
    DenoiseResult r = denoise_2d(noisy, w, cfg.dykstra());
    if (report) report->absorb(r);
    current = std::move(r.solution);
    if (iterates) iterates->push_back(current);
  }
  return current;
}

namespace {

template <typename Fn>
DisplacementField per_component(const DisplacementField& field, Fn&& fn, SolveReport* report) {
  Grid u;
  Grid v;
  SolveReport ru;
  SolveReport rv;
  parallel_for(0, 2, [&](std::ptrdiff_t i) {
    if (i == 0) {
      u = fn(field.u(), &ru);
    } else {
      v = fn(field.v(), &rv);
    }
  });
  if (report) {
    for (const SolveReport* r : {&ru, &rv}) {
      report->solves += r->solves;
      report->total_iterations += r->total_iterations;
      report->all_converged = report->all_converged && r->all_converged;
      report->max_final_change = std::max(report->max_final_change, r->max_final_change);
    }
  }
  return DisplacementField(std::move(u), std::move(v));
}

// Solves the tridiagonal system with diagonal `diag`, constant off-diagonal
// `off` and right-hand side `rhs` (overwritten with the solution).
void solve_tridiagonal(const Eigen::VectorXd& diag, double off, Eigen::VectorXd& rhs) {
  const Eigen::Index n = rhs.size();
  if (n == 1) {
    rhs(0) /= diag(0);
    return;
  }
  Eigen::VectorXd c_prime(n);
  double denom = diag(0);
  c_prime(0) = off / denom;
  rhs(0) /= denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag(i) - off * c_prime(i - 1);
    c_prime(i) = off / denom;
    rhs(i) = (rhs(i) - off * rhs(i - 1)) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) rhs(i) -= c_prime(i) * rhs(i + 1);
}

double degree(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0.0;
  return (i == 0 || i == n - 1) ? 1.0 : 2.0;
}

// (I + lambda L) u with L the 4-neighbor grid Laplacian.
Grid apply_l2_operator(const Grid& u, double lambda) {
  Grid out = u;
  const Eigen::Index h = u.rows();
  const Eigen::Index w = u.cols();
  if (w > 1) {
    const Grid dx = u.rightCols(w - 1) - u.leftCols(w - 1);
    out.leftCols(w - 1) -= lambda * dx;
    out.rightCols(w - 1) += lambda * dx;
  }
  if (h > 1) {
    const Grid dy = u.bottomRows(h - 1) - u.topRows(h - 1);
    out.topRows(h - 1) -= lambda * dy;
    out.bottomRows(h - 1) += lambda * dy;
  }
  return out;
}

}  // namespace

Grid l2grad_denoise_2d(const Grid& y, double lambda, double tol, SolveReport* report) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "lambda must be >= 0");
  if (lambda == 0.0) return y;
  const Eigen::Index h = y.rows();
  const Eigen::Index w = y.cols();
  constexpr int kMaxSweeps = 100000;

  Grid u = y;
  DenoiseResult status;
  for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
    // Row lines: horizontal coupling implicit, vertical neighbors from u.
    Grid next(h, w);
    parallel_for(0, h, [&](std::ptrdiff_t r) {
      Eigen::VectorXd diag(w);
      Eigen::VectorXd rhs(w);
      for (Eigen::Index c = 0; c < w; ++c) {
        diag(c) = 1.0 + lambda * (degree(c, w) + degree(r, h));
        double nb = 0.0;
        if (r > 0) nb += u(r - 1, c);
        if (r < h - 1) nb += u(r + 1, c);
        rhs(c) = y(r, c) + lambda * nb;
      }
      solve_tridiagonal(diag, -lambda, rhs);
      next.row(r) = rhs.transpose();
    });
    u = std::move(next);

    // Column lines.
    next.resize(h, w);
    parallel_for(0, w, [&](std::ptrdiff_t c) {
      Eigen::VectorXd diag(h);
      Eigen::VectorXd rhs(h);
      for (Eigen::Index r = 0; r < h; ++r) {
        diag(r) = 1.0 + lambda * (degree(r, h) + degree(c, w));
        double nb = 0.0;
        if (c > 0) nb += u(r, c - 1);
        if (c < w - 1) nb += u(r, c + 1);
        rhs(r) = y(r, c) + lambda * nb;
      }
      solve_tridiagonal(diag, -lambda, rhs);
      next.col(c) = rhs;
    });
    u = std::move(next);

    status.iterations = sweep;
    status.last_change = (apply_l2_operator(u, lambda) - y).abs().maxCoeff();
    if (status.last_change < tol) {
      status.converged = true;
      break;
    }
  }
  if (report) report->absorb(status);
  return u;
}

DisplacementField ltv_denoise(const DisplacementField& field, const RegularizerConfig& cfg, SolveReport* report) {
  cfg.validate();
  if (cfg.penalty.kind != PenaltyKind::LTV) throw Error(ErrorKind::ConfigInvalid, "ltv_denoise needs an LTV penalty");
  return per_component(
      field, [&](const Grid& c, SolveReport* r) { return ltv_denoise_component(c, cfg, r); }, report);
}

DisplacementField regularize_field(const DisplacementField& field, const RegularizerConfig& cfg,
                                   SolveReport* report) {
  cfg.validate();
  if (cfg.lambda == 0.0) return field;
  switch (cfg.penalty.kind) {
    case PenaltyKind::L2Grad:
      return per_component(
          field, [&](const Grid& c, SolveReport* r) { return l2grad_denoise_2d(c, cfg.lambda, 1e-6, r); }, report);
    case PenaltyKind::TV:
      return per_component(
          field,
          [&](const Grid& c, SolveReport* r) {
            DenoiseResult res = denoise_2d(c, EdgeWeights::uniform(c.rows(), c.cols(), cfg.lambda), cfg.dykstra());
            r->absorb(res);
            return std::move(res.solution);
          },
          report);
    case PenaltyKind::LTV:
      return ltv_denoise(field, cfg, report);
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown penalty kind");
}

}  // namespace defkit
