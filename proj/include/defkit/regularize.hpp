#pragma once

// A-posteriori denoising of displacement fields.
//
// Every objective in this module is written without the customary 1/2:
//
//     ||u - y||^2 + penalty(u)
//
// so a total-variation weight w corresponds to a taut-string tube of
// half-width w / 2 on the cumulative sums of y.

#include "defkit/core.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace defkit {

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Forward differences u[i+1] - u[i]; needs at least two samples.
template <typename Derived>
VectorT<typename Derived::Scalar> grad1d(const Eigen::MatrixBase<Derived>& u) {
  const Eigen::Index n = u.size();
  if (n < 2) throw Error(ErrorKind::TooShort, "grad1d needs at least 2 samples");
  return u.tail(n - 1) - u.head(n - 1);
}

namespace detail {

// Shortest path from (0, 0) to (n, cum[n]) through the gates
// [cum[k] - half[k-1], cum[k] + half[k-1]], k = 1..n-1, found with a
// funnel that restarts at each bend. The path slopes are the solution.
template <typename Scalar>
void taut_string(const Scalar* y, const Scalar* half, Eigen::Index n, Scalar* out) {
  std::vector<Scalar> lo(static_cast<std::size_t>(n + 1));
  std::vector<Scalar> hi(static_cast<std::size_t>(n + 1));
  Scalar cum = 0;
  lo[0] = hi[0] = 0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    cum += y[k - 1];
    const Scalar h = k < n ? half[k - 1] : Scalar(0);
    lo[static_cast<std::size_t>(k)] = cum - h;
    hi[static_cast<std::size_t>(k)] = cum + h;
  }

  Eigen::Index start = 0;
  Scalar height = 0;
  while (start < n) {
    Scalar slope_max = std::numeric_limits<Scalar>::infinity();
    Scalar slope_min = -std::numeric_limits<Scalar>::infinity();
    Eigen::Index k_max = start;
    Eigen::Index k_min = start;
    Eigen::Index bend = -1;
    Scalar bend_slope = 0;
    Scalar bend_height = 0;
    for (Eigen::Index k = start + 1; k <= n; ++k) {
      const auto run = static_cast<Scalar>(k - start);
      const Scalar up = (hi[static_cast<std::size_t>(k)] - height) / run;
      const Scalar down = (lo[static_cast<std::size_t>(k)] - height) / run;
      if (down > slope_max) {
        // Pressed against the upper bound at k_max, then turns upward.
        bend = k_max;
        bend_slope = slope_max;
        bend_height = hi[static_cast<std::size_t>(k_max)];
        break;
      }
      if (up < slope_min) {
        bend = k_min;
        bend_slope = slope_min;
        bend_height = lo[static_cast<std::size_t>(k_min)];
        break;
      }
      if (up <= slope_max) {
        slope_max = up;
        k_max = k;
      }
      if (down >= slope_min) {
        slope_min = down;
        k_min = k;
      }
    }
    if (bend < 0) {
      // Reached the pinned endpoint without leaving the funnel.
      const Scalar slope = (hi[static_cast<std::size_t>(n)] - height) / static_cast<Scalar>(n - start);
      for (Eigen::Index i = start; i < n; ++i) out[i] = slope;
      return;
    }
    for (Eigen::Index i = start; i < bend; ++i) out[i] = bend_slope;
    start = bend;
    height = bend_height;
  }
}

}  // namespace detail

/// Exact minimizer of ||u - y||^2 + sum_i w[i] |u[i+1] - u[i]| (weighted
/// taut string). Requires w.size() == y.size() - 1 and w >= 0.
template <typename DerivedY, typename DerivedW>
VectorT<typename DerivedY::Scalar> weighted_tv1d_prox(const Eigen::MatrixBase<DerivedY>& y,
                                                       const Eigen::MatrixBase<DerivedW>& w) {
  using Scalar = typename DerivedY::Scalar;
  const Eigen::Index n = y.size();
  if (n == 0) return VectorT<Scalar>();
  if (w.size() != n - 1) {
    throw Error(ErrorKind::LengthMismatch, "weighted_tv1d_prox: expected " + std::to_string(n - 1) +
                                               " weights, got " + std::to_string(w.size()));
  }
  const VectorT<Scalar> yv = y;
  if (n == 1) return yv;
  const VectorT<Scalar> half = w.template cast<Scalar>() / Scalar(2);
  if (!half.allFinite() || (half.array() < Scalar(0)).any()) {
    throw Error(ErrorKind::InvalidValue, "weighted_tv1d_prox: weights must be finite and >= 0");
  }
  if ((half.array() == Scalar(0)).all()) return yv;
  VectorT<Scalar> out(n);
  detail::taut_string(yv.data(), half.data(), n, out.data());
  return out;
}

/// Exact minimizer of ||u - y||^2 + lambda * sum_i |u[i+1] - u[i]|.
template <typename Derived>
VectorT<typename Derived::Scalar> tv1d_prox(const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  if (!(lambda >= Scalar(0))) throw Error(ErrorKind::InvalidValue, "tv1d_prox: lambda must be >= 0");
  const Eigen::Index edges = y.size() > 0 ? y.size() - 1 : 0;
  return weighted_tv1d_prox(y, VectorT<Scalar>::Constant(edges, lambda));
}

/// Exact minimizer of ||u - y||^2 + lambda ||grad u||^2, i.e. the solution of
/// (I + lambda L) u = y for the path-graph Laplacian L (Thomas algorithm).
template <typename Derived>
VectorT<typename Derived::Scalar> l2grad_denoise_1d(const Eigen::MatrixBase<Derived>& y,
                                                     typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = y.size();
  if (n < 2) throw Error(ErrorKind::TooShort, "l2grad_denoise_1d needs at least 2 samples");
  if (!(lambda >= Scalar(0))) throw Error(ErrorKind::InvalidValue, "l2grad_denoise_1d: lambda must be >= 0");
  VectorT<Scalar> u = y;
  if (lambda == Scalar(0)) return u;

  VectorT<Scalar> c_prime(n);
  const Scalar off = -lambda;
  auto diag = [&](Eigen::Index i) { return Scalar(1) + lambda * ((i == 0 || i == n - 1) ? Scalar(1) : Scalar(2)); };
  Scalar denom = diag(0);
  c_prime(0) = off / denom;
  u(0) = u(0) / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag(i) - off * c_prime(i - 1);
    c_prime(i) = off / denom;
    u(i) = (u(i) - off * u(i - 1)) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) u(i) -= c_prime(i) * u(i + 1);
  return u;
}

// ---------------------------------------------------------------------------
// 2D

/// Per-edge TV weights of an H x W grid. horizontal(r, c) couples (r, c) and
/// (r, c + 1); vertical(r, c) couples (r, c) and (r + 1, c).
struct EdgeWeights {
  Grid horizontal;  // H x (W - 1)
  Grid vertical;    // (H - 1) x W

  static EdgeWeights uniform(Eigen::Index height, Eigen::Index width, double lambda);
};

struct DykstraControls {
  int max_iters = 50;
  double tol = 1e-6;
};

struct DenoiseResult {
  Grid solution;
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;  // max-norm change of the final sweep
};

/// Approximate minimizer of ||u - y||_F^2 + sum of weighted TV over rows and
/// columns, by Dykstra-style alternation of exact row and column proxes.
/// Non-convergence is reported in the result, never thrown.
DenoiseResult denoise_2d(const Grid& y, const EdgeWeights& weights, const DykstraControls& controls = {});

/// ||u - y||^2 + sum over edges of weight * |difference|.
double weighted_tv_objective(const Grid& u, const Grid& y, const EdgeWeights& weights);

// ---------------------------------------------------------------------------
// Penalties and the field-level entry points

enum class PenaltyKind { L2Grad, TV, LTV };

const char* to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(const std::string& name);

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::LTV;
  double epsilon = 1e-2;  // LTV only
};

struct RegularizerConfig {
  PenaltySpec penalty;
  double lambda = 0.001;
  int k = 3;  // reweighting passes (LTV)
  int dykstra_iters = 50;
  double dykstra_tol = 1e-6;

  void validate() const;
  DykstraControls dykstra() const { return DykstraControls{dykstra_iters, dykstra_tol}; }
};

struct SolveReport {
  int solves = 0;
  int total_iterations = 0;
  bool all_converged = true;
  double max_final_change = 0.0;

  void absorb(const DenoiseResult& r);
};

/// Reweighted-L1 edge weights lambda / (|grad u| + epsilon), per axis.
EdgeWeights ltv_weights(const Grid& u, double lambda, double epsilon);

/// ||u - y||^2 + lambda * sum over row and column edges of log(|grad u| + epsilon).
double ltv_objective(const Grid& u, const Grid& y, double lambda, double epsilon);

/// Reweighted-L1 passes on one component. The data term stays anchored to
/// the original `noisy` grid; iterates[t] is the result after t passes
/// (iterates[0] == noisy) when `iterates` is given.
Grid ltv_denoise_component(const Grid& noisy, const RegularizerConfig& cfg, SolveReport* report = nullptr,
                           std::vector<Grid>* iterates = nullptr);

DisplacementField ltv_denoise(const DisplacementField& field, const RegularizerConfig& cfg,
                              SolveReport* report = nullptr);

/// Minimizer of ||u - y||^2 + lambda (||Dx u||^2 + ||Dy u||^2) via
/// alternating row/column tridiagonal sweeps, to residual max-norm `tol`.
Grid l2grad_denoise_2d(const Grid& y, double lambda, double tol = 1e-6, SolveReport* report = nullptr);

DisplacementField regularize_field(const DisplacementField& field, const RegularizerConfig& cfg,
                                   SolveReport* report = nullptr);

}  // namespace defkit
