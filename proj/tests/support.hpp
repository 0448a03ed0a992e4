#pragma once

// Test helpers: seeded generators and independent reference solvers.
// The reference solvers share no code with the library implementations.

#include "defkit/core.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

using defkit::Grid;

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = d(gen);
  return v;
}

inline Grid random_grid(std::mt19937_64& gen, Eigen::Index h, Eigen::Index w, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Grid g(h, w);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = d(gen);
  return g;
}

inline defkit::DisplacementField random_field(std::mt19937_64& gen, Eigen::Index h, Eigen::Index w, double amp) {
  return defkit::DisplacementField(random_grid(gen, h, w, -amp, amp), random_grid(gen, h, w, -amp, amp));
}

/// Row-major pixel-by-pixel maximum of sqrt(u^2 + v^2).
inline double brute_max_magnitude(const defkit::DisplacementField& df) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < df.height(); ++r)
    for (Eigen::Index c = 0; c < df.width(); ++c)
      best = std::max(best, std::sqrt(df.u()(r, c) * df.u()(r, c) + df.v()(r, c) * df.v()(r, c)));
  return best;
}

// Objective ||u - y||^2 + sum_i w[i] |u[i+1] - u[i]|.
inline double tv1d_objective(const Eigen::VectorXd& u, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  double f = (u - y).squaredNorm();
  for (Eigen::Index i = 0; i + 1 < u.size(); ++i) f += w(i) * std::abs(u(i + 1) - u(i));
  return f;
}

/// Primal subgradient descent with diminishing steps 1 / (2 (k + 1)) (the
/// objective is 2-strongly convex) and averaging over the second half of
/// the run.
inline Eigen::VectorXd subgradient_tv1d(const Eigen::VectorXd& y, const Eigen::VectorXd& w, long iters) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd u = y;
  Eigen::VectorXd g(n);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(n);
  long averaged = 0;
  for (long k = 0; k < iters; ++k) {
    g = 2.0 * (u - y);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double d = u(i + 1) - u(i);
      const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      g(i) -= w(i) * s;
      g(i + 1) += w(i) * s;
    }
    u -= g / (2.0 * static_cast<double>(k + 1));
    if (k >= iters / 2) {
      avg += u;
      ++averaged;
    }
  }
  return averaged > 0 ? Eigen::VectorXd(avg / static_cast<double>(averaged)) : u;
}

struct KktResult {
  bool ok = true;
  double worst = 0.0;  // largest violation seen
};

/// Builds the dual z from stationarity 2(u - y) + D^T z = 0 and checks
/// |z[i]| <= w[i], z[n-1] = 0 and z[i] = w[i] sign(u[i+1] - u[i]) on jumps.
inline KktResult kkt_certificate(const Eigen::VectorXd& u, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                 double tol) {
  KktResult res;
  const Eigen::Index n = y.size();
  auto note = [&](double violation) {
    res.worst = std::max(res.worst, violation);
    if (violation > tol) res.ok = false;
  };
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    z += 2.0 * (u(i) - y(i));
    if (i == n - 1) {
      note(std::abs(z));
      break;
    }
    note(std::abs(z) - w(i));
    const double jump = u(i + 1) - u(i);
    if (std::abs(jump) > 1e-10) note(std::abs(z - w(i) * (jump > 0 ? 1.0 : -1.0)));
  }
  return res;
}

// 2D weighted anisotropic TV. horizontal is H x (W-1), vertical (H-1) x W.
inline double tv2d_objective(const Grid& u, const Grid& y, const Grid& wh, const Grid& wv) {
  const Eigen::Index h = u.rows();
  const Eigen::Index w = u.cols();
  double f = (u - y).square().sum();
  f += (wh * (u.rightCols(w - 1) - u.leftCols(w - 1)).abs()).sum();
  f += (wv * (u.bottomRows(h - 1) - u.topRows(h - 1)).abs()).sum();
  return f;
}

/// FISTA on the box-constrained dual of the weighted 2D TV problem:
/// maximize z^T K y - ||K^T z||^2 / 4 over |z| <= w, with u = y - K^T z / 2.
inline Grid dual_fista_tv2d(const Grid& y, const Grid& wh, const Grid& wv, long iters) {
  const Eigen::Index h = y.rows();
  const Eigen::Index w = y.cols();
  Grid zh = Grid::Zero(h, w - 1), zv = Grid::Zero(h - 1, w);
  Grid ph = zh, pv = zv;
  auto primal = [&](const Grid& ah, const Grid& av) {
    Grid kt = Grid::Zero(h, w);  // K^T z
    kt.leftCols(w - 1) -= ah;
    kt.rightCols(w - 1) += ah;
    kt.topRows(h - 1) -= av;
    kt.bottomRows(h - 1) += av;
    return Grid(y - 0.5 * kt);
  };
  const double step = 0.25;  // 1 / L with L = ||K K^T|| / 2 <= 4
  double t = 1.0;
  for (long k = 0; k < iters; ++k) {
    const Grid u = primal(ph, pv);
    const Grid nh = (ph + step * (u.rightCols(w - 1) - u.leftCols(w - 1))).max(-wh).min(wh);
    const Grid nv = (pv + step * (u.bottomRows(h - 1) - u.topRows(h - 1))).max(-wv).min(wv);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    ph = nh + ((t - 1.0) / tn) * (nh - zh);
    pv = nv + ((t - 1.0) / tn) * (nv - zv);
    zh = nh;
    zv = nv;
    t = tn;
  }
  return primal(zh, zv);
}

/// Direct sparse solve of (I + lambda (Dx^T Dx + Dy^T Dy)) u = y.
inline Grid sparse_l2grad_2d(const Grid& y, double lambda) {
  const Eigen::Index h = y.rows();
  const Eigen::Index w = y.cols();
  const Eigen::Index n = h * w;
  std::vector<Eigen::Triplet<double>> t;
  auto idx = [w](Eigen::Index r, Eigen::Index c) { return r * w + c; };
  for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
  auto edge = [&](Eigen::Index a, Eigen::Index b) {
    t.emplace_back(a, a, lambda);
    t.emplace_back(b, b, lambda);
    t.emplace_back(a, b, -lambda);
    t.emplace_back(b, a, -lambda);
  };
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c + 1 < w; ++c) edge(idx(r, c), idx(r, c + 1));
  for (Eigen::Index r = 0; r + 1 < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) edge(idx(r, c), idx(r + 1, c));
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) rhs(idx(r, c)) = y(r, c);
  const Eigen::VectorXd x = solver.solve(rhs);
  Grid out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) out(r, c) = x(idx(r, c));
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("defkit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
