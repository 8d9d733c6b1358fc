// Test-only reference solvers, kept independent of the interior-point path
// they are used to check.
#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "fasopt/conic.hpp"
#include "fasopt/rng.hpp"

namespace fasopt::oracle {

/// Exact LP maximizer over {x : rows[i] . x <= rhs[i]} by enumerating basic
/// solutions. Assumes the feasible set is bounded by the given rows.
inline double lp_vertex_enumeration(const Vec& c, const Mat& rows, const Vec& rhs) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(rows.rows());
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Mat a(n, n);
      Vec b(n);
      for (int i = 0; i < n; ++i) {
        a.row(i) = rows.row(idx[static_cast<std::size_t>(i)]);
        b[i] = rhs[idx[static_cast<std::size_t>(i)]];
      }
      Eigen::FullPivLU<Mat> lu(a);
      if (!lu.isInvertible()) return;
      Vec x = lu.solve(b);
      if (((rows * x - rhs).array() <= 1e-9).all()) best = std::max(best, c.dot(x));
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

/// Derivative-free maximizer of a linear objective over a convex set given by
/// a membership test: coarse random sampling followed by random-direction hill
/// climbing with bisected line searches. Deterministic for a fixed seed.
inline Vec refine_max(const Vec& c, const std::function<bool(const Vec&)>& feasible,
                      const Vec& x0, int rounds, std::uint64_t seed) {
  Pcg32 rng(seed, 17);
  const int n = static_cast<int>(c.size());
  Vec x = x0;
  if (!feasible(x)) x = Vec::Zero(n);
  auto line_max = [&](const Vec& d) {
    // Largest t in [0, hi] with x + t d feasible.
    double hi = 1.0;
    while (feasible(x + hi * d) && hi < 1e6) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(x + mid * d))
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };
  for (int round = 0; round < rounds; ++round) {
    Vec d(n);
    if (round % 3 == 0) {
      d = c.normalized();
    } else {
      for (int i = 0; i < n; ++i) d[i] = rng.normal();
      d.normalize();
      if (c.dot(d) < 0.0) d = -d;
      d = (0.2 * d + 0.8 * c.normalized()).normalized();
      if (round % 3 == 2) {
        for (int i = 0; i < n; ++i) d[i] = rng.normal();
        d.normalize();
      }
    }
    const double t = line_max(d);
    if (t > 0.0 && c.dot(d) * t > 0.0) x += t * d;
    // Also try the pure random direction backwards when it helps.
    if (c.dot(d) < 0.0) {
      const double tb = line_max(-d);
      if (tb > 0.0 && -c.dot(d) * tb > 0.0) x -= tb * d;
    }
  }
  return x;
}

/// Exact maximizer of c . x over { ||x|| <= radius, rows x <= rhs } by
/// enumerating active sets: every KKT point has some subset of halfspaces
/// tight, with or without the ball, and each case has a closed form.
inline double ball_halfspace_max(const Vec& c, const Mat& rows, const Vec& rhs,
                                 double radius) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(rows.rows());
  double best = -std::numeric_limits<double>::infinity();
  auto feasible = [&](const Vec& x) {
    if (x.norm() > radius + 1e-9) return false;
    return m == 0 || ((rows * x - rhs).array() <= 1e-9).all();
  };
  auto consider = [&](const Vec& x) {
    if (feasible(x)) best = std::max(best, c.dot(x));
  };

  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const int na = static_cast<int>(act.size());
    if (na > n) continue;
    Mat a(na, n);
    Vec b(na);
    for (int i = 0; i < na; ++i) {
      a.row(i) = rows.row(act[static_cast<std::size_t>(i)]);
      b[i] = rhs[act[static_cast<std::size_t>(i)]];
    }
    if (na == n) {
      Eigen::FullPivLU<Mat> lu(a);
      if (lu.isInvertible()) consider(lu.solve(b));
    }
    // Ball active: least-norm point on the affine face plus the in-face
    // component of the objective scaled onto the sphere.
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
    Vec x0 = na == 0 ? Vec::Zero(n) : Vec(cod.solve(b));
    if (x0.norm() <= radius + 1e-12) {
      Mat z;
      if (na == 0) {
        z = Mat::Identity(n, n);
      } else {
        // Orthonormal null-space basis of the active rows.
        Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
          if (svd.singularValues()[i] > 1e-12 * svd.singularValues()[0]) ++rank;
        z = svd.matrixV().rightCols(n - rank);
      }
      if (z.cols() > 0) {
        Vec g = z.transpose() * c;
        const double room = std::sqrt(std::max(0.0, radius * radius - x0.squaredNorm()));
        if (g.norm() > 1e-14) consider(x0 + z * (g / g.norm()) * room);
      }
      consider(x0);
    }
  }
  return best;
}

/// Membership test for a ConicProblem's constraints (no objective).
inline bool conic_feasible(const ConicProblem& p, const Vec& x, double tol = 1e-11) {
  if (p.eq_a.rows() > 0 && (p.eq_a * x - p.eq_b).cwiseAbs().maxCoeff() > tol) return false;
  for (const ConeBlock& c : p.cones) {
    if (c.type == ConeType::free_cone) continue;
    Vec s = c.map_a * x + c.map_b;
    if (c.type == ConeType::nonneg) {
      if (s.minCoeff() < -tol) return false;
    } else if (c.type == ConeType::soc) {
      if (s[0] < s.tail(s.size() - 1).norm() - tol) return false;
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> es(smat(s, c.dim));
      if (es.eigenvalues().minCoeff() < -tol) return false;
    }
  }
  return true;
}

}  // namespace fasopt::oracle
