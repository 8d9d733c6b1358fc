#pragma once

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fasopt/common.hpp"
#include "fasopt/linalg.hpp"

namespace fasopt {

enum class ConeType { free_cone, nonneg, soc, psd };

/// One cone membership: the affine image map_a * x + map_b must lie in the
/// tagged cone. For psd blocks the image is in packed svec coordinates
/// (column-major lower triangle, sqrt(2) off-diagonal scaling) and dim is the
/// matrix side length. free_cone blocks impose nothing and are carried only
/// so callers can keep their block numbering.
struct ConeBlock {
  ConeType type = ConeType::nonneg;
  int dim = 0;
  Mat map_a;
  Vec map_b;

  int rows() const { return type == ConeType::psd ? svec_dim(dim) : dim; }
};

/// Standard-form cone program over a real variable vector:
///   maximize  objective . x
///   s.t.      eq_a x = eq_b,   map_a_i x + map_b_i in K_i for every block.
struct ConicProblem {
  int num_vars = 0;
  Vec objective;
  Mat eq_a;  // may have zero rows
  Vec eq_b;
  std::vector<ConeBlock> cones;

  void validate() const {
    require(num_vars >= 1, "conic problem: needs at least one variable");
    require(objective.size() == num_vars, "conic problem: objective dimension mismatch");
    require(eq_a.rows() == eq_b.size(), "conic problem: equality rhs dimension mismatch");
    require(eq_a.rows() == 0 || eq_a.cols() == num_vars,
            "conic problem: equality matrix width mismatch");
    require(!cones.empty(), "conic problem: needs at least one cone");
    bool constraining = false;
    for (const ConeBlock& c : cones) {
      require(c.dim >= 1, "conic problem: cone dimension must be positive");
      require(c.map_a.rows() == c.rows() && c.map_b.size() == c.rows(),
              "conic problem: cone map row count mismatch");
      require(c.map_a.cols() == num_vars, "conic problem: cone map width mismatch");
      if (c.type != ConeType::free_cone) constraining = true;
    }
    require(constraining, "conic problem: needs at least one constraining cone");
  }

  void dump(std::ostream& os) const;
  static ConicProblem load(std::istream& is);
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iters, numerical_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

/// Solver verdict. For optimal/max_iters, primal/dual hold the de-homogenized
/// iterate (dual stacked over all blocks, zeros for free blocks, dual_eq for
/// the equality rows). For infeasible, dual holds the certificate of primal
/// infeasibility; for unbounded, primal holds the improving ray.
struct ConicSolution {
  SolveStatus status = SolveStatus::numerical_failure;
  Vec primal;
  Vec dual;
  Vec dual_eq;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double duality_gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct SolverOptions {
  double feastol = 1e-7;
  double reltol = 1e-6;   // relative duality gap
  double abstol = 1e-9;   // absolute duality gap escape hatch
  int max_iters = 200;
  const Vec* initial_hint = nullptr;  // optional primal seed
};

namespace conic_detail {

struct Block {
  ConeType type;
  int rows;   // rows in the stacked cone vector
  int side;   // psd matrix side (0 otherwise)
  int offset; // start row in the stacked vector
};

struct ConeOps {
  std::vector<Block> blocks;
  int m = 0;
  double degree = 0.0;

  // Scaling state, indexed per block.
  std::vector<Vec> nn_w;
  std::vector<double> soc_eta;
  std::vector<Vec> soc_wbar;
  std::vector<Mat> psd_r, psd_rti;
  Vec lambda;

  void init_layout(const std::vector<ConeBlock>& cones) {
    int off = 0;
    for (const ConeBlock& c : cones) {
      if (c.type == ConeType::free_cone) continue;
      Block b;
      b.type = c.type;
      b.rows = c.rows();
      b.side = c.type == ConeType::psd ? c.dim : 0;
      b.offset = off;
      off += b.rows;
      blocks.push_back(b);
      switch (c.type) {
        case ConeType::nonneg: degree += c.dim; break;
        case ConeType::soc: degree += 1.0; break;
        case ConeType::psd: degree += c.dim; break;
        default: break;
      }
    }
    m = off;
    nn_w.resize(blocks.size());
    soc_eta.resize(blocks.size());
    soc_wbar.resize(blocks.size());
    psd_r.resize(blocks.size());
    psd_rti.resize(blocks.size());
  }

  Vec identity_element() const {
    Vec e = Vec::Zero(m);
    for (const Block& b : blocks) {
      if (b.type == ConeType::nonneg) {
        e.segment(b.offset, b.rows).setOnes();
      } else if (b.type == ConeType::soc) {
        e[b.offset] = 1.0;
      } else {
        e.segment(b.offset, b.rows) = svec(Mat::Identity(b.side, b.side));
      }
    }
    return e;
  }

  // Smallest t such that u + t * e lies in the cone (negative if interior).
  double max_step(const Vec& u) const {
    double t = -std::numeric_limits<double>::infinity();
    for (const Block& b : blocks) {
      auto seg = u.segment(b.offset, b.rows);
      if (b.type == ConeType::nonneg) {
        t = std::max(t, -seg.minCoeff());
      } else if (b.type == ConeType::soc) {
        t = std::max(t, seg.tail(b.rows - 1).norm() - seg[0]);
      } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(smat(seg, b.side));
        t = std::max(t, -es.eigenvalues().minCoeff());
      }
    }
    return t;
  }

  // Largest alpha with u + alpha * d in the cone, for u strictly interior.
  double step_to_boundary(const Vec& u, const Vec& d) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (const Block& b : blocks) {
      auto us = u.segment(b.offset, b.rows);
      auto ds = d.segment(b.offset, b.rows);
      if (b.type == ConeType::nonneg) {
        for (int i = 0; i < b.rows; ++i)
          if (ds[i] < 0.0) alpha = std::min(alpha, -us[i] / ds[i]);
      } else if (b.type == ConeType::soc) {
        const double u0 = us[0], d0 = ds[0];
        const auto u1 = us.tail(b.rows - 1);
        const auto d1 = ds.tail(b.rows - 1);
        const double a2 = d0 * d0 - d1.squaredNorm();
        const double a1 = 2.0 * (u0 * d0 - u1.dot(d1));
        const double a0 = std::max(0.0, u0 * u0 - u1.squaredNorm());
        double root = std::numeric_limits<double>::infinity();
        if (std::abs(a2) < 1e-300) {
          if (a1 < 0.0) root = -a0 / a1;
        } else {
          const double disc = a1 * a1 - 4.0 * a2 * a0;
          if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double r1 = (-a1 - sq) / (2.0 * a2);
            const double r2 = (-a1 + sq) / (2.0 * a2);
            const double lo = std::min(r1, r2), hi = std::max(r1, r2);
            if (lo > 0.0)
              root = lo;
            else if (hi > 0.0 && a2 < 0.0)
              root = hi;
            else if (hi > 0.0 && a2 > 0.0 && lo <= 0.0)
              root = std::numeric_limits<double>::infinity();
          }
        }
        alpha = std::min(alpha, root);
      } else {
        const Mat um = smat(us, b.side);
        const Mat dm = smat(ds, b.side);
        Eigen::LLT<Mat> llt(um);
        if (llt.info() != Eigen::Success) return 0.0;
        const Mat l = llt.matrixL();
        Mat t = l.triangularView<Eigen::Lower>().solve(dm);
        Mat w = l.triangularView<Eigen::Lower>().solve(t.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()));
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
      }
    }
    return alpha;
  }

  /// Nesterov-Todd scaling from a strictly interior primal/dual pair; also
  /// produces the scaled point lambda = W z = W^{-T} s.
  bool compute_scaling(const Vec& s, const Vec& z) {
    lambda.resize(m);
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      auto ss = s.segment(b.offset, b.rows);
      auto zs = z.segment(b.offset, b.rows);
      if (b.type == ConeType::nonneg) {
        if ((ss.array() <= 0.0).any() || (zs.array() <= 0.0).any()) return false;
        nn_w[bi] = (ss.array() / zs.array()).sqrt().matrix();
        lambda.segment(b.offset, b.rows) = (ss.array() * zs.array()).sqrt().matrix();
      } else if (b.type == ConeType::soc) {
        const int d = b.rows;
        const double snrm2 = ss[0] * ss[0] - ss.tail(d - 1).squaredNorm();
        const double znrm2 = zs[0] * zs[0] - zs.tail(d - 1).squaredNorm();
        if (snrm2 <= 0.0 || znrm2 <= 0.0 || ss[0] <= 0.0 || zs[0] <= 0.0) return false;
        const double snrm = std::sqrt(snrm2), znrm = std::sqrt(znrm2);
        Vec sb = ss / snrm, zb = zs / znrm;
        const double gamma = std::sqrt(std::max(0.0, (1.0 + sb.dot(zb)) / 2.0));
        if (gamma <= 0.0) return false;
        Vec wbar(d);
        wbar[0] = (sb[0] + zb[0]) / (2.0 * gamma);
        wbar.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
        soc_eta[bi] = std::sqrt(snrm / znrm);
        soc_wbar[bi] = wbar;
        // lambda = W z computed directly.
        lambda.segment(b.offset, d) = apply_soc(wbar, soc_eta[bi], zs);
      } else {
        const Mat sm = smat(ss, b.side);
        const Mat zm = smat(zs, b.side);
        Eigen::LLT<Mat> ls(sm), lz(zm);
        if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
        const Mat Ls = ls.matrixL();
        const Mat Lz = lz.matrixL();
        Eigen::JacobiSVD<Mat> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec sv = svd.singularValues();
        if (sv.minCoeff() <= 0.0) return false;
        const Vec isq = sv.array().sqrt().inverse().matrix();
        psd_r[bi] = Ls * svd.matrixV() * isq.asDiagonal();
        psd_rti[bi] = Lz * svd.matrixU() * isq.asDiagonal();
        lambda.segment(b.offset, b.rows) = svec(Mat(sv.asDiagonal()));
      }
    }
    return true;
  }

  // The scaling matrix is eta * [w0, w1'; w1, I + w1 w1'/(1+w0)], the
  // hyperbolic square root of 2 wbar wbar' - J.
  static Vec apply_soc(const Vec& wbar, double eta, const Vec& u) {
    const int d = static_cast<int>(u.size());
    const double w0 = wbar[0];
    const auto w1 = wbar.tail(d - 1);
    Vec out(d);
    out[0] = w0 * u[0] + w1.dot(u.tail(d - 1));
    out.tail(d - 1) =
        u[0] * w1 + u.tail(d - 1) + w1 * (w1.dot(u.tail(d - 1)) / (1.0 + w0));
    return eta * out;
  }

  static Vec apply_soc_inv(const Vec& wbar, double eta, const Vec& u) {
    const int d = static_cast<int>(u.size());
    const double w0 = wbar[0];
    const auto w1 = wbar.tail(d - 1);
    Vec out(d);
    out[0] = w0 * u[0] - w1.dot(u.tail(d - 1));
    out.tail(d - 1) =
        -u[0] * w1 + u.tail(d - 1) + w1 * (w1.dot(u.tail(d - 1)) / (1.0 + w0));
    return out / eta;
  }

  enum class WOp { w, wt, winv, winvt };

  Vec apply(WOp op, const Vec& u) const {
    Vec out(m);
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      auto seg = u.segment(b.offset, b.rows);
      if (b.type == ConeType::nonneg) {
        if (op == WOp::w || op == WOp::wt)
          out.segment(b.offset, b.rows) = seg.cwiseProduct(nn_w[bi]);
        else
          out.segment(b.offset, b.rows) = seg.cwiseQuotient(nn_w[bi]);
      } else if (b.type == ConeType::soc) {
        if (op == WOp::w || op == WOp::wt)
          out.segment(b.offset, b.rows) = apply_soc(soc_wbar[bi], soc_eta[bi], seg);
        else
          out.segment(b.offset, b.rows) = apply_soc_inv(soc_wbar[bi], soc_eta[bi], seg);
      } else {
        const Mat um = smat(seg, b.side);
        const Mat& r = psd_r[bi];
        const Mat& rti = psd_rti[bi];
        Mat res;
        switch (op) {
          case WOp::w: res = r.transpose() * um * r; break;
          case WOp::wt: res = r * um * r.transpose(); break;
          case WOp::winv: res = rti * um * rti.transpose(); break;
          case WOp::winvt: res = rti.transpose() * um * rti; break;
        }
        out.segment(b.offset, b.rows) = svec(0.5 * (res + res.transpose()));
      }
    }
    return out;
  }

  /// Dense W^T W, block diagonal in the stacked coordinates.
  Mat quadratic_form() const {
    Mat mm = Mat::Zero(m, m);
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      if (b.type == ConeType::nonneg) {
        mm.block(b.offset, b.offset, b.rows, b.rows) =
            nn_w[bi].cwiseAbs2().asDiagonal();
      } else if (b.type == ConeType::soc) {
        const int d = b.rows;
        Vec jdiag = Vec::Ones(d);
        jdiag.tail(d - 1).setConstant(-1.0);
        // W'W = eta^2 (2 wbar wbar' - J).
        mm.block(b.offset, b.offset, d, d) =
            (soc_eta[bi] * soc_eta[bi]) *
            (2.0 * soc_wbar[bi] * soc_wbar[bi].transpose() - Mat(jdiag.asDiagonal()));
      } else {
        const Mat q = psd_r[bi] * psd_r[bi].transpose();
        const int p = b.side;
        const double inv_rt2 = 1.0 / std::sqrt(2.0);
        int col = 0;
        for (int j = 0; j < p; ++j) {
          for (int i = j; i < p; ++i) {
            Mat img;
            if (i == j)
              img = q.col(i) * q.col(i).transpose();
            else
              img = inv_rt2 * (q.col(i) * q.col(j).transpose() + q.col(j) * q.col(i).transpose());
            mm.block(b.offset, b.offset + col, b.rows, 1) = svec(img);
            ++col;
          }
        }
      }
    }
    return mm;
  }

  Vec jordan_product(const Vec& u, const Vec& v) const {
    Vec out(m);
    for (const Block& b : blocks) {
      auto us = u.segment(b.offset, b.rows);
      auto vs = v.segment(b.offset, b.rows);
      if (b.type == ConeType::nonneg) {
        out.segment(b.offset, b.rows) = us.cwiseProduct(vs);
      } else if (b.type == ConeType::soc) {
        out[b.offset] = us.dot(vs);
        out.segment(b.offset + 1, b.rows - 1) =
            us[0] * vs.tail(b.rows - 1) + vs[0] * us.tail(b.rows - 1);
      } else {
        const Mat um = smat(us, b.side);
        const Mat vm = smat(vs, b.side);
        out.segment(b.offset, b.rows) = svec(0.5 * (um * vm + vm * um));
      }
    }
    return out;
  }

  /// Solves lambda o x = u. For psd blocks lambda is diagonal in matrix form
  /// (it is the NT scaled point), which keeps the Sylvester solve explicit.
  Vec divide_by_lambda(const Vec& u) const {
    Vec out(m);
    for (const Block& b : blocks) {
      auto ls = lambda.segment(b.offset, b.rows);
      auto us = u.segment(b.offset, b.rows);
      if (b.type == ConeType::nonneg) {
        out.segment(b.offset, b.rows) = us.cwiseQuotient(ls);
      } else if (b.type == ConeType::soc) {
        const int d = b.rows;
        const double l0 = ls[0];
        const auto l1 = ls.tail(d - 1);
        const double det = l0 * l0 - l1.squaredNorm();
        const double u0 = us[0];
        const auto u1 = us.tail(d - 1);
        const double x0 = (l0 * u0 - l1.dot(u1)) / det;
        out[b.offset] = x0;
        out.segment(b.offset + 1, d - 1) = (u1 - x0 * l1) / l0;
      } else {
        const Mat lm = smat(ls, b.side);
        const Mat um = smat(us, b.side);
        Mat x(b.side, b.side);
        for (int i = 0; i < b.side; ++i)
          for (int j = 0; j < b.side; ++j) x(i, j) = 2.0 * um(i, j) / (lm(i, i) + lm(j, j));
        out.segment(b.offset, b.rows) = svec(0.5 * (x + x.transpose()));
      }
    }
    return out;
  }
};

}  // namespace conic_detail

/// Interior-point solve of the cone program via the homogeneous self-dual
/// embedding. Reentrant and stateless; a single call is single-threaded.
inline ConicSolution solve(const ConicProblem& problem, const SolverOptions& opts = {}) {
  using conic_detail::ConeOps;
  problem.validate();

  const int n = problem.num_vars;
  const int p = static_cast<int>(problem.eq_a.rows());

  ConeOps cone;
  cone.init_layout(problem.cones);
  const int m = cone.m;

  // Assemble G, h with per-block equilibration (uniform scalar per soc/psd
  // block, per-row for nonneg rows) so mixed-magnitude constraints do not
  // poison the relative stopping criteria.
  Mat g = Mat::Zero(m, n);
  Vec h = Vec::Zero(m);
  std::vector<double> block_scale;
  {
    int off = 0;
    for (const ConeBlock& c : problem.cones) {
      if (c.type == ConeType::free_cone) continue;
      const int rows = c.rows();
      if (c.type == ConeType::nonneg) {
        for (int r = 0; r < rows; ++r) {
          double sc = std::max(1.0, std::max(c.map_a.row(r).cwiseAbs().maxCoeff(),
                                             std::abs(c.map_b[r])));
          g.row(off + r) = -c.map_a.row(r) / sc;
          h[off + r] = c.map_b[r] / sc;
          block_scale.push_back(sc);
        }
      } else {
        double sc = std::max(1.0, std::max(c.map_a.cwiseAbs().maxCoeff(),
                                           c.map_b.cwiseAbs().maxCoeff()));
        g.block(off, 0, rows, n) = -c.map_a / sc;
        h.segment(off, rows) = c.map_b / sc;
        for (int r = 0; r < rows; ++r) block_scale.push_back(sc);
      }
      off += rows;
    }
  }

  Mat a = problem.eq_a;
  if (a.rows() == 0) a = Mat::Zero(0, n);
  Vec b = problem.eq_b;
  std::vector<double> eq_scale(static_cast<std::size_t>(p), 1.0);
  for (int r = 0; r < p; ++r) {
    double sc = std::max(1.0, std::max(a.row(r).cwiseAbs().maxCoeff(), std::abs(b[r])));
    a.row(r) /= sc;
    b[r] /= sc;
    eq_scale[static_cast<std::size_t>(r)] = sc;
  }

  const double cscale = std::max(1.0, problem.objective.cwiseAbs().maxCoeff());
  Vec c = -problem.objective / cscale;  // internal minimize

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, h.norm());
  const int kdim = n + p + m;

  // KKT system with the current scaling in the (3,3) block. The factored
  // copy carries a static quasidefinite regularization; iterative refinement
  // against the true matrix removes its effect, so directions stay accurate
  // even when the barrier collapse drives the system close to singular.
  Mat kkt = Mat::Zero(kdim, kdim);
  kkt.block(0, n, n, p) = a.transpose();
  kkt.block(0, n + p, n, m) = g.transpose();
  kkt.block(n, 0, p, n) = a;
  kkt.block(n + p, 0, m, n) = g;
  Mat kkt_reg;
  const double reg = 1e-10;

  Eigen::PartialPivLU<Mat> lu;
  auto refactor = [&](const Mat& wtw) -> bool {
    kkt.block(n + p, n + p, m, m) = -wtw;
    kkt_reg = kkt;
    for (int i = 0; i < n; ++i) kkt_reg(i, i) += reg;
    for (int i = n; i < kdim; ++i) kkt_reg(i, i) -= reg;
    lu.compute(kkt_reg);
    return true;
  };
  auto kkt_solve = [&](const Vec& bx, const Vec& by, const Vec& bz) -> Vec {
    Vec rhs(kdim);
    rhs << bx, by, bz;
    Vec sol = lu.solve(rhs);
    for (int pass = 0; pass < 3; ++pass) {
      Vec resid = rhs - kkt * sol;
      if (!resid.allFinite() || resid.norm() <= 1e-13 * (rhs.norm() + 1.0)) break;
      sol += lu.solve(resid);
    }
    return sol;
  };

  ConicSolution out;
  const Vec e = cone.identity_element();

  // Initial point: least-norm style solves at identity scaling, pushed
  // strictly inside the cone.
  if (!refactor(Mat::Identity(m, m))) {
    out.status = SolveStatus::numerical_failure;
    return out;
  }
  Vec x, y, s, z;
  {
    Vec sol = kkt_solve(Vec::Zero(n), b, h);
    x = sol.head(n);
    if (opts.initial_hint != nullptr && opts.initial_hint->size() == n) x = *opts.initial_hint;
    s = h - g * x;
    const double ts = cone.max_step(s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;

    Vec sold = kkt_solve(-c, Vec::Zero(p), Vec::Zero(m));
    y = sold.segment(n, p);
    z = sold.tail(m);
    const double tz = cone.max_step(z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0, kappa = 1.0;

  auto finish_iterate = [&](SolveStatus status, double pres, double dres, double relgap,
                            int iters) {
    out.status = status;
    out.iterations = iters;
    out.primal = x / tau;
    out.dual = Vec::Zero(0);
    out.dual_eq = Vec(p);
    for (int r = 0; r < p; ++r)
      out.dual_eq[r] = y[r] / tau * cscale / eq_scale[static_cast<std::size_t>(r)];
    // Expand cone duals over every block (zeros for free blocks), undoing the
    // row equilibration and objective scaling.
    int total_rows = 0;
    for (const ConeBlock& cb : problem.cones) total_rows += cb.rows();
    out.dual = Vec::Zero(total_rows);
    int off_all = 0, off_int = 0;
    for (const ConeBlock& cb : problem.cones) {
      if (cb.type != ConeType::free_cone) {
        for (int r = 0; r < cb.rows(); ++r)
          out.dual[off_all + r] =
              z[off_int + r] / tau * cscale / block_scale[static_cast<std::size_t>(off_int + r)];
        off_int += cb.rows();
      }
      off_all += cb.rows();
    }
    out.objective = problem.objective.dot(out.primal);
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.duality_gap = relgap;
  };

  double best_pres = std::numeric_limits<double>::infinity();
  double best_dres = std::numeric_limits<double>::infinity();
  double best_gap = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= opts.max_iters; ++iter) {
    const Vec rx = a.transpose() * y + g.transpose() * z + c * tau;
    const Vec ry = a * x - b * tau;
    const Vec rz = g * x + s - h * tau;
    const double rt = kappa + c.dot(x) + b.dot(y) + h.dot(z);

    const double pcost = c.dot(x) / tau;
    const double dcost = -(b.dot(y) + h.dot(z)) / tau;
    const double gap_abs = s.dot(z) / (tau * tau);
    const double relgap =
        gap_abs / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;
#ifdef FASOPT_CONIC_TRACE
    std::fprintf(stderr, "it %3d pres %9.2e dres %9.2e gap %9.2e tau %9.2e kappa %9.2e\n",
                 iter, pres, dres, relgap, tau, kappa);
#endif
    best_pres = std::min(best_pres, pres);
    best_dres = std::min(best_dres, dres);
    best_gap = std::min(best_gap, relgap);

    if (pres <= opts.feastol && dres <= opts.feastol &&
        (gap_abs <= opts.abstol || relgap <= opts.reltol)) {
      finish_iterate(SolveStatus::optimal, pres, dres, relgap, iter);
      return out;
    }

    // Infeasibility certificates from the embedding.
    const double hzby = h.dot(z) + b.dot(y);
    if (hzby < 0.0) {
      const double pinfres = (a.transpose() * y + g.transpose() * z).norm() / resx0 / (-hzby);
      if (pinfres <= opts.feastol) {
        out.status = SolveStatus::infeasible;
        out.iterations = iter;
        out.primal = Vec::Zero(n);
        int total_rows = 0;
        for (const ConeBlock& cb : problem.cones) total_rows += cb.rows();
        out.dual = Vec::Zero(total_rows);
        int off_all = 0, off_int = 0;
        for (const ConeBlock& cb : problem.cones) {
          if (cb.type != ConeType::free_cone) {
            for (int r = 0; r < cb.rows(); ++r)
              out.dual[off_all + r] =
                  z[off_int + r] / (-hzby) / block_scale[static_cast<std::size_t>(off_int + r)];
            off_int += cb.rows();
          }
          off_all += cb.rows();
        }
        out.dual_eq = y / (-hzby);
        out.primal_residual = pinfres;
        out.dual_residual = pinfres;
        out.duality_gap = 0.0;
        return out;
      }
    }
    if (c.dot(x) < 0.0) {
      const double dinfres =
          std::max((a * x).norm() / resy0, (g * x + s).norm() / resz0) / (-c.dot(x));
      if (dinfres <= opts.feastol) {
        out.status = SolveStatus::unbounded;
        out.iterations = iter;
        out.primal = x / (-c.dot(x));
        out.dual = Vec::Zero(0);
        out.dual_eq = Vec::Zero(p);
        out.primal_residual = dinfres;
        out.dual_residual = dinfres;
        out.duality_gap = 0.0;
        return out;
      }
    }

    if (iter == opts.max_iters) break;

    if (!cone.compute_scaling(s, z)) {
#ifdef FASOPT_CONIC_TRACE
      std::fprintf(stderr, "  scaling failed at iter %d\n", iter);
#endif
      finish_iterate(SolveStatus::numerical_failure, pres, dres, relgap, iter);
      return out;
    }
    if (!refactor(cone.quadratic_form())) {
#ifdef FASOPT_CONIC_TRACE
      std::fprintf(stderr, "  factorization failed at iter %d\n", iter);
#endif
      finish_iterate(SolveStatus::numerical_failure, pres, dres, relgap, iter);
      return out;
    }

    const double mu = (s.dot(z) + tau * kappa) / (cone.degree + 1.0);
    const Vec u1 = kkt_solve(-c, b, h);
    const double cbh1 = c.dot(u1.head(n)) + b.dot(u1.segment(n, p)) + h.dot(u1.tail(m));
    const double denom = cbh1 - kappa / tau;

    auto newton = [&](double sigma, const Vec* corr, double corr_tk) {
      const Vec lam_lam = cone.jordan_product(cone.lambda, cone.lambda);
      Vec d_comp = sigma * mu * e - lam_lam;
      if (corr != nullptr) d_comp -= *corr;
      const Vec v = cone.divide_by_lambda(d_comp);
      const double theta = 1.0 - sigma;
      const Vec bz = -theta * rz - cone.apply(ConeOps::WOp::wt, v);
      const Vec u2 = kkt_solve(-theta * rx, -theta * ry, bz);
      const double cbh2 = c.dot(u2.head(n)) + b.dot(u2.segment(n, p)) + h.dot(u2.tail(m));
      const double d_tk = sigma * mu - tau * kappa - corr_tk;
      const double dtau = (-theta * rt - d_tk / tau - cbh2) / denom;
      Vec dx = u2.head(n) + dtau * u1.head(n);
      Vec dy = u2.segment(n, p) + dtau * u1.segment(n, p);
      Vec dz = u2.tail(m) + dtau * u1.tail(m);
      Vec ds = cone.apply(ConeOps::WOp::wt, v - cone.apply(ConeOps::WOp::w, dz));
      const double dkappa = (d_tk - kappa * dtau) / tau;
      return std::make_tuple(dx, dy, dz, ds, dtau, dkappa);
    };

    auto max_alpha = [&](const Vec& ds, const Vec& dz, double dtau, double dkappa) {
      const Vec ds_scaled = cone.apply(ConeOps::WOp::winvt, ds);
      const Vec dz_scaled = cone.apply(ConeOps::WOp::w, dz);
      double alpha = std::min(cone.step_to_boundary(cone.lambda, ds_scaled),
                              cone.step_to_boundary(cone.lambda, dz_scaled));
      if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
      if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
      return alpha;
    };

    // Predictor.
    auto [dxa, dya, dza, dsa, dtaua, dkappaa] = newton(0.0, nullptr, 0.0);
    const double alpha_aff = std::min(1.0, max_alpha(dsa, dza, dtaua, dkappaa));
    double sigma = std::pow(std::min(1.0, std::max(0.0, 1.0 - alpha_aff)), 3.0);

    // Corrector with the second-order term from the predictor.
    const Vec corr = cone.jordan_product(cone.apply(ConeOps::WOp::winvt, dsa),
                                         cone.apply(ConeOps::WOp::w, dza));
    const double corr_tk = dtaua * dkappaa;
    auto [dx, dy, dz, ds, dtau, dkappa] = newton(sigma, &corr, corr_tk);

    double alpha = 0.99 * max_alpha(ds, dz, dtau, dkappa);
    alpha = std::min(1.0, alpha);
#ifdef FASOPT_CONIC_TRACE
    std::fprintf(stderr, "      alpha_aff %9.2e sigma %9.2e alpha %9.2e mu %9.2e\n",
                 alpha_aff, sigma, alpha, mu);
#endif
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
#ifdef FASOPT_CONIC_TRACE
      std::fprintf(stderr, "  nonpositive step at iter %d\n", iter);
#endif
      finish_iterate(SolveStatus::numerical_failure, pres, dres, relgap, iter);
      return out;
    }

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (!(tau > 1e-14)) {
      finish_iterate(SolveStatus::numerical_failure, best_pres, best_dres, best_gap, iter);
      return out;
    }
  }

  {
    const Vec rx = a.transpose() * y + g.transpose() * z + c * tau;
    const Vec ry = a * x - b * tau;
    const Vec rz = g * x + s - h * tau;
    const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;
    const double gap_abs = s.dot(z) / (tau * tau);
    const double pcost = c.dot(x) / tau;
    const double dcost = -(b.dot(y) + h.dot(z)) / tau;
    const double relgap =
        gap_abs / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    finish_iterate(SolveStatus::max_iters, pres, dres, relgap, opts.max_iters);
  }
  return out;
}

// --- plain-text capture format -------------------------------------------

inline void ConicProblem::dump(std::ostream& os) const {
  os.precision(17);
  os << "fasopt-conic-v1\n";
  os << "vars " << num_vars << "\n";
  os << "objective";
  for (int i = 0; i < num_vars; ++i) os << " " << objective[i];
  os << "\nequalities " << eq_a.rows() << "\n";
  for (int r = 0; r < eq_a.rows(); ++r) {
    for (int j = 0; j < num_vars; ++j) os << eq_a(r, j) << " ";
    os << eq_b[r] << "\n";
  }
  os << "cones " << cones.size() << "\n";
  for (const ConeBlock& c : cones) {
    const char* tag = c.type == ConeType::free_cone ? "free"
                      : c.type == ConeType::nonneg  ? "nonneg"
                      : c.type == ConeType::soc     ? "soc"
                                                    : "psd";
    os << "cone " << tag << " " << c.dim << "\n";
    for (int r = 0; r < c.rows(); ++r) {
      for (int j = 0; j < num_vars; ++j) os << c.map_a(r, j) << " ";
      os << c.map_b[r] << "\n";
    }
  }
}

inline ConicProblem ConicProblem::load(std::istream& is) {
  std::string tok;
  is >> tok;
  require(tok == "fasopt-conic-v1", "conic load: bad header");
  ConicProblem p;
  is >> tok >> p.num_vars;
  require(tok == "vars", "conic load: expected vars");
  is >> tok;
  require(tok == "objective", "conic load: expected objective");
  p.objective.resize(p.num_vars);
  for (int i = 0; i < p.num_vars; ++i) is >> p.objective[i];
  int neq = 0;
  is >> tok >> neq;
  require(tok == "equalities", "conic load: expected equalities");
  p.eq_a.resize(neq, p.num_vars);
  p.eq_b.resize(neq);
  for (int r = 0; r < neq; ++r) {
    for (int j = 0; j < p.num_vars; ++j) is >> p.eq_a(r, j);
    is >> p.eq_b[r];
  }
  int ncones = 0;
  is >> tok >> ncones;
  require(tok == "cones", "conic load: expected cones");
  for (int ci = 0; ci < ncones; ++ci) {
    std::string type;
    int dim = 0;
    is >> tok >> type >> dim;
    require(tok == "cone", "conic load: expected cone");
    ConeBlock c;
    c.dim = dim;
    if (type == "free")
      c.type = ConeType::free_cone;
    else if (type == "nonneg")
      c.type = ConeType::nonneg;
    else if (type == "soc")
      c.type = ConeType::soc;
    else if (type == "psd")
      c.type = ConeType::psd;
    else
      throw std::invalid_argument("conic load: unknown cone tag " + type);
    c.map_a.resize(c.rows(), p.num_vars);
    c.map_b.resize(c.rows());
    for (int r = 0; r < c.rows(); ++r) {
      for (int j = 0; j < p.num_vars; ++j) is >> c.map_a(r, j);
      is >> c.map_b[r];
    }
    p.cones.push_back(std::move(c));
  }
  require(static_cast<bool>(is), "conic load: truncated document");
  return p;
}

}  // namespace fasopt
