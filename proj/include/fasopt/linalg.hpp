#pragma once

#include <utility>

#include "fasopt/common.hpp"

namespace fasopt {

/// Real symmetric embedding of a complex Hermitian matrix:
/// [[Re M, -Im M], [Im M, Re M]]. Positive semidefiniteness is preserved in
/// both directions and traces double, so real-valued trace couplings against
/// lifted blocks carry a factor 1/2.
inline Mat hermitian_lift(const CMat& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (hermiticity_defect(m) > 1e-10 * scale)
    throw NumericalError("hermitian_lift: input is not Hermitian");
  const int n = static_cast<int>(m.rows());
  Mat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m.real();
  out.topRightCorner(n, n) = -m.imag();
  out.bottomLeftCorner(n, n) = m.imag();
  out.bottomRightCorner(n, n) = m.real();
  // Exact symmetry regardless of rounding in the Hermitian input.
  out = (0.5 * (out + out.transpose())).eval();
  return out;
}

/// Largest eigenvalue and an associated unit eigenvector of a Hermitian matrix.
inline std::pair<double, CVec> max_eigpair(const CMat& m) {
  CMat sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalError("max_eigpair: eigendecomposition failed");
  const int n = static_cast<int>(m.rows());
  return {es.eigenvalues()[n - 1], es.eigenvectors().col(n - 1)};
}

inline std::pair<double, Vec> max_eigpair(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericalError("max_eigpair: eigendecomposition failed");
  const int n = static_cast<int>(m.rows());
  return {es.eigenvalues()[n - 1], es.eigenvectors().col(n - 1)};
}

// Packed symmetric storage. Column-major lower triangle with sqrt(2) on the
// off-diagonal entries, so that svec(A) . svec(B) = Tr(A B).
inline int svec_dim(int n) { return n * (n + 1) / 2; }

inline Vec svec(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  Vec v(svec_dim(n));
  const double rt2 = std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    v[idx++] = a(j, j);
    for (int i = j + 1; i < n; ++i) v[idx++] = rt2 * 0.5 * (a(i, j) + a(j, i));
  }
  return v;
}

inline Mat smat(const Vec& v, int n) {
  Mat a(n, n);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    a(j, j) = v[idx++];
    for (int i = j + 1; i < n; ++i) {
      a(i, j) = inv_rt2 * v[idx];
      a(j, i) = a(i, j);
      ++idx;
    }
  }
  return a;
}

}  // namespace fasopt
