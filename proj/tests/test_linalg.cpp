#include <catch_amalgamated.hpp>

#include "fasopt/linalg.hpp"
#include "fasopt/rng.hpp"

using namespace fasopt;

namespace {
CMat random_hermitian(Pcg32& rng, int n) {
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.complex_normal(1.0);
  return 0.5 * (a + a.adjoint());
}
}  // namespace

TEST_CASE("lift of the complex identity") {
  CMat m = CMat::Identity(2, 2);
  CHECK((hermitian_lift(m) - Mat::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("lift keeps the spectrum with doubled multiplicity") {
  CMat m(2, 2);
  m << cd(0, 0), cd(0, -1), cd(0, 1), cd(0, 0);
  Mat lifted = hermitian_lift(m);
  Eigen::SelfAdjointEigenSolver<Mat> es(lifted);
  Vec ev = es.eigenvalues();
  CHECK(ev[0] == Catch::Approx(-1.0));
  CHECK(ev[1] == Catch::Approx(-1.0));
  CHECK(ev[2] == Catch::Approx(1.0));
  CHECK(ev[3] == Catch::Approx(1.0));
}

TEST_CASE("lift preserves positive semidefiniteness") {
  Pcg32 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    CMat b(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) b(i, j) = rng.complex_normal(1.0);
    CMat psd = b * b.adjoint();
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_lift(psd));
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
  }
  CMat skew(2, 2);
  skew << cd(1, 0), cd(1, 1), cd(2, 0), cd(1, 0);
  CHECK_THROWS_AS(hermitian_lift(skew), NumericalError);
}

TEST_CASE("lift trace convention carries the half factor") {
  Pcg32 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    CMat a = random_hermitian(rng, 4);
    CMat b = random_hermitian(rng, 4);
    const double real_side = (hermitian_lift(a) * hermitian_lift(b)).trace() / 2.0;
    const double complex_side = (a * b).trace().real();
    CHECK(real_side == Catch::Approx(complex_side).margin(1e-10));
  }
}

TEST_CASE("largest eigenpair on easy matrices") {
  CMat d = CMat::Zero(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 3.0;
  d(2, 2) = 2.0;
  auto [lmax, u] = max_eigpair(d);
  CHECK(lmax == Catch::Approx(3.0));
  CHECK(std::abs(u[1]) == Catch::Approx(1.0));

  Pcg32 rng(3);
  CVec v(4);
  for (int i = 0; i < 4; ++i) v[i] = rng.complex_normal(1.0);
  auto [l1, u1] = max_eigpair(CMat(v * v.adjoint()));
  CHECK(l1 == Catch::Approx(v.squaredNorm()).epsilon(1e-10));
  CHECK(std::abs(std::abs(u1.dot(v)) / v.norm() - 1.0) < 1e-9);
}

TEST_CASE("largest eigenpair beats random Rayleigh quotients") {
  Pcg32 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    CMat m = random_hermitian(rng, 5);
    auto [lmax, u] = max_eigpair(m);
    CHECK((m * u - lmax * u).norm() <= 1e-9 * std::max(1.0, m.norm()));
    for (int probe = 0; probe < 100; ++probe) {
      CVec r(5);
      for (int i = 0; i < 5; ++i) r[i] = rng.complex_normal(1.0);
      r.normalize();
      CHECK(lmax >= (r.adjoint() * m * r)(0).real() - 1e-9);
    }
  }
}

TEST_CASE("svec round trip and inner product") {
  Pcg32 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Mat a(4, 4), b(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        a(i, j) = rng.normal();
        b(i, j) = rng.normal();
      }
    a = (0.5 * (a + a.transpose())).eval();
    b = (0.5 * (b + b.transpose())).eval();
    CHECK((smat(svec(a), 4) - a).norm() < 1e-14);
    CHECK(svec(a).dot(svec(b)) == Catch::Approx((a * b).trace()).margin(1e-12));
  }
}
