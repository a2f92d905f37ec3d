#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kroninfer/errors.hpp"
#include "kroninfer/rng.hpp"
#include "kroninfer/spectral.hpp"

using namespace kroninfer;

namespace {

DenseMatrix gaussian(SplitMix64& rng, Eigen::Index r, Eigen::Index c) {
  DenseMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

DenseMatrix orthonormal(SplitMix64& rng, Eigen::Index n, Eigen::Index k) {
  const Eigen::HouseholderQR<DenseMatrix> qr(gaussian(rng, n, k));
  return qr.householderQ() * DenseMatrix::Identity(n, k);
}

}  // namespace

TEST_CASE("Lanczos path matches the dense SVD on a noisy low-rank matrix") {
  SplitMix64 rng(21);
  const Eigen::Index n = 600;
  const DenseMatrix u = orthonormal(rng, n, 5);
  const DenseMatrix v = orthonormal(rng, n, 5);
  Eigen::VectorXd s(5);
  s << 40, 30, 25, 20, 15;
  const DenseMatrix a = u * s.asDiagonal() * v.transpose() + gaussian(rng, n, n) / std::sqrt(double(n));

  const Eigen::VectorXd reference = singular_values(a);
  const SpectralTriple top = svd_top(a, 8);
  REQUIRE(top.size() == 8);
  for (Eigen::Index i = 0; i < 8; ++i) CHECK(top.sigma(i) == doctest::Approx(reference(i)).epsilon(1e-9));
  CHECK((top.left.transpose() * top.left - DenseMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((top.right.transpose() * top.right - DenseMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 0; i < 8; ++i)
    CHECK((a * top.right.col(i) - top.sigma(i) * top.left.col(i)).norm() < 1e-8 * top.sigma(0));
}

TEST_CASE("repeated singular values are all found") {
  SplitMix64 rng(22);
  const Eigen::Index n = 400;
  const DenseMatrix u = orthonormal(rng, n, 6);
  const DenseMatrix v = orthonormal(rng, n, 6);
  Eigen::VectorXd s(6);
  s << 5, 2, 2, 2, 1, 1;
  const DenseMatrix a = u * s.asDiagonal() * v.transpose();
  const SpectralTriple top = svd_top(a, 6);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(top.sigma(i) == doctest::Approx(s(i)).epsilon(1e-9));
  CHECK((top.reconstruct() - a).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::VectorXd sketch = low_rank_singular_values(a, 6);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(sketch(i) == doctest::Approx(s(i)).epsilon(1e-10));
}

TEST_CASE("rank-one and all-ones inputs") {
  SplitMix64 rng(23);
  const DenseMatrix u = orthonormal(rng, 300, 1);
  const DenseMatrix v = orthonormal(rng, 300, 1);
  const DenseMatrix a = 7.0 * u * v.transpose();
  const SpectralTriple t = svd_top(a, 1);
  CHECK(t.sigma(0) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(std::abs(std::abs(t.left.col(0).dot(u.col(0))) - 1.0) < 1e-10);
  CHECK(std::abs(std::abs(t.right.col(0).dot(v.col(0))) - 1.0) < 1e-10);

  const SpectralTriple ones = svd_top(DenseMatrix::Ones(4, 4), 4);
  CHECK(ones.sigma(0) == doctest::Approx(4.0));
  for (Eigen::Index i = 1; i < 4; ++i) CHECK(std::abs(ones.sigma(i)) < 1e-12);
}

TEST_CASE("full reconstruction and sign convention") {
  SplitMix64 rng(24);
  const DenseMatrix a = gaussian(rng, 30, 30);
  const SpectralTriple t = svd_top(a, 30);
  CHECK((t.reconstruct() - a).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 0; i < 30; ++i) {
    Eigen::Index arg = 0;
    t.left.col(i).cwiseAbs().maxCoeff(&arg);
    CHECK(t.left(arg, i) > 0.0);
  }
}

TEST_CASE("zero matrix, bad rank and non-finite input") {
  const SpectralTriple z = svd_top(DenseMatrix::Zero(500, 500), 3);
  CHECK(z.sigma.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(svd_top(DenseMatrix::Zero(3, 3), 4), ParameterError);
  DenseMatrix bad = DenseMatrix::Zero(3, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(svd_top(bad, 1), NumericError);
}

TEST_CASE("results are deterministic") {
  SplitMix64 rng(25);
  const DenseMatrix a = gaussian(rng, 500, 500);
  const SpectralTriple first = svd_top(a, 4);
  const SpectralTriple second = svd_top(a, 4);
  CHECK(first.sigma == second.sigma);
  CHECK(first.left == second.left);
}
