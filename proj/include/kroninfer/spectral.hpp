#pragma once

#include <Eigen/Dense>

#include <cstddef>

#include "kroninfer/tensor.hpp"

namespace kroninfer {

/// Leading singular triples, sigma descending. Columns of left/right are
/// orthonormal; each left vector's largest-magnitude entry is positive.
struct SpectralTriple {
  Eigen::VectorXd sigma;
  DenseMatrix left;
  DenseMatrix right;

  std::size_t size() const noexcept { return static_cast<std::size_t>(sigma.size()); }
  /// sum_i sigma_i u_i v_i^T
  DenseMatrix reconstruct() const;
};

struct SvdOptions {
  /// Ritz pairs are accepted once ||A^T u - sigma v|| <= tol * sigma_1.
  double tol = 1e-10;
  /// Problems whose smaller side is at most this size use a dense SVD.
  std::size_t dense_limit = 256;
};

/// Top-r singular triples. Small problems (or r large relative to the
/// matrix) go through a dense divide-and-conquer SVD; large ones through
/// Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization,
/// extended until every requested Ritz pair has converged.
/// Throws NumericError when the input holds non-finite values.
SpectralTriple svd_top(Eigen::Ref<const DenseMatrix> a, std::size_t r, const SvdOptions& options = {});

/// All singular values, descending.
Eigen::VectorXd singular_values(Eigen::Ref<const DenseMatrix> a);

/// Singular values of a matrix known to have rank at most rank_bound,
/// through a Gaussian sketch of width rank_bound + 10 and a pivoted QR.
/// Exact up to rounding when the bound holds; returns rank_bound values.
Eigen::VectorXd low_rank_singular_values(Eigen::Ref<const DenseMatrix> a, std::size_t rank_bound);

}  // namespace kroninfer
