#pragma once

// Dense even-order tensor algebra.
//
// Storage convention: every tensor stores its entries with the first index
// varying fastest. For an EvenTensor with row modes (I_1..I_M) and column
// modes (J_1..J_M) this is exactly the column-major layout of its flattening
// mat(A), whose row index is i = i_1 + sum_p i_p * prod_{q<p} I_q (0-based) and
// whose column index is built the same way from the j's. Flattening is
// therefore a copy, and the Einstein product, transpose, inverse and norms all
// run on the matricized form.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace kroninfer {

using Dims = std::vector<std::size_t>;
using DenseMatrix = Eigen::MatrixXd;

/// Product of the entries; 1 for an empty list.
std::size_t dims_product(const Dims& dims);

/// Tensor of arbitrary order N (dims may be empty: a scalar).
class DenseTensor {
 public:
  DenseTensor() : data_(1, 0.0) {}
  explicit DenseTensor(Dims dims, double fill = 0.0);
  DenseTensor(Dims dims, std::vector<double> data);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t order() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  std::size_t linear_index(std::span<const std::size_t> index) const;
  double operator()(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }
  double& operator()(std::span<const std::size_t> index) { return data_[linear_index(index)]; }

  std::vector<double> release() && { return std::move(data_); }

 private:
  Dims dims_;
  std::vector<double> data_;
};

/// Tensor in R^{I_1 x .. x I_M x J_1 x .. x J_M'} with an explicit split
/// between row modes and column modes. M = M' for every tensor the graph
/// model builds, but the algebra only needs the split.
class EvenTensor {
 public:
  EvenTensor() : EvenTensor(Dims{1}, Dims{1}) {}
  EvenTensor(Dims row_dims, Dims col_dims, double fill = 0.0);
  /// Throws ShapeError on a length mismatch and NumericError on non-finite data.
  EvenTensor(Dims row_dims, Dims col_dims, std::vector<double> data);

  static EvenTensor ones(Dims row_dims, Dims col_dims) {
    return EvenTensor(std::move(row_dims), std::move(col_dims), 1.0);
  }

  const Dims& row_dims() const noexcept { return row_dims_; }
  const Dims& col_dims() const noexcept { return col_dims_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t order() const noexcept { return row_dims_.size() + col_dims_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Entry of the flattened matrix (0-based).
  double at(std::size_t row, std::size_t col) const { return data_[row + rows_ * col]; }
  double& at(std::size_t row, std::size_t col) { return data_[row + rows_ * col]; }

  /// Entry at a multi-index (0-based per mode).
  double operator()(std::span<const std::size_t> row_index, std::span<const std::size_t> col_index) const;

  /// Flattened row (or column) index of a row (or column) multi-index.
  std::size_t row_of(std::span<const std::size_t> row_index) const;
  std::size_t col_of(std::span<const std::size_t> col_index) const;

  Eigen::Map<const DenseMatrix> matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }
  Eigen::Map<DenseMatrix> matrix() {
    return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }

  bool same_shape(const EvenTensor& other) const noexcept {
    return row_dims_ == other.row_dims_ && col_dims_ == other.col_dims_;
  }

  DenseTensor to_tensor() const;
  /// Splits the modes of t after the first `row_modes`.
  static EvenTensor from_tensor(DenseTensor t, std::size_t row_modes);

 private:
  Dims row_dims_;
  Dims col_dims_;
  std::size_t rows_ = 1;
  std::size_t cols_ = 1;
  std::vector<double> data_;
};

DenseMatrix flatten(const EvenTensor& t);
/// Inverse of flatten. Throws ShapeError when the dimension products differ.
EvenTensor unflatten(const DenseMatrix& m, Dims row_dims, Dims col_dims);

/// a *_M b, contracting the column modes of a against the row modes of b.
EvenTensor einstein_product(const EvenTensor& a, const EvenTensor& b);

/// t x_n u with mode n 0-based: mode n of size I_n becomes u.rows().
DenseTensor mode_n_product(const DenseTensor& t, const DenseMatrix& u, std::size_t mode);
/// Contracts mode n against v; the result has order N-1.
DenseTensor mode_n_vec_product(const DenseTensor& t, std::span<const double> v, std::size_t mode);

/// Left Kronecker product of equal-order tensors. Mode k of the result has
/// size I_k J_k and composite index i_k * J_k + j_k (b's index fastest).
DenseTensor kron(const DenseTensor& a, const DenseTensor& b);
/// Mode-wise Kronecker product of even tensors with matching mode counts.
EvenTensor kron(const EvenTensor& a, const EvenTensor& b);

/// Index map relating the two Kronecker conventions. With
/// rmap = kron_index_map(a.row_dims(), b.row_dims()) and cmap likewise,
///   flatten(kron(a, b))(rmap[x], cmap[y]) == kron(flatten(a), flatten(b))(x, y).
/// The map is the identity when every mode after the first has extent 1 in
/// both operands (order-2 tensors, single-layer graphs).
std::vector<std::size_t> kron_index_map(const Dims& a_dims, const Dims& b_dims);

/// Matrix Kronecker product, b's index fastest.
DenseMatrix kron_matrix(const DenseMatrix& a, const DenseMatrix& b);

EvenTensor transpose(const EvenTensor& t);
EvenTensor identity_tensor(const Dims& dims);
/// Throws SingularError when the flattening is not square or its condition
/// number exceeds 1e12.
EvenTensor einstein_inverse(const EvenTensor& t);

double inner(const EvenTensor& a, const EvenTensor& b);
double frobenius_norm(const EvenTensor& t);
/// Largest singular value of flatten(t).
double operator_norm(const EvenTensor& t);

}  // namespace kroninfer
