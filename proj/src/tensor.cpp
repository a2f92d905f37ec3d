#include "kroninfer/tensor.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "kroninfer/errors.hpp"
#include "kroninfer/spectral.hpp"

namespace kroninfer {
namespace {

std::string dims_string(const Dims& dims) {
  std::string out = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(dims[i]);
  }
  return out + ")";
}

void require_positive(const Dims& dims) {
  for (auto extent : dims)
    if (extent == 0) throw ShapeError("tensor mode of extent 0 in " + dims_string(dims));
}

std::size_t mixed_radix(const Dims& dims, std::span<const std::size_t> index) {
  if (index.size() != dims.size())
    throw ShapeError("multi-index of length " + std::to_string(index.size()) + " for modes " + dims_string(dims));
  std::size_t linear = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (index[k] >= dims[k]) throw ShapeError("index out of range for modes " + dims_string(dims));
    linear += index[k] * stride;
    stride *= dims[k];
  }
  return linear;
}

// Offset of every entry of a tensor with extents `dims` inside a tensor whose
// mode-k index is digit_k * scale[k] + shift, stored with strides `strides`.
std::vector<std::size_t> scatter_offsets(const Dims& dims, const Dims& scale, const Dims& strides) {
  std::vector<std::size_t> offsets(dims_product(dims));
  Dims index(dims.size(), 0);
  for (std::size_t linear = 0; linear < offsets.size(); ++linear) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) off += index[k] * scale[k] * strides[k];
    offsets[linear] = off;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (++index[k] < dims[k]) break;
      index[k] = 0;
    }
  }
  return offsets;
}

}  // namespace

std::size_t dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Dims dims, double fill) : dims_(std::move(dims)) {
  require_positive(dims_);
  data_.assign(dims_product(dims_), fill);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
  require_positive(dims_);
  if (data_.size() != dims_product(dims_))
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match modes " + dims_string(dims_));
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
  return mixed_radix(dims_, index);
}

EvenTensor::EvenTensor(Dims row_dims, Dims col_dims, double fill)
    : row_dims_(std::move(row_dims)), col_dims_(std::move(col_dims)) {
  require_positive(row_dims_);
  require_positive(col_dims_);
  rows_ = dims_product(row_dims_);
  cols_ = dims_product(col_dims_);
  data_.assign(rows_ * cols_, fill);
}

EvenTensor::EvenTensor(Dims row_dims, Dims col_dims, std::vector<double> data)
    : row_dims_(std::move(row_dims)), col_dims_(std::move(col_dims)), data_(std::move(data)) {
  require_positive(row_dims_);
  require_positive(col_dims_);
  rows_ = dims_product(row_dims_);
  cols_ = dims_product(col_dims_);
  if (data_.size() != rows_ * cols_)
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match " + dims_string(row_dims_) +
                     "x" + dims_string(col_dims_));
  for (double v : data_)
    if (!std::isfinite(v)) throw NumericError("non-finite tensor entry");
}

double EvenTensor::operator()(std::span<const std::size_t> row_index, std::span<const std::size_t> col_index) const {
  return at(row_of(row_index), col_of(col_index));
}

std::size_t EvenTensor::row_of(std::span<const std::size_t> row_index) const {
  return mixed_radix(row_dims_, row_index);
}

std::size_t EvenTensor::col_of(std::span<const std::size_t> col_index) const {
  return mixed_radix(col_dims_, col_index);
}

DenseTensor EvenTensor::to_tensor() const {
  Dims dims = row_dims_;
  dims.insert(dims.end(), col_dims_.begin(), col_dims_.end());
  return DenseTensor(std::move(dims), data_);
}

EvenTensor EvenTensor::from_tensor(DenseTensor t, std::size_t row_modes) {
  const Dims& dims = t.dims();
  if (row_modes > dims.size()) throw ShapeError("row mode count exceeds tensor order");
  Dims rows(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(row_modes));
  Dims cols(dims.begin() + static_cast<std::ptrdiff_t>(row_modes), dims.end());
  if (rows.empty()) rows.push_back(1);
  if (cols.empty()) cols.push_back(1);
  return EvenTensor(std::move(rows), std::move(cols), std::move(t).release());
}

DenseMatrix flatten(const EvenTensor& t) { return t.matrix(); }

EvenTensor unflatten(const DenseMatrix& m, Dims row_dims, Dims col_dims) {
  if (static_cast<std::size_t>(m.rows()) != dims_product(row_dims) ||
      static_cast<std::size_t>(m.cols()) != dims_product(col_dims))
    throw ShapeError("cannot unflatten " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " into " +
                     dims_string(row_dims) + "x" + dims_string(col_dims));
  return EvenTensor(std::move(row_dims), std::move(col_dims), std::vector<double>(m.data(), m.data() + m.size()));
}

EvenTensor einstein_product(const EvenTensor& a, const EvenTensor& b) {
  if (a.col_dims() != b.row_dims())
    throw ShapeError("Einstein product: contracted modes " + dims_string(a.col_dims()) + " vs " +
                     dims_string(b.row_dims()));
  EvenTensor out(a.row_dims(), b.col_dims());
  out.matrix().noalias() = a.matrix() * b.matrix();
  return out;
}

DenseTensor mode_n_product(const DenseTensor& t, const DenseMatrix& u, std::size_t mode) {
  const Dims& dims = t.dims();
  if (mode >= dims.size()) throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                                            std::to_string(dims.size()));
  if (static_cast<std::size_t>(u.cols()) != dims[mode])
    throw ShapeError("mode product: matrix has " + std::to_string(u.cols()) + " columns, mode has extent " +
                     std::to_string(dims[mode]));
  Dims out_dims = dims;
  out_dims[mode] = static_cast<std::size_t>(u.rows());
  DenseTensor out(out_dims);

  std::size_t inner = 1;
  for (std::size_t k = 0; k < mode; ++k) inner *= dims[k];
  const std::size_t outer = t.size() / (inner * dims[mode]);
  const auto in_extent = static_cast<Eigen::Index>(dims[mode]);
  const auto out_extent = u.rows();
  const auto inner_i = static_cast<Eigen::Index>(inner);
  for (std::size_t b = 0; b < outer; ++b) {
    Eigen::Map<const DenseMatrix> slice(t.data().data() + b * inner * dims[mode], inner_i, in_extent);
    Eigen::Map<DenseMatrix> target(out.data().data() + b * inner * out_dims[mode], inner_i, out_extent);
    target.noalias() = slice * u.transpose();
  }
  return out;
}

DenseTensor mode_n_vec_product(const DenseTensor& t, std::span<const double> v, std::size_t mode) {
  const Dims& dims = t.dims();
  if (mode >= dims.size()) throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                                            std::to_string(dims.size()));
  if (v.size() != dims[mode])
    throw ShapeError("mode vector product: vector length " + std::to_string(v.size()) + ", mode extent " +
                     std::to_string(dims[mode]));
  Dims out_dims;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (k != mode) out_dims.push_back(dims[k]);
  DenseTensor out(out_dims);

  std::size_t inner = 1;
  for (std::size_t k = 0; k < mode; ++k) inner *= dims[k];
  const std::size_t extent = dims[mode];
  const std::size_t outer = t.size() / (inner * extent);
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t b = 0; b < outer; ++b)
    for (std::size_t i = 0; i < extent; ++i) {
      const double w = v[i];
      const double* col = src.data() + (b * extent + i) * inner;
      double* target = dst.data() + b * inner;
      for (std::size_t a = 0; a < inner; ++a) target[a] += col[a] * w;
    }
  return out;
}

DenseTensor kron(const DenseTensor& a, const DenseTensor& b) {
  if (a.order() != b.order())
    throw ShapeError("Kronecker product of tensors of order " + std::to_string(a.order()) + " and " +
                     std::to_string(b.order()));
  const std::size_t n = a.order();
  Dims out_dims(n), strides(n), ones(n, 1);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < n; ++k) {
    out_dims[k] = a.dims()[k] * b.dims()[k];
    strides[k] = stride;
    stride *= out_dims[k];
  }
  DenseTensor out(out_dims);
  const auto a_off = scatter_offsets(a.dims(), b.dims(), strides);
  const auto b_off = scatter_offsets(b.dims(), ones, strides);
  auto dst = out.data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t x = 0; x < av.size(); ++x) {
    const double scale = av[x];
    double* base = dst.data() + a_off[x];
    for (std::size_t y = 0; y < bv.size(); ++y) base[b_off[y]] = scale * bv[y];
  }
  return out;
}

EvenTensor kron(const EvenTensor& a, const EvenTensor& b) {
  if (a.row_dims().size() != b.row_dims().size() || a.col_dims().size() != b.col_dims().size())
    throw ShapeError("Kronecker product needs matching row/column mode counts");
  return EvenTensor::from_tensor(kron(a.to_tensor(), b.to_tensor()), a.row_dims().size());
}

std::vector<std::size_t> kron_index_map(const Dims& a_dims, const Dims& b_dims) {
  if (a_dims.size() != b_dims.size()) throw ShapeError("kron_index_map: mode counts differ");
  const std::size_t na = dims_product(a_dims);
  const std::size_t nb = dims_product(b_dims);
  std::vector<std::size_t> map(na * nb);
  Dims ia(a_dims.size()), jb(b_dims.size());
  for (std::size_t ra = 0; ra < na; ++ra) {
    std::size_t rest = ra;
    for (std::size_t k = 0; k < a_dims.size(); ++k) {
      ia[k] = rest % a_dims[k];
      rest /= a_dims[k];
    }
    for (std::size_t rb = 0; rb < nb; ++rb) {
      rest = rb;
      for (std::size_t k = 0; k < b_dims.size(); ++k) {
        jb[k] = rest % b_dims[k];
        rest /= b_dims[k];
      }
      std::size_t target = 0;
      std::size_t stride = 1;
      for (std::size_t k = 0; k < a_dims.size(); ++k) {
        target += (ia[k] * b_dims[k] + jb[k]) * stride;
        stride *= a_dims[k] * b_dims[k];
      }
      map[ra * nb + rb] = target;
    }
  }
  return map;
}

DenseMatrix kron_matrix(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

EvenTensor transpose(const EvenTensor& t) {
  EvenTensor out(t.col_dims(), t.row_dims());
  out.matrix() = t.matrix().transpose();
  return out;
}

EvenTensor identity_tensor(const Dims& dims) {
  EvenTensor out(dims, dims);
  for (std::size_t i = 0; i < out.rows(); ++i) out.at(i, i) = 1.0;
  return out;
}

EvenTensor einstein_inverse(const EvenTensor& t) {
  if (t.rows() != t.cols()) throw SingularError("inverse needs a square flattening");
  Eigen::JacobiSVD<DenseMatrix> svd(t.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const double smax = sigma(0);
  const double smin = sigma(sigma.size() - 1);
  if (!(smin > 0.0) || smax / smin > 1e12) throw SingularError("flattening is numerically singular");
  EvenTensor out(t.col_dims(), t.row_dims());
  out.matrix() = svd.matrixV() * sigma.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  return out;
}

double inner(const EvenTensor& a, const EvenTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("inner product of differently shaped tensors");
  auto x = a.data();
  auto y = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double frobenius_norm(const EvenTensor& t) { return std::sqrt(inner(t, t)); }

double operator_norm(const EvenTensor& t) {
  return svd_top(t.matrix(), 1).sigma(0);
}

}  // namespace kroninfer
