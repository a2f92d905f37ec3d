#include "kroninfer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "kroninfer/errors.hpp"
#include "kroninfer/kernels.hpp"
#include "kroninfer/rng.hpp"

namespace kroninfer {
namespace {

constexpr std::uint64_t kStartSeed = 0x4b524f4e4c414e43ULL;

void fix_signs(SpectralTriple& t) {
  for (Eigen::Index i = 0; i < t.left.cols(); ++i) {
    Eigen::Index arg = 0;
    t.left.col(i).cwiseAbs().maxCoeff(&arg);
    if (t.left(arg, i) < 0.0) {
      t.left.col(i) *= -1.0;
      t.right.col(i) *= -1.0;
    }
  }
}

SpectralTriple dense_top(Eigen::Ref<const DenseMatrix> a, std::size_t r) {
  Eigen::BDCSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("dense SVD failed to converge");
  const auto k = static_cast<Eigen::Index>(r);
  SpectralTriple out{svd.singularValues().head(k), svd.matrixU().leftCols(k), svd.matrixV().leftCols(k)};
  fix_signs(out);
  return out;
}

// Orthogonalizes w against the first k columns of q, twice.
void reorthogonalize(Eigen::Ref<Eigen::VectorXd> w, const DenseMatrix& q, Eigen::Index k) {
  if (k == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd coeff = q.leftCols(k).transpose() * w;
    w.noalias() -= q.leftCols(k) * coeff;
  }
}

// Fresh unit vector orthogonal to the first k columns of q.
Eigen::VectorXd restart_vector(const DenseMatrix& q, Eigen::Index k, std::uint64_t& counter) {
  Eigen::VectorXd w(q.rows());
  for (;;) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = counter_uniform(kStartSeed, counter++) - 0.5;
    reorthogonalize(w, q, k);
    const double norm = w.norm();
    if (norm > 1e-8) return w / norm;
  }
}

class Lanczos {
 public:
  Lanczos(Eigen::Ref<const DenseMatrix> a, double breakdown)
      : a_(a), rows_(static_cast<std::size_t>(a.rows())), cols_(static_cast<std::size_t>(a.cols())),
        breakdown_(breakdown) {}

  // Runs until the top r Ritz pairs converge or `limit` steps are taken.
  bool run(std::size_t r, std::size_t limit, double tol) {
    std::size_t capacity = std::min(limit, std::max<std::size_t>(2 * r + 40, 64));
    u_.resize(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(capacity));
    v_.resize(static_cast<Eigen::Index>(cols_), static_cast<Eigen::Index>(capacity + 1));
    v_.col(0) = restart_vector(v_, 0, counter_);

    std::size_t next_check = r;
    Eigen::VectorXd wu(static_cast<Eigen::Index>(rows_));
    Eigen::VectorXd wv(static_cast<Eigen::Index>(cols_));
    for (std::size_t k = 0; k < limit; ++k) {
      if (k + 1 > capacity) {
        capacity = std::min(limit, 2 * capacity);
        u_.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(capacity));
        v_.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(capacity + 1));
      }
      const auto kk = static_cast<Eigen::Index>(k);

      kernels::omp::gemv(span_of(a_), rows_, cols_, span_of(v_.col(kk)), span_of(wu));
      if (k > 0) wu -= beta_.back() * u_.col(kk - 1);
      reorthogonalize(wu, u_, kk);
      double alpha = wu.norm();
      if (alpha <= breakdown_) {
        alpha = 0.0;
        wu = restart_vector(u_, kk, counter_);
      } else {
        wu /= alpha;
      }
      u_.col(kk) = wu;
      alpha_.push_back(alpha);

      kernels::omp::gemv_t(span_of(a_), rows_, cols_, span_of(u_.col(kk)), span_of(wv));
      wv -= alpha * v_.col(kk);
      reorthogonalize(wv, v_, kk + 1);
      double beta = wv.norm();
      const std::size_t steps = k + 1;
      if (steps == std::min(rows_, cols_)) {
        beta_.push_back(beta);
        return converged(r, tol) || rows_ == cols_;
      }
      if (beta <= breakdown_) {
        beta = 0.0;
        wv = restart_vector(v_, kk + 1, counter_);
      } else {
        wv /= beta;
      }
      v_.col(kk + 1) = wv;
      beta_.push_back(beta);

      // A restart leaves beta at zero, which says nothing about pairs that
      // the fresh direction has yet to reach.
      if (steps >= next_check && beta > 0.0) {
        if (converged(r, tol)) return true;
        next_check = steps + std::max<std::size_t>(10, steps / 4);
      }
    }
    return false;
  }

  SpectralTriple triple(std::size_t r) const {
    const auto k = static_cast<Eigen::Index>(alpha_.size());
    const auto rr = static_cast<Eigen::Index>(r);
    return {small_.singularValues().head(rr), u_.leftCols(k) * small_.matrixU().leftCols(rr),
            v_.leftCols(k) * small_.matrixV().leftCols(rr)};
  }

 private:
  static std::span<const double> span_of(const Eigen::Ref<const DenseMatrix>& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
  }
  template <class Block>
  static std::span<const double> span_of(const Block& b) {
    return {b.data(), static_cast<std::size_t>(b.size())};
  }
  static std::span<double> span_of(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

  bool converged(std::size_t r, double tol) {
    const auto k = static_cast<Eigen::Index>(alpha_.size());
    DenseMatrix b = DenseMatrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      b(i, i) = alpha_[static_cast<std::size_t>(i)];
      if (i + 1 < k) b(i, i + 1) = beta_[static_cast<std::size_t>(i)];
    }
    small_.compute(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double last_beta = beta_.back();
    const double top = small_.singularValues()(0);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(r); ++i)
      if (std::abs(last_beta * small_.matrixU()(k - 1, i)) > tol * top) return false;
    return true;
  }

  Eigen::Ref<const DenseMatrix> a_;
  std::size_t rows_;
  std::size_t cols_;
  double breakdown_;
  std::uint64_t counter_ = 0;
  DenseMatrix u_;
  DenseMatrix v_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  Eigen::BDCSVD<DenseMatrix> small_;
};

}  // namespace

DenseMatrix SpectralTriple::reconstruct() const {
  return left * sigma.asDiagonal() * right.transpose();
}

SpectralTriple svd_top(Eigen::Ref<const DenseMatrix> a, std::size_t r, const SvdOptions& options) {
  const auto min_side = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (r > min_side)
    throw ParameterError("requested " + std::to_string(r) + " singular triples of a " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " matrix");
  if (!a.allFinite()) throw NumericError("SVD input holds non-finite values");
  if (r == 0) return {Eigen::VectorXd(0), DenseMatrix(a.rows(), 0), DenseMatrix(a.cols(), 0)};
  if (min_side <= options.dense_limit || 4 * r >= min_side) return dense_top(a, r);
  if (a.outerStride() != a.rows()) return svd_top(DenseMatrix(a), r, options);

  const double scale = a.norm();
  if (scale == 0.0) return dense_top(a, r);
  // Past a third of the dimension the dense factorization is cheaper than
  // continuing with full reorthogonalization.
  const std::size_t limit = std::max(std::min(min_side, 4 * r + 100), min_side / 3);
  Lanczos lanczos(a, 1e-12 * scale);
  if (!lanczos.run(r, limit, options.tol)) return dense_top(a, r);
  SpectralTriple out = lanczos.triple(r);
  fix_signs(out);
  return out;
}

Eigen::VectorXd singular_values(Eigen::Ref<const DenseMatrix> a) {
  if (!a.allFinite()) throw NumericError("SVD input holds non-finite values");
  Eigen::BDCSVD<DenseMatrix> svd(a);
  if (svd.info() != Eigen::Success) throw NumericError("dense SVD failed to converge");
  return svd.singularValues();
}

Eigen::VectorXd low_rank_singular_values(Eigen::Ref<const DenseMatrix> a, std::size_t rank_bound) {
  if (!a.allFinite()) throw NumericError("SVD input holds non-finite values");
  const auto min_side = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (rank_bound > min_side) throw ParameterError("rank bound exceeds the matrix side");
  const auto width = static_cast<Eigen::Index>(std::min(min_side, rank_bound + 10));
  if (static_cast<std::size_t>(width) == min_side) return singular_values(a).head(static_cast<Eigen::Index>(rank_bound));
  if (a.outerStride() != a.rows()) return low_rank_singular_values(DenseMatrix(a), rank_bound);

  SplitMix64 rng(kStartSeed);
  DenseMatrix omega(a.cols(), width);
  for (Eigen::Index j = 0; j < width; ++j)
    for (Eigen::Index i = 0; i < a.cols(); ++i) omega(i, j) = rng.normal();
  DenseMatrix y(a.rows(), width);
  for (Eigen::Index j = 0; j < width; ++j) {
    Eigen::VectorXd col(a.rows());
    kernels::omp::gemv({a.data(), static_cast<std::size_t>(a.size())}, static_cast<std::size_t>(a.rows()),
                       static_cast<std::size_t>(a.cols()), {omega.col(j).data(), static_cast<std::size_t>(a.cols())},
                       {col.data(), static_cast<std::size_t>(a.rows())});
    y.col(j) = col;
  }
  const Eigen::HouseholderQR<DenseMatrix> qr(y);
  const DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(a.rows(), width);
  DenseMatrix b(width, a.cols());
  for (Eigen::Index i = 0; i < width; ++i) {
    Eigen::VectorXd row(a.cols());
    kernels::omp::gemv_t({a.data(), static_cast<std::size_t>(a.size())}, static_cast<std::size_t>(a.rows()),
                         static_cast<std::size_t>(a.cols()), {q.col(i).data(), static_cast<std::size_t>(a.rows())},
                         {row.data(), static_cast<std::size_t>(a.cols())});
    b.row(i) = row.transpose();
  }
  Eigen::VectorXd values = singular_values(b);
  return values.head(static_cast<Eigen::Index>(rank_bound));
}

}  // namespace kroninfer
