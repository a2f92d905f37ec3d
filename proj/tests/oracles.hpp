#pragma once

// Independent reference computations for the tests: brute-force loops over
// multi-indices, basis differentiation and exhaustive search. None of them
// reuse the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kroninfer/kron_graph.hpp"
#include "kroninfer/rng.hpp"
#include "kroninfer/tensor.hpp"

namespace oracle {

using kroninfer::Dims;
using kroninfer::EvenTensor;

inline EvenTensor random_tensor(kroninfer::SplitMix64& rng, Dims rows, Dims cols, double lo = -1.0, double hi = 1.0) {
  EvenTensor t(std::move(rows), std::move(cols));
  for (double& v : t.data()) v = lo + (hi - lo) * rng.uniform01();
  return t;
}

inline Dims random_dims(kroninfer::SplitMix64& rng, std::size_t modes, std::size_t max_extent) {
  Dims out(modes);
  for (auto& e : out) e = 1 + rng.below(max_extent);
  return out;
}

// Multi-index (first index fastest) of a flat offset.
inline std::vector<std::size_t> unravel(std::size_t flat, const Dims& dims) {
  std::vector<std::size_t> out(dims.size());
  for (std::size_t t = 0; t < dims.size(); ++t) {
    out[t] = flat % dims[t];
    flat /= dims[t];
  }
  return out;
}

// Einstein product straight from the contraction sum.
inline EvenTensor brute_einstein(const EvenTensor& a, const EvenTensor& b) {
  EvenTensor out(a.row_dims(), b.col_dims());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto ii = unravel(i, a.row_dims());
      const auto jj = unravel(j, b.col_dims());
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const auto kk = unravel(k, a.col_dims());
        acc += a(ii, kk) * b(kk, jj);
      }
      out.at(i, j) = acc;
    }
  return out;
}

inline kroninfer::DenseTensor random_dense(kroninfer::SplitMix64& rng, Dims dims) {
  kroninfer::DenseTensor t(std::move(dims));
  for (double& v : t.data()) v = rng.uniform01() * 2.0 - 1.0;
  return t;
}

inline Eigen::MatrixXd random_matrix(kroninfer::SplitMix64& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform01() * 2.0 - 1.0;
  return m;
}

// t x_n u by the defining sum.
inline kroninfer::DenseTensor brute_mode_product(const kroninfer::DenseTensor& t, const Eigen::MatrixXd& u, std::size_t mode) {
  Dims out_dims = t.dims();
  out_dims[mode] = static_cast<std::size_t>(u.rows());
  kroninfer::DenseTensor out(out_dims);
  for (std::size_t e = 0; e < out.size(); ++e) {
    auto idx = unravel(e, out_dims);
    const std::size_t row = idx[mode];
    double acc = 0.0;
    for (std::size_t k = 0; k < t.dims()[mode]; ++k) {
      idx[mode] = k;
      acc += t(idx) * u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k));
    }
    out.data()[e] = acc;
  }
  return out;
}

// [P_1^{(x)K}] entry by entry: every mode index splits into K base digits,
// the first level most significant.
inline EvenTensor brute_kron_power(const EvenTensor& p1, std::size_t K) {
  Dims rows = p1.row_dims();
  Dims cols = p1.col_dims();
  for (auto& e : rows) e = static_cast<std::size_t>(std::pow(e, K) + 0.5);
  for (auto& e : cols) e = static_cast<std::size_t>(std::pow(e, K) + 0.5);
  EvenTensor out(rows, cols);
  for (std::size_t c = 0; c < out.cols(); ++c)
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto ri = unravel(r, rows);
      auto ci = unravel(c, cols);
      double value = 1.0;
      std::vector<std::size_t> rdig(ri.size()), cdig(ci.size());
      for (std::size_t level = 0; level < K; ++level) {
        // digit of level `level` counted from the least significant end
        for (std::size_t t = 0; t < ri.size(); ++t) {
          rdig[t] = ri[t] % p1.row_dims()[t];
          ri[t] /= p1.row_dims()[t];
        }
        for (std::size_t t = 0; t < ci.size(); ++t) {
          cdig[t] = ci[t] % p1.col_dims()[t];
          ci[t] /= p1.col_dims()[t];
        }
        value *= p1(rdig, cdig);
      }
      out.at(r, c) = value;
    }
  return out;
}

// Column i of theta is S_K evaluated at X = e_i (S_K is linear in X).
inline Eigen::MatrixXd theta_by_differentiation(double p, const kroninfer::GraphShape& shape) {
  const std::size_t q = shape.q();
  const std::size_t d = shape.d();
  Eigen::MatrixXd theta(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(q * q));
  for (std::size_t i = 0; i < q * q; ++i) {
    std::vector<double> basis(q * q, 0.0);
    basis[i] = 1.0;
    const kroninfer::InitiatorParams params{p, kroninfer::fluctuation_from_vec(shape, basis), shape};
    const EvenTensor s = kroninfer::signal_tensor(params);
    for (std::size_t e = 0; e < d * d; ++e) theta(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(i)) = s.data()[e];
  }
  return theta;
}

struct PermutedFit {
  std::vector<std::size_t> permutation;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
};

// Exhaustive min over permutations within Hamming distance s_max and all x
// of || s - (pi (x) pi) theta x ||^2.
inline PermutedFit brute_force_permuted_ls(const std::vector<double>& s_vec, double p,
                                           const kroninfer::GraphShape& shape, std::size_t s_max) {
  const std::size_t d = shape.d();
  if (d > 8) throw std::invalid_argument("exhaustive search is limited to d <= 8");
  const Eigen::MatrixXd theta = theta_by_differentiation(p, shape);
  const Eigen::Map<const Eigen::VectorXd> s(s_vec.data(), static_cast<Eigen::Index>(s_vec.size()));
  PermutedFit best;
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    std::size_t moved = 0;
    for (std::size_t u = 0; u < d; ++u) moved += perm[u] != u;
    if (moved > s_max) continue;
    Eigen::MatrixXd m(theta.rows(), theta.cols());
    for (std::size_t v = 0; v < d; ++v)
      for (std::size_t u = 0; u < d; ++u)
        m.row(static_cast<Eigen::Index>(perm[u] + d * perm[v])) = theta.row(static_cast<Eigen::Index>(u + d * v));
    const Eigen::VectorXd x = m.completeOrthogonalDecomposition().solve(s);
    const double objective = (s - m * x).squaredNorm();
    if (objective < best.objective) best = {perm, x, objective};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct PlantedSpikes {
  EvenTensor probability;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
};

// P = pk + sqrt(d) sum_i s ell_i u_i v_i^T with s = sqrt(pk (1 - pk)) and
// orthonormal, centered sign vectors u_i, v_i.
inline PlantedSpikes planted_spikes(std::size_t d, double pk, const std::vector<double>& ells, std::uint64_t seed) {
  kroninfer::SplitMix64 rng(seed);
  const auto r = static_cast<Eigen::Index>(ells.size());
  const auto n = static_cast<Eigen::Index>(d);
  auto basis = [&]() {
    Eigen::MatrixXd b(n, r + 1);
    b.col(0).setOnes();
    for (Eigen::Index j = 1; j <= r; ++j)
      for (Eigen::Index i = 0; i < n; ++i) b(i, j) = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, r + 1);
    return Eigen::MatrixXd(q.rightCols(r));
  };
  PlantedSpikes out{EvenTensor({d}, {d}), basis(), basis()};
  const double s = std::sqrt(pk * (1.0 - pk));
  Eigen::VectorXd strengths(r);
  for (Eigen::Index i = 0; i < r; ++i) strengths(i) = s * ells[static_cast<std::size_t>(i)];
  out.probability.matrix() = (out.left * strengths.asDiagonal() * out.right.transpose()) * std::sqrt(double(d));
  out.probability.matrix().array() += pk;
  return out;
}

}  // namespace oracle
