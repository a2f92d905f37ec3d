#pragma once

// Data-parallel inner loops. Each kernel exists twice: `serial` is the plain
// reference kept for tests and benchmarks, `omp` is what the library calls.
//
// The OpenMP variants give every output element to exactly one thread and
// accumulate it in a fixed order, so their results do not depend on the
// number of threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kroninfer/tensor.hpp"

namespace kroninfer::kernels {

/// Per-level digit codes of the flattened indices of a Kronecker power.
///
/// For P_K = P_1^{(x)K} with P_1 row modes (I_1..I_M), the flattened index u
/// of P_K decomposes into one flattened P_1 index per level; level 0 is the
/// most significant factor. [P_K]_{u,v} = prod_k [P_1]_{code(u,k), code(v,k)}.
class LevelCodes {
 public:
  LevelCodes(const Dims& base_dims, std::size_t levels);

  std::size_t extent() const noexcept { return extent_; }  // flattened size of P_K's side
  std::size_t base() const noexcept { return base_; }      // flattened size of P_1's side
  std::size_t levels() const noexcept { return levels_; }
  std::uint32_t code(std::size_t u, std::size_t level) const noexcept { return codes_[u * levels_ + level]; }
  std::span<const std::uint32_t> codes_of(std::size_t u) const noexcept {
    return {codes_.data() + u * levels_, levels_};
  }

 private:
  std::size_t extent_ = 1;
  std::size_t base_ = 1;
  std::size_t levels_ = 0;
  std::vector<std::uint32_t> codes_;
};

namespace serial {

/// Iterated Kronecker power through the tensor-core product.
EvenTensor kron_power(const EvenTensor& p1, std::size_t levels);

/// out[perm[u] + d perm[v]] = 1 if counter_uniform(seed, u + d v) < prob[u + d v].
void bernoulli_sample(std::span<const double> prob, std::size_t d, std::uint64_t seed,
                      std::span<const std::size_t> perm, std::span<double> out);

/// y = A x for column-major A.
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
/// y = A^T x for column-major A.
void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);

double sum(std::span<const double> values);

/// out[u + d v] = scale * sum_k x[code(u,k) + q code(v,k)].
void theta_apply(std::span<const double> x, double scale, const LevelCodes& codes, std::span<double> out);
/// Exact adjoint of theta_apply.
void theta_adjoint(std::span<const double> s, double scale, const LevelCodes& codes, std::span<double> out);

}  // namespace serial

namespace omp {

/// Fills P_K entrywise from the level codes; same product order as the
/// serial iterated power.
void kron_power_fill(std::span<const double> p1_flat, const LevelCodes& row_codes, const LevelCodes& col_codes,
                     std::span<double> out);

void bernoulli_sample(std::span<const double> prob, std::size_t d, std::uint64_t seed,
                      std::span<const std::size_t> perm, std::span<double> out);

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);

/// Column-blocked sum: fixed association regardless of thread count.
double sum(std::span<const double> values, std::size_t rows);

/// out = (a - shift) * scale, entrywise.
void affine(std::span<const double> a, double shift, double scale, std::span<double> out);

void theta_apply(std::span<const double> x, double scale, const LevelCodes& codes, std::span<double> out);
void theta_adjoint(std::span<const double> s, double scale, const LevelCodes& codes, std::span<double> out);

}  // namespace omp

}  // namespace kroninfer::kernels
