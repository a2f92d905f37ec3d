#pragma once

// Generalized random Kronecker graphs.
//
// Sizes: an initiator has m nodes and l layers (q = m l), the K-th power has
// n = m^K nodes, L = l^K layers and flattened side d = q^K. Every tensor of
// the model has row modes (nodes, layers) and the same column modes, so the
// flattened index of (i, alpha) is u = i + n alpha.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kroninfer/kernels.hpp"
#include "kroninfer/tensor.hpp"

namespace kroninfer {

struct GraphShape {
  std::size_t m = 2;
  std::size_t l = 1;
  std::size_t K = 1;

  std::size_t q() const noexcept { return m * l; }
  std::size_t n() const;
  std::size_t layers() const;
  std::size_t d() const;
  Dims initiator_dims() const { return {m, l}; }
  Dims power_dims() const { return {n(), layers()}; }

  /// Throws ParameterError on a zero extent or an index space beyond 2^31.
  void validate() const;
  /// Shape with the given (m, l) whose side is d; throws ParameterError when
  /// d is not a power of m l.
  static GraphShape from_side(std::size_t m, std::size_t l, std::size_t d);
};

struct InitiatorParams {
  double p = 0.5;
  /// Fluctuation tensor X, m x l x m x l.
  EvenTensor x;
  GraphShape shape;
};

struct InitiatorLimits {
  /// |sum X| <= centering * q^2 / sqrt(d)
  double centering = 10.0;
  /// max |X| <= x_max
  double x_max = 20.0;
};

/// Builds X from its flattening in column-major order (vec(mat(X))).
EvenTensor fluctuation_from_vec(const GraphShape& shape, std::span<const double> values);

/// Checks p in (0,1), X's shape, the centering condition and the magnitude
/// bound. Throws ParameterError.
void validate(const InitiatorParams& params, const InitiatorLimits& limits = {});

/// P_1 = p + X / sqrt(d). Validates first and names the first entry that
/// leaves (0,1).
EvenTensor build_initiator(const InitiatorParams& params, const InitiatorLimits& limits = {});

/// Bytes allowed for one dense d x d allocation: KRONINFER_MAX_DENSE_BYTES
/// or 2 GiB.
std::size_t dense_budget_bytes();
/// Throws CapacityError when a d x d double matrix exceeds the budget.
void require_dense(std::size_t d, const char* what);

/// P_1^{(x)K} through the level codes. Accepts any initiator values.
EvenTensor kronecker_power(const EvenTensor& p1, std::size_t K);

/// perm[u] is the label vertex-layer u receives; 0-based.
using Permutation = std::vector<std::size_t>;

Permutation identity_permutation(std::size_t d);
/// Uniform permutation displacing exactly s of the d labels. s = 1 is
/// impossible and throws ParameterError.
Permutation random_sparse_permutation(std::size_t d, std::size_t s, std::uint64_t seed);
std::size_t hamming_distance(const Permutation& perm);
bool is_permutation(const Permutation& perm);

/// out(perm[u], perm[v]) = t(u, v) on the flattening.
EvenTensor conjugate(const EvenTensor& t, const Permutation& perm);

struct GraphSample {
  EvenTensor adjacency;
  Permutation permutation;
  std::uint64_t seed = 0;
  std::optional<InitiatorParams> truth;
};

/// Bernoulli draw of every entry of pk, then conjugation by perm. Entry
/// e = u + d v uses counter_uniform(seed, e).
GraphSample sample_adjacency(const EvenTensor& pk, std::uint64_t seed, const Permutation& perm);

/// Same draws as sample_adjacency on kronecker_power(build_initiator(params)),
/// without the dense P_K. Emits flattened (row, col) labels of the edges in
/// canonical order of the unpermuted entries. Returns the edge count.
std::size_t sample_adjacency_streaming(const InitiatorParams& params, std::uint64_t seed, const Permutation& perm,
                                       const std::function<void(std::size_t, std::size_t)>& sink);

/// S_K = (p^{K-1}/d) sum_j J_{q^j} (x) X (x) J_{q^{K-1-j}}, assembled from
/// tensor Kronecker products.
EvenTensor signal_tensor(const InitiatorParams& params);
/// S_1 = X/d, S_k = (p^{k-1}/d) J_{q^{k-1}} (x) X + p S_{k-1} (x) J_q.
EvenTensor signal_tensor_recursive(const InitiatorParams& params);

/// The linear map vec(X) -> vec(S_K) for a fixed (p, shape).
class ThetaOperator {
 public:
  ThetaOperator(double p, const GraphShape& shape);

  std::size_t input_size() const noexcept { return q_ * q_; }
  std::size_t output_size() const noexcept { return d_ * d_; }
  const GraphShape& shape() const noexcept { return shape_; }
  double scale() const noexcept { return scale_; }

  void apply(std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> x) const;
  void adjoint(std::span<const double> s, std::span<double> out) const;
  std::vector<double> adjoint(std::span<const double> s) const;
  /// theta^T theta from the images of the standard basis.
  DenseMatrix gram() const;

 private:
  GraphShape shape_;
  std::size_t q_;
  std::size_t d_;
  double scale_;
  kernels::LevelCodes codes_;
};

std::vector<double> theta_apply(const InitiatorParams& params, std::span<const double> x);
std::vector<double> theta_adjoint_apply(const InitiatorParams& params, std::span<const double> s);
DenseMatrix theta_gram(const InitiatorParams& params);

/// p^K + sqrt(d) S_K.
EvenTensor linearized_pk(const InitiatorParams& params);

}  // namespace kroninfer
