#pragma once

#include <cstddef>

#include "kroninfer/kron_graph.hpp"
#include "kroninfer/spectral.hpp"
#include "kroninfer/tensor.hpp"

namespace kroninfer {

/// Mean entry of the adjacency, clamped to [1e-12, 1 - 1e-12].
double estimate_pk(const EvenTensor& a);
/// pk_hat^(1/K).
double estimate_p(double pk_hat, std::size_t K);
/// (A - pk_hat) / sqrt(d), entrywise.
EvenTensor center_adjacency(const EvenTensor& a, double pk_hat);

/// Top-r singular triples of the flattening.
SpectralTriple svd_top(const EvenTensor& t, std::size_t r);
/// Truncated SVD with exactly r terms. Throws ParameterError when r > d.
EvenTensor hard_threshold_estimate(const EvenTensor& abar, std::size_t r);

enum class RankRule {
  /// (q - 1) K + 1: the rank bound of the linearized signal.
  signal_bound,
  /// (n L - 1) ln(n) + 1, capped at d.
  printed,
};

std::size_t rank_cap_of(const GraphShape& shape, RankRule rule = RankRule::signal_bound);

struct DenoiseReport {
  double pk_hat = 0.0;
  double p_hat = 0.0;
  std::size_t rank_cap = 0;
  /// Singular values strictly above the bulk edge (by more than 1e-9).
  std::size_t kept = 0;
  /// The rank_cap leading singular values of the centered adjacency.
  Eigen::VectorXd sigma;
  EvenTensor estimate;
};

/// Replaces the leading rank_cap singular values of abar by the optimal
/// shrinker at the noise scale of pk_hat and drops the rest.
DenoiseReport shrinkage_estimate(const EvenTensor& abar, double pk_hat, std::size_t rank_cap, std::size_t K);

}  // namespace kroninfer
