#pragma once

// Estimate p, denoise, solve; plus synthetic runs with known truth and the
// per-point computations behind the shrinkage, residual and spectrum sweeps.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kroninfer/denoise.hpp"
#include "kroninfer/kron_graph.hpp"
#include "kroninfer/solve.hpp"

namespace kroninfer {

struct RunConfig {
  GraphShape shape{2, 1, 12};
  double p = 0.8;
  /// vec(mat(X)), column-major, q^2 values.
  std::vector<double> x{-5.5, 5.5, -1.5, 1.5};
  std::uint64_t seed = 42;
  /// Number of displaced vertex-layer labels.
  std::size_t permutation_s = 0;
  SolveConfig solver;
  std::optional<std::size_t> rank_cap;
  RankRule rank_rule = RankRule::signal_bound;

  InitiatorParams params() const;
  /// Same model with K chosen so the side is d.
  RunConfig at_side(std::size_t d) const;
  std::size_t effective_rank_cap() const;
};

/// p = 0.8, vec(mat(X)) = [-5.5, 5.5, -1.5, 1.5], m = 2, l = 1, K = 12.
RunConfig standard_config();
/// The standard model with X halved, which keeps P_1 inside (0,1) down to
/// d = 256.
RunConfig sweep_config();

/// The permutation a synthetic run with this seed uses.
Permutation synthetic_permutation(const RunConfig& config, std::uint64_t seed);

/// Draws a graph from the configured model: permutation from the seed, then
/// Bernoulli entries. The truth is attached.
GraphSample synthesize(const RunConfig& config, std::uint64_t seed);

struct InferenceOptions {
  SolveConfig solver;
  std::optional<std::size_t> rank_cap;
  RankRule rank_rule = RankRule::signal_bound;
};

struct InferenceResult {
  GraphShape shape;
  double pk_hat = 0.0;
  double p_hat = 0.0;
  DenoiseReport denoise;
  SolveResult solve;
  std::map<std::string, double> metrics;
};

/// Throws ShapeError when the adjacency side is not shape.d().
InferenceResult infer(const GraphSample& sample, const GraphShape& shape, const InferenceOptions& options);

/// x_rel_error, signal_frobenius_error and opnorm_residual against the truth.
std::map<std::string, double> evaluate(const InferenceResult& result, const InitiatorParams& truth,
                                       const GraphSample& sample);

/// Singular values of mat(S_K), (q-1)K+1 of them.
Eigen::VectorXd signal_singular_values(const InitiatorParams& truth);
/// sum_i g(sigma_i(S_K)) at the noise scale of the true p^K.
double shrinkage_theory_error(const InitiatorParams& truth);
/// sigma_i(S_K) / sqrt(p^K (1 - p^K)).
std::vector<double> signal_strengths(const InitiatorParams& truth);

struct ShrinkagePoint {
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double empirical_error = 0.0;
  double theory_error = 0.0;
};
ShrinkagePoint shrinkage_point(const RunConfig& config, std::size_t d, std::uint64_t seed);

struct OpnormPoint {
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double opnorm_residual = 0.0;
};
OpnormPoint opnorm_point(const RunConfig& config, std::size_t d, std::uint64_t seed);

struct SpectrumRun {
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double pk_hat = 0.0;
  /// Singular values of mat(A-bar) / sqrt(pk_hat (1 - pk_hat)), ascending.
  std::vector<double> normalized;
  /// (x, density) of the unit quarter-circle law on [0, 2].
  std::vector<std::pair<double, double>> law;
  /// (ell, predicted normalized location) for every signal strength.
  std::vector<std::pair<double, double>> spikes;
};
SpectrumRun spectrum_run(const RunConfig& config, std::size_t d, std::uint64_t seed);

}  // namespace kroninfer
