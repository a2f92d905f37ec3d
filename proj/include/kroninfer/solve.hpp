#pragma once

// Recovery of vec(X) from a denoised signal estimate under a sparse vertex
// mismatch. The mismatch term vec(D) = (pi (x) pi - I) theta vec(X) is
// handled either with an l0 budget (iterative hard thresholding) or an l1
// penalty (soft thresholding), alternating with least squares in X.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kroninfer/kron_graph.hpp"

namespace kroninfer {

enum class SolveMethod { iht, lasso };

std::string to_string(SolveMethod method);
/// "iht" or "lasso"; throws ParameterError otherwise.
SolveMethod parse_solve_method(const std::string& name);

struct SolveConfig {
  SolveMethod method = SolveMethod::iht;
  double eta = 0.5;
  /// Nonzero budget for vec(D), counted in entries.
  std::size_t sparsity = 0;
  double gamma = 1.0;
  std::size_t max_iter = 500;
  double tol = 1e-8;

  /// Throws ParameterError.
  void validate(std::size_t d) const;
};

using SparseVector = std::vector<std::pair<std::size_t, double>>;

struct SolveResult {
  std::vector<double> x_hat;
  /// Nonzero entries of vec(D), ascending index.
  SparseVector d_hat;
  std::size_t iterations = 0;
  bool converged = false;
  /// ||s - theta x - D||_2 after each iteration.
  std::vector<double> residual_history;
  /// ||s - theta x - D||^2 + gamma ||D||_1 after each iteration (LASSO only).
  std::vector<double> objective_history;
};

/// Keeps the s largest magnitudes; among equal magnitudes the lower index wins.
std::vector<double> hard_threshold_op(std::span<const double> v, std::size_t s);
std::vector<double> soft_threshold_op(std::span<const double> v, double tau);

/// Budget 2 s d for s mismatched vertex-layer labels, capped at d^2.
std::size_t mismatch_sparsity_budget(std::size_t s, std::size_t d);

/// Pseudoinverse of theta^T theta (singular values below 1e-12 sigma_max
/// dropped), cached for repeated least-squares solves.
class NormalEquations {
 public:
  explicit NormalEquations(ThetaOperator theta);

  const ThetaOperator& theta() const noexcept { return theta_; }
  const DenseMatrix& gram() const noexcept { return gram_; }
  /// argmin_x ||s - d - theta x||; an empty d means zero.
  std::vector<double> solve(std::span<const double> s, std::span<const double> d = {}) const;

 private:
  ThetaOperator theta_;
  DenseMatrix gram_;
  DenseMatrix pinv_;
};

std::vector<double> ls_solve_x(std::span<const double> s_vec, std::span<const double> d_vec,
                               const InitiatorParams& params);

SolveResult iht_solve(std::span<const double> s_vec, const NormalEquations& normal, const SolveConfig& config);
SolveResult lasso_solve(std::span<const double> s_vec, const NormalEquations& normal, const SolveConfig& config);
/// Dispatches on config.method.
SolveResult solve(std::span<const double> s_vec, const NormalEquations& normal, const SolveConfig& config);

SolveResult iht_solve(std::span<const double> s_vec, const InitiatorParams& params, const SolveConfig& config);
SolveResult lasso_solve(std::span<const double> s_vec, const InitiatorParams& params, const SolveConfig& config);

}  // namespace kroninfer
