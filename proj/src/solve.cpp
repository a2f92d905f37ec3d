#include "kroninfer/solve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kroninfer/errors.hpp"

namespace kroninfer {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double max_abs_change(std::span<const double> a, std::span<const double> b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

SparseVector nonzeros(std::span<const double> v) {
  SparseVector out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) out.emplace_back(i, v[i]);
  return out;
}

void require_length(std::span<const double> s_vec, const NormalEquations& normal) {
  if (s_vec.size() != normal.theta().output_size())
    throw ShapeError("signal estimate has " + std::to_string(s_vec.size()) + " entries, expected " +
                     std::to_string(normal.theta().output_size()));
}

[[noreturn]] void diverged(const SolveConfig& config, std::size_t iteration) {
  throw DivergenceError(to_string(config.method) + " diverged at iteration " + std::to_string(iteration) +
                        " (eta = " + std::to_string(config.eta) + ", gamma = " + std::to_string(config.gamma) + ")");
}

}  // namespace

std::string to_string(SolveMethod method) { return method == SolveMethod::iht ? "iht" : "lasso"; }

SolveMethod parse_solve_method(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "iht") return SolveMethod::iht;
  if (lower == "lasso") return SolveMethod::lasso;
  throw ParameterError("unknown solver '" + name + "' (expected iht or lasso)");
}

void SolveConfig::validate(std::size_t d) const {
  if (!(eta > 0.0 && eta <= 1.0)) throw ParameterError("eta must lie in (0,1], got " + std::to_string(eta));
  if (sparsity > d * d) throw ParameterError("sparsity budget exceeds d^2");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  if (max_iter == 0) throw ParameterError("max_iter must be at least 1");
}

std::vector<double> hard_threshold_op(std::span<const double> v, std::size_t s) {
  std::vector<double> out(v.size(), 0.0);
  if (s >= v.size()) {
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  if (s == 0) return out;
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto larger = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(v[a]);
    const double mb = std::abs(v[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s), order.end(), larger);
  for (std::size_t i = 0; i < s; ++i) out[order[i]] = v[order[i]];
  return out;
}

std::vector<double> soft_threshold_op(std::span<const double> v, double tau) {
  if (tau < 0.0) throw ParameterError("soft threshold must be non-negative");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double shrunk = std::abs(v[i]) - tau;
    out[i] = shrunk > 0.0 ? std::copysign(shrunk, v[i]) : 0.0;
  }
  return out;
}

std::size_t mismatch_sparsity_budget(std::size_t s, std::size_t d) { return std::min(2 * s * d, d * d); }

NormalEquations::NormalEquations(ThetaOperator theta) : theta_(std::move(theta)), gram_(theta_.gram()) {
  Eigen::JacobiSVD<DenseMatrix> svd(gram_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-12 * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

std::vector<double> NormalEquations::solve(std::span<const double> s, std::span<const double> d) const {
  std::vector<double> rhs_in(s.begin(), s.end());
  if (!d.empty()) {
    if (d.size() != s.size()) throw ShapeError("mismatch term and signal differ in length");
    for (std::size_t i = 0; i < d.size(); ++i) rhs_in[i] -= d[i];
  }
  const std::vector<double> rhs = theta_.adjoint(rhs_in);
  const auto k = static_cast<Eigen::Index>(rhs.size());
  const Eigen::VectorXd x = pinv_ * Eigen::Map<const Eigen::VectorXd>(rhs.data(), k);
  return {x.data(), x.data() + k};
}

std::vector<double> ls_solve_x(std::span<const double> s_vec, std::span<const double> d_vec,
                               const InitiatorParams& params) {
  return NormalEquations(ThetaOperator(params.p, params.shape)).solve(s_vec, d_vec);
}

SolveResult iht_solve(std::span<const double> s_vec, const NormalEquations& normal, const SolveConfig& config) {
  const ThetaOperator& theta = normal.theta();
  config.validate(theta.shape().d());
  require_length(s_vec, normal);
  const std::size_t len = s_vec.size();
  SolveResult result;
  result.x_hat.assign(theta.input_size(), 0.0);
  std::vector<double> d(len, 0.0);
  std::vector<double> theta_x(len, 0.0);
  std::vector<double> q(len);

  for (std::size_t it = 1; it <= config.max_iter; ++it) {
    for (std::size_t i = 0; i < len; ++i) q[i] = (1.0 - config.eta) * d[i] + config.eta * (s_vec[i] - theta_x[i]);
    d = hard_threshold_op(q, config.sparsity);
    std::vector<double> x = normal.solve(s_vec, d);
    if (!all_finite(x)) diverged(config, it);
    theta.apply(x, theta_x);
    double residual = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double r = s_vec[i] - theta_x[i] - d[i];
      residual += r * r;
    }
    result.residual_history.push_back(std::sqrt(residual));
    const double change = max_abs_change(x, result.x_hat);
    result.x_hat = std::move(x);
    result.iterations = it;
    if (change < config.tol) {
      result.converged = true;
      break;
    }
  }
  result.d_hat = nonzeros(d);
  return result;
}

SolveResult lasso_solve(std::span<const double> s_vec, const NormalEquations& normal, const SolveConfig& config) {
  const ThetaOperator& theta = normal.theta();
  config.validate(theta.shape().d());
  require_length(s_vec, normal);
  const std::size_t len = s_vec.size();
  SolveResult result;
  result.x_hat.assign(theta.input_size(), 0.0);
  std::vector<double> d(len, 0.0);
  std::vector<double> theta_x(len, 0.0);
  std::vector<double> r(len);

  for (std::size_t it = 1; it <= config.max_iter; ++it) {
    for (std::size_t i = 0; i < len; ++i) r[i] = s_vec[i] - theta_x[i];
    d = soft_threshold_op(r, config.gamma / 2.0);
    std::vector<double> x = normal.solve(s_vec, d);
    if (!all_finite(x)) diverged(config, it);
    theta.apply(x, theta_x);
    double residual = 0.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = s_vec[i] - theta_x[i] - d[i];
      residual += e * e;
      l1 += std::abs(d[i]);
    }
    result.residual_history.push_back(std::sqrt(residual));
    result.objective_history.push_back(residual + config.gamma * l1);
    const double change = max_abs_change(x, result.x_hat);
    result.x_hat = std::move(x);
    result.iterations = it;
    if (change < config.tol) {
      result.converged = true;
      break;
    }
  }
  result.d_hat = nonzeros(d);
  return result;
}

SolveResult solve(std::span<const double> s_vec, const NormalEquations& normal, const SolveConfig& config) {
  return config.method == SolveMethod::iht ? iht_solve(s_vec, normal, config) : lasso_solve(s_vec, normal, config);
}

SolveResult iht_solve(std::span<const double> s_vec, const InitiatorParams& params, const SolveConfig& config) {
  return iht_solve(s_vec, NormalEquations(ThetaOperator(params.p, params.shape)), config);
}

SolveResult lasso_solve(std::span<const double> s_vec, const InitiatorParams& params, const SolveConfig& config) {
  return lasso_solve(s_vec, NormalEquations(ThetaOperator(params.p, params.shape)), config);
}

}  // namespace kroninfer
