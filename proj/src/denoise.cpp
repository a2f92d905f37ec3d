#include "kroninfer/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kroninfer/errors.hpp"
#include "kroninfer/kernels.hpp"
#include "kroninfer/rmt.hpp"

namespace kroninfer {
namespace {

constexpr double kClamp = 1e-12;
constexpr double kEdgeMargin = 1e-9;

EvenTensor low_rank(const SpectralTriple& t, const Eigen::VectorXd& weights, std::size_t terms, const EvenTensor& like) {
  EvenTensor out(like.row_dims(), like.col_dims());
  if (terms == 0) return out;
  const auto k = static_cast<Eigen::Index>(terms);
  out.matrix().noalias() = t.left.leftCols(k) * weights.head(k).asDiagonal() * t.right.leftCols(k).transpose();
  return out;
}

}  // namespace

double estimate_pk(const EvenTensor& a) {
  const double total = kernels::omp::sum(a.data(), a.rows());
  const double mean = total / static_cast<double>(a.size());
  return std::clamp(mean, kClamp, 1.0 - kClamp);
}

double estimate_p(double pk_hat, std::size_t K) {
  if (K == 0) throw ParameterError("K must be positive");
  return std::pow(pk_hat, 1.0 / static_cast<double>(K));
}

EvenTensor center_adjacency(const EvenTensor& a, double pk_hat) {
  EvenTensor out(a.row_dims(), a.col_dims());
  kernels::omp::affine(a.data(), pk_hat, 1.0 / std::sqrt(static_cast<double>(a.rows())), out.data());
  return out;
}

SpectralTriple svd_top(const EvenTensor& t, std::size_t r) { return svd_top(t.matrix(), r); }

EvenTensor hard_threshold_estimate(const EvenTensor& abar, std::size_t r) {
  if (r > std::min(abar.rows(), abar.cols()))
    throw ParameterError("rank " + std::to_string(r) + " exceeds the side " + std::to_string(abar.rows()));
  const SpectralTriple t = svd_top(abar, r);
  return low_rank(t, t.sigma, r, abar);
}

std::size_t rank_cap_of(const GraphShape& shape, RankRule rule) {
  const std::size_t d = shape.d();
  if (rule == RankRule::signal_bound) return std::min(d, (shape.q() - 1) * shape.K + 1);
  const double n = static_cast<double>(shape.n());
  const double printed = (n * static_cast<double>(shape.layers()) - 1.0) * std::log(n) + 1.0;
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(printed)), 1, d);
}

DenoiseReport shrinkage_estimate(const EvenTensor& abar, double pk_hat, std::size_t cap, std::size_t K) {
  if (cap == 0) throw ParameterError("rank cap must be at least 1");
  const rmt::NoiseScale scale = rmt::NoiseScale::from_density(pk_hat);
  const std::size_t r = std::min(cap, std::min(abar.rows(), abar.cols()));
  const SpectralTriple t = svd_top(abar, r);

  Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r));
  std::size_t kept = 0;
  while (kept < r && t.sigma(static_cast<Eigen::Index>(kept)) - scale.edge > kEdgeMargin) {
    weights(static_cast<Eigen::Index>(kept)) = rmt::shrinker(t.sigma(static_cast<Eigen::Index>(kept)), scale);
    ++kept;
  }
  return {pk_hat, estimate_p(pk_hat, K), cap, kept, t.sigma, low_rank(t, weights, kept, abar)};
}

}  // namespace kroninfer
