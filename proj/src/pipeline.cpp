#include "kroninfer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kroninfer/errors.hpp"
#include "kroninfer/rmt.hpp"
#include "kroninfer/rng.hpp"
#include "kroninfer/spectral.hpp"

namespace kroninfer {
namespace {

std::uint64_t permutation_seed(std::uint64_t seed) { return mix64(seed ^ 0x7065726d75746521ULL); }

double true_density(const InitiatorParams& truth) {
  return std::pow(truth.p, static_cast<double>(truth.shape.K));
}

// || (A - pk_hat)/sqrt(d) - S^pi - (A - P^pi)/sqrt(d) ||_op
double residual_opnorm(const EvenTensor& a, double pk_hat, const EvenTensor& signal_pi, const EvenTensor& pk_pi) {
  const double root_d = std::sqrt(static_cast<double>(a.rows()));
  EvenTensor r(a.row_dims(), a.col_dims());
  const auto av = a.data();
  const auto sv = signal_pi.data();
  const auto pv = pk_pi.data();
  auto out = r.data();
  for (std::size_t e = 0; e < out.size(); ++e)
    out[e] = (av[e] - pk_hat) / root_d - sv[e] - (av[e] - pv[e]) / root_d;
  return operator_norm(r);
}

double squared_distance(const EvenTensor& a, const EvenTensor& b) {
  const auto av = a.data();
  const auto bv = b.data();
  double out = 0.0;
  for (std::size_t e = 0; e < av.size(); ++e) {
    const double diff = av[e] - bv[e];
    out += diff * diff;
  }
  return out;
}

}  // namespace

InitiatorParams RunConfig::params() const {
  shape.validate();
  return {p, fluctuation_from_vec(shape, x), shape};
}

RunConfig RunConfig::at_side(std::size_t d) const {
  RunConfig out = *this;
  out.shape = GraphShape::from_side(shape.m, shape.l, d);
  return out;
}

std::size_t RunConfig::effective_rank_cap() const { return rank_cap.value_or(rank_cap_of(shape, rank_rule)); }

RunConfig standard_config() { return RunConfig{}; }

RunConfig sweep_config() {
  RunConfig out;
  for (double& v : out.x) v *= 0.5;
  return out;
}

Permutation synthetic_permutation(const RunConfig& config, std::uint64_t seed) {
  return random_sparse_permutation(config.shape.d(), config.permutation_s, permutation_seed(seed));
}

GraphSample synthesize(const RunConfig& config, std::uint64_t seed) {
  const InitiatorParams params = config.params();
  const std::size_t d = params.shape.d();
  require_dense(d, "synthetic graph");
  const Permutation perm = synthetic_permutation(config, seed);
  GraphSample sample = sample_adjacency(kronecker_power(build_initiator(params), params.shape.K), seed, perm);
  sample.truth = params;
  return sample;
}

InferenceResult infer(const GraphSample& sample, const GraphShape& shape, const InferenceOptions& options) {
  shape.validate();
  const std::size_t d = shape.d();
  if (sample.adjacency.rows() != d || sample.adjacency.cols() != d)
    throw ShapeError("adjacency side " + std::to_string(sample.adjacency.rows()) + " does not match (m l)^K = " +
                     std::to_string(d));
  InferenceResult result;
  result.shape = shape;
  result.pk_hat = estimate_pk(sample.adjacency);
  result.p_hat = estimate_p(result.pk_hat, shape.K);
  const std::size_t cap = options.rank_cap.value_or(rank_cap_of(shape, options.rank_rule));
  {
    const EvenTensor abar = center_adjacency(sample.adjacency, result.pk_hat);
    result.denoise = shrinkage_estimate(abar, result.pk_hat, cap, shape.K);
  }
  const NormalEquations normal(ThetaOperator(result.p_hat, shape));
  result.solve = solve(result.denoise.estimate.data(), normal, options.solver);
  return result;
}

std::map<std::string, double> evaluate(const InferenceResult& result, const InitiatorParams& truth,
                                       const GraphSample& sample) {
  if (truth.shape.d() != result.shape.d() || truth.x.size() != result.solve.x_hat.size())
    throw ShapeError("ground truth does not match the inferred model");
  std::map<std::string, double> metrics;

  const auto x = truth.x.data();
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    diff += (result.solve.x_hat[i] - x[i]) * (result.solve.x_hat[i] - x[i]);
    norm += x[i] * x[i];
  }
  metrics["x_rel_error"] = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);

  const EvenTensor signal_pi = conjugate(signal_tensor(truth), sample.permutation);
  metrics["signal_frobenius_error"] = squared_distance(result.denoise.estimate, signal_pi);
  const EvenTensor pk_pi = conjugate(kronecker_power(build_initiator(truth), truth.shape.K), sample.permutation);
  metrics["opnorm_residual"] = residual_opnorm(sample.adjacency, result.pk_hat, signal_pi, pk_pi);
  return metrics;
}

Eigen::VectorXd signal_singular_values(const InitiatorParams& truth) {
  const EvenTensor s = signal_tensor(truth);
  return low_rank_singular_values(s.matrix(), rank_cap_of(truth.shape, RankRule::signal_bound));
}

double shrinkage_theory_error(const InitiatorParams& truth) {
  const rmt::NoiseScale scale = rmt::NoiseScale::from_density(true_density(truth));
  const Eigen::VectorXd sigma = signal_singular_values(truth);
  double total = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) total += rmt::asymptotic_error(sigma(i), scale);
  return total;
}

std::vector<double> signal_strengths(const InitiatorParams& truth) {
  const rmt::NoiseScale scale = rmt::NoiseScale::from_density(true_density(truth));
  const Eigen::VectorXd sigma = signal_singular_values(truth);
  std::vector<double> out(static_cast<std::size_t>(sigma.size()));
  for (Eigen::Index i = 0; i < sigma.size(); ++i) out[static_cast<std::size_t>(i)] = sigma(i) / scale.s;
  return out;
}

ShrinkagePoint shrinkage_point(const RunConfig& config, std::size_t d, std::uint64_t seed) {
  const RunConfig local = config.at_side(d);
  const GraphSample sample = synthesize(local, seed);
  const InitiatorParams& truth = *sample.truth;
  const double pk_hat = estimate_pk(sample.adjacency);
  const DenoiseReport report =
      shrinkage_estimate(center_adjacency(sample.adjacency, pk_hat), pk_hat, local.effective_rank_cap(), local.shape.K);
  const EvenTensor signal_pi = conjugate(signal_tensor(truth), sample.permutation);
  return {d, seed, squared_distance(report.estimate, signal_pi), shrinkage_theory_error(truth)};
}

OpnormPoint opnorm_point(const RunConfig& config, std::size_t d, std::uint64_t seed) {
  const RunConfig local = config.at_side(d);
  const GraphSample sample = synthesize(local, seed);
  const InitiatorParams& truth = *sample.truth;
  const double pk_hat = estimate_pk(sample.adjacency);
  const EvenTensor signal_pi = conjugate(signal_tensor(truth), sample.permutation);
  const EvenTensor pk_pi = conjugate(kronecker_power(build_initiator(truth), truth.shape.K), sample.permutation);
  return {d, seed, residual_opnorm(sample.adjacency, pk_hat, signal_pi, pk_pi)};
}

SpectrumRun spectrum_run(const RunConfig& config, std::size_t d, std::uint64_t seed) {
  const RunConfig local = config.at_side(d);
  SpectrumRun out;
  out.d = d;
  out.seed = seed;
  {
    const GraphSample sample = synthesize(local, seed);
    out.pk_hat = estimate_pk(sample.adjacency);
    const Eigen::VectorXd sigma = singular_values(center_adjacency(sample.adjacency, out.pk_hat).matrix());
    const double s = std::sqrt(out.pk_hat * (1.0 - out.pk_hat));
    out.normalized.resize(static_cast<std::size_t>(sigma.size()));
    for (Eigen::Index i = 0; i < sigma.size(); ++i) out.normalized[static_cast<std::size_t>(i)] = sigma(i) / s;
    std::sort(out.normalized.begin(), out.normalized.end());
  }
  const rmt::NoiseScale unit{0.5, 1.0, 2.0};
  constexpr int points = 200;
  for (int i = 0; i < points; ++i) {
    const double x = 2.0 * i / (points - 1);
    out.law.emplace_back(x, rmt::quarter_circle_pdf(x, unit));
  }
  for (double ell : signal_strengths(local.params())) out.spikes.emplace_back(ell, rmt::spike_location(ell, unit));
  return out;
}

}  // namespace kroninfer
