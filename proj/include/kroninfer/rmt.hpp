#pragma once

// Closed-form limits for the centered, sqrt(d)-scaled Bernoulli noise with
// entry variance s^2 = pk (1 - pk): the quarter-circle law of its singular
// values, outlier locations and singular-vector alignments of planted
// spikes, and the optimal shrinker with its asymptotic squared error.

#include <span>

namespace kroninfer::rmt {

struct NoiseScale {
  double pk;
  double s;
  double edge;

  /// Throws ParameterError unless 0 < pk < 1.
  static NoiseScale from_density(double pk);
};

double quarter_circle_pdf(double x, const NoiseScale& scale);
double quarter_circle_cdf(double x, const NoiseScale& scale);

/// s (ell + 1/ell) for ell > 1, the bulk edge 2s otherwise.
double spike_location(double ell, const NoiseScale& scale);
/// Limit of the squared cosine between planted and observed singular vectors.
double alignment(double ell);
/// f(t) = sqrt(t^2 - 4 s^2) above the edge, 0 at or below it.
double shrinker(double t, const NoiseScale& scale);
/// g(t) = s^2 (2 - s^2 / t^2) for t > s, t^2 otherwise.
double asymptotic_error(double t, const NoiseScale& scale);

/// sup |F_n - F| for ascending samples. Throws ParameterError when empty.
double ks_distance(std::span<const double> sorted, const NoiseScale& scale);

}  // namespace kroninfer::rmt
