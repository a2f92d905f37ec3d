#include "kroninfer/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kroninfer/errors.hpp"

namespace kroninfer::rmt {

NoiseScale NoiseScale::from_density(double pk) {
  if (!(pk > 0.0 && pk < 1.0)) throw ParameterError("density must lie in (0,1), got " + std::to_string(pk));
  const double s = std::sqrt(pk * (1.0 - pk));
  return {pk, s, 2.0 * s};
}

double quarter_circle_pdf(double x, const NoiseScale& scale) {
  if (x < 0.0 || x > scale.edge) return 0.0;
  const double s2 = scale.s * scale.s;
  return std::sqrt(std::max(0.0, 4.0 * s2 - x * x)) / (s2 * std::numbers::pi);
}

double quarter_circle_cdf(double x, const NoiseScale& scale) {
  if (x <= 0.0) return 0.0;
  if (x >= scale.edge) return 1.0;
  const double s2 = scale.s * scale.s;
  const double area = x * std::sqrt(4.0 * s2 - x * x) / 2.0 + 2.0 * s2 * std::asin(x / scale.edge);
  return std::clamp(area / (std::numbers::pi * s2), 0.0, 1.0);
}

double spike_location(double ell, const NoiseScale& scale) {
  if (ell <= 1.0) return scale.edge;
  return scale.s * (ell + 1.0 / ell);
}

double alignment(double ell) {
  if (ell < 1.0) return 0.0;
  return std::max(0.0, 1.0 - 1.0 / (ell * ell));
}

double shrinker(double t, const NoiseScale& scale) {
  if (t <= scale.edge) return 0.0;
  return std::sqrt(t * t - scale.edge * scale.edge);
}

double asymptotic_error(double t, const NoiseScale& scale) {
  const double s2 = scale.s * scale.s;
  if (t <= scale.s) return t * t;
  return s2 * (2.0 - s2 / (t * t));
}

double ks_distance(std::span<const double> sorted, const NoiseScale& scale) {
  if (sorted.empty()) throw ParameterError("KS distance of an empty sample");
  const double n = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = quarter_circle_cdf(sorted[i], scale);
    worst = std::max({worst, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  return worst;
}

}  // namespace kroninfer::rmt
