#include "kroninfer/kron_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

#include "kroninfer/errors.hpp"
#include "kroninfer/rng.hpp"

namespace kroninfer {
namespace {

constexpr std::size_t kMaxSide = std::size_t{1} << 31;

std::size_t checked_power(std::size_t base, std::size_t exponent) {
  std::size_t out = 1;
  for (std::size_t k = 0; k < exponent; ++k) {
    if (out > kMaxSide / std::max<std::size_t>(base, 1))
      throw ParameterError("graph side " + std::to_string(base) + "^" + std::to_string(exponent) + " is too large");
    out *= base;
  }
  return out;
}

Dims power_of(const Dims& dims, std::size_t k) {
  Dims out;
  out.reserve(dims.size());
  for (std::size_t e : dims) out.push_back(checked_power(e, k));
  return out;
}

EvenTensor ones_level(const GraphShape& shape, std::size_t levels) {
  const Dims dims{checked_power(shape.m, levels), checked_power(shape.l, levels)};
  return EvenTensor::ones(dims, dims);
}

void require_shape(const InitiatorParams& params) {
  params.shape.validate();
  const Dims expected = params.shape.initiator_dims();
  if (params.x.row_dims() != expected || params.x.col_dims() != expected)
    throw ShapeError("fluctuation tensor must be " + std::to_string(params.shape.m) + "x" +
                     std::to_string(params.shape.l) + "x" + std::to_string(params.shape.m) + "x" +
                     std::to_string(params.shape.l));
}

}  // namespace

std::size_t GraphShape::n() const { return checked_power(m, K); }
std::size_t GraphShape::layers() const { return checked_power(l, K); }
std::size_t GraphShape::d() const { return checked_power(q(), K); }

void GraphShape::validate() const {
  if (m == 0 || l == 0 || K == 0) throw ParameterError("m, l and K must all be positive");
  (void)d();
}

GraphShape GraphShape::from_side(std::size_t m, std::size_t l, std::size_t d) {
  const std::size_t q = m * l;
  if (q < 2) throw ParameterError("m*l must be at least 2 to infer K from the side");
  std::size_t K = 0;
  std::size_t side = 1;
  while (side < d) {
    side *= q;
    ++K;
  }
  if (side != d || K == 0)
    throw ParameterError("side " + std::to_string(d) + " is not a positive power of m*l = " + std::to_string(q));
  return {m, l, K};
}

EvenTensor fluctuation_from_vec(const GraphShape& shape, std::span<const double> values) {
  const std::size_t q = shape.q();
  if (values.size() != q * q)
    throw ShapeError("fluctuation needs " + std::to_string(q * q) + " values, got " + std::to_string(values.size()));
  return EvenTensor(shape.initiator_dims(), shape.initiator_dims(), std::vector<double>(values.begin(), values.end()));
}

void validate(const InitiatorParams& params, const InitiatorLimits& limits) {
  require_shape(params);
  if (!(params.p > 0.0 && params.p < 1.0)) throw ParameterError("p must lie in (0,1), got " + std::to_string(params.p));
  const auto x = params.x.data();
  double total = 0.0;
  double largest = 0.0;
  for (double v : x) {
    total += v;
    largest = std::max(largest, std::abs(v));
  }
  if (largest > limits.x_max)
    throw ParameterError("max |X| = " + std::to_string(largest) + " exceeds " + std::to_string(limits.x_max));
  const double q = static_cast<double>(params.shape.q());
  const double bound = limits.centering * q * q / std::sqrt(static_cast<double>(params.shape.d()));
  if (std::abs(total) > bound)
    throw ParameterError("X is not centered: |sum X| = " + std::to_string(std::abs(total)) + " > " +
                         std::to_string(bound));
}

EvenTensor build_initiator(const InitiatorParams& params, const InitiatorLimits& limits) {
  validate(params, limits);
  const double root_d = std::sqrt(static_cast<double>(params.shape.d()));
  EvenTensor p1(params.x.row_dims(), params.x.col_dims());
  const auto x = params.x.data();
  auto out = p1.data();
  const std::size_t m = params.shape.m;
  const std::size_t q = params.shape.q();
  for (std::size_t e = 0; e < out.size(); ++e) {
    out[e] = params.p + x[e] / root_d;
    if (!(out[e] > 0.0 && out[e] < 1.0)) {
      const std::size_t row = e % q;
      const std::size_t col = e / q;
      throw ParameterError("initiator entry (i,alpha,j,beta) = (" + std::to_string(row % m + 1) + "," +
                           std::to_string(row / m + 1) + "," + std::to_string(col % m + 1) + "," +
                           std::to_string(col / m + 1) + ") = " + std::to_string(out[e]) + " is outside (0,1)");
    }
  }
  return p1;
}

std::size_t dense_budget_bytes() {
  constexpr std::size_t fallback = std::size_t{2} << 30;
  const char* raw = std::getenv("KRONINFER_MAX_DENSE_BYTES");
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') throw FormatError(std::string("KRONINFER_MAX_DENSE_BYTES is not a byte count: ") + raw);
  return static_cast<std::size_t>(value);
}

void require_dense(std::size_t d, const char* what) {
  const std::size_t budget = dense_budget_bytes();
  if (d != 0 && (d > budget / sizeof(double) / d))
    throw CapacityError(std::string(what) + ": a dense " + std::to_string(d) + "x" + std::to_string(d) +
                        " matrix exceeds the " + std::to_string(budget) + "-byte budget");
}

EvenTensor kronecker_power(const EvenTensor& p1, std::size_t K) {
  if (K == 0) throw ParameterError("Kronecker power needs K >= 1");
  if (K == 1) return p1;
  const Dims rows = power_of(p1.row_dims(), K);
  const Dims cols = power_of(p1.col_dims(), K);
  const std::size_t r = dims_product(rows);
  const std::size_t c = dims_product(cols);
  if (r != 0 && c > dense_budget_bytes() / sizeof(double) / r)
    throw CapacityError("Kronecker power of " + std::to_string(r) + "x" + std::to_string(c) +
                        " exceeds the dense budget; sample with the streaming generator");
  EvenTensor out(rows, cols);
  const kernels::LevelCodes row_codes(p1.row_dims(), K);
  const kernels::LevelCodes col_codes(p1.col_dims(), K);
  kernels::omp::kron_power_fill(p1.data(), row_codes, col_codes, out.data());
  return out;
}

Permutation identity_permutation(std::size_t d) {
  Permutation perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  return perm;
}

Permutation random_sparse_permutation(std::size_t d, std::size_t s, std::uint64_t seed) {
  if (s > d) throw ParameterError("cannot displace " + std::to_string(s) + " of " + std::to_string(d) + " labels");
  if (s == 1) throw ParameterError("a permutation cannot displace exactly one label");
  Permutation perm = identity_permutation(d);
  if (s == 0) return perm;
  SplitMix64 rng(seed);
  std::vector<std::size_t> labels = identity_permutation(d);
  for (std::size_t i = 0; i < s; ++i) std::swap(labels[i], labels[i + rng.below(d - i)]);
  labels.resize(s);

  // Uniform derangement of the chosen labels by rejection (about e tries).
  std::vector<std::size_t> order(s);
  for (;;) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = s - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    bool fixed = false;
    for (std::size_t i = 0; i < s && !fixed; ++i) fixed = order[i] == i;
    if (!fixed) break;
  }
  for (std::size_t i = 0; i < s; ++i) perm[labels[i]] = labels[order[i]];
  return perm;
}

std::size_t hamming_distance(const Permutation& perm) {
  std::size_t count = 0;
  for (std::size_t u = 0; u < perm.size(); ++u) count += perm[u] != u;
  return count;
}

bool is_permutation(const Permutation& perm) {
  std::vector<char> seen(perm.size(), 0);
  for (std::size_t v : perm) {
    if (v >= perm.size() || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

EvenTensor conjugate(const EvenTensor& t, const Permutation& perm) {
  if (t.rows() != t.cols() || perm.size() != t.rows())
    throw ShapeError("conjugation needs a square tensor and a permutation of its side");
  const std::size_t d = t.rows();
  EvenTensor out(t.row_dims(), t.col_dims());
  const auto in = t.data();
  auto dst = out.data();
  for (std::size_t v = 0; v < d; ++v) {
    double* col = dst.data() + d * perm[v];
    for (std::size_t u = 0; u < d; ++u) col[perm[u]] = in[u + d * v];
  }
  return out;
}

GraphSample sample_adjacency(const EvenTensor& pk, std::uint64_t seed, const Permutation& perm) {
  if (pk.rows() != pk.cols()) throw ShapeError("edge probabilities must flatten to a square matrix");
  if (perm.size() != pk.rows() || !is_permutation(perm))
    throw ParameterError("permutation does not act on the " + std::to_string(pk.rows()) + " vertex-layer labels");
  for (double v : pk.data())
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("edge probability " + std::to_string(v) + " is outside [0,1]");
  GraphSample out{EvenTensor(pk.row_dims(), pk.col_dims()), perm, seed, std::nullopt};
  kernels::omp::bernoulli_sample(pk.data(), pk.rows(), seed, perm, out.adjacency.data());
  return out;
}

std::size_t sample_adjacency_streaming(const InitiatorParams& params, std::uint64_t seed, const Permutation& perm,
                                       const std::function<void(std::size_t, std::size_t)>& sink) {
  const EvenTensor p1 = build_initiator(params);
  const std::size_t K = params.shape.K;
  const std::size_t d = params.shape.d();
  if (perm.size() != d || !is_permutation(perm))
    throw ParameterError("permutation does not act on the " + std::to_string(d) + " vertex-layer labels");
  const kernels::LevelCodes codes(params.shape.initiator_dims(), K);
  const std::size_t q = params.shape.q();
  const auto p1_flat = p1.data();
  std::size_t edges = 0;
  for (std::size_t v = 0; v < d; ++v) {
    const auto cv = codes.codes_of(v);
    for (std::size_t u = 0; u < d; ++u) {
      const auto cu = codes.codes_of(u);
      double prob = p1_flat[cu[0] + q * cv[0]];
      for (std::size_t k = 1; k < K; ++k) prob *= p1_flat[cu[k] + q * cv[k]];
      if (counter_uniform(seed, u + d * v) < prob) {
        sink(perm[u], perm[v]);
        ++edges;
      }
    }
  }
  return edges;
}

EvenTensor signal_tensor(const InitiatorParams& params) {
  require_shape(params);
  const GraphShape& shape = params.shape;
  const std::size_t K = shape.K;
  const std::size_t d = shape.d();
  require_dense(d, "signal tensor");
  const Dims dims = shape.power_dims();
  EvenTensor out(dims, dims);
  for (std::size_t j = 0; j < K; ++j) {
    const EvenTensor term = kron(kron(ones_level(shape, j), params.x), ones_level(shape, K - 1 - j));
    const auto src = term.data();
    auto dst = out.data();
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += src[e];
  }
  const double scale = std::pow(params.p, static_cast<double>(K - 1)) / static_cast<double>(d);
  for (double& v : out.data()) v *= scale;
  return out;
}

EvenTensor signal_tensor_recursive(const InitiatorParams& params) {
  require_shape(params);
  const GraphShape& shape = params.shape;
  const double d = static_cast<double>(shape.d());
  require_dense(shape.d(), "signal tensor");
  EvenTensor s = params.x;
  for (double& v : s.data()) v /= d;
  const EvenTensor ones_q = ones_level(shape, 1);
  for (std::size_t k = 2; k <= shape.K; ++k) {
    EvenTensor fresh = kron(ones_level(shape, k - 1), params.x);
    const EvenTensor carried = kron(s, ones_q);
    const double a = std::pow(params.p, static_cast<double>(k - 1)) / d;
    auto dst = fresh.data();
    const auto src = carried.data();
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] = a * dst[e] + params.p * src[e];
    s = std::move(fresh);
  }
  return s;
}

ThetaOperator::ThetaOperator(double p, const GraphShape& shape)
    : shape_(shape),
      q_(shape.q()),
      d_(shape.d()),
      scale_(std::pow(p, static_cast<double>(shape.K - 1)) / static_cast<double>(shape.d())),
      codes_(shape.initiator_dims(), shape.K) {}

void ThetaOperator::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != input_size() || out.size() != output_size())
    throw ShapeError("theta maps " + std::to_string(input_size()) + " values to " + std::to_string(output_size()));
  kernels::omp::theta_apply(x, scale_, codes_, out);
}

std::vector<double> ThetaOperator::apply(std::span<const double> x) const {
  std::vector<double> out(output_size());
  apply(x, out);
  return out;
}

void ThetaOperator::adjoint(std::span<const double> s, std::span<double> out) const {
  if (s.size() != output_size() || out.size() != input_size())
    throw ShapeError("theta adjoint maps " + std::to_string(output_size()) + " values to " +
                     std::to_string(input_size()));
  kernels::omp::theta_adjoint(s, scale_, codes_, out);
}

std::vector<double> ThetaOperator::adjoint(std::span<const double> s) const {
  std::vector<double> out(input_size());
  adjoint(s, out);
  return out;
}

DenseMatrix ThetaOperator::gram() const {
  const auto k = static_cast<Eigen::Index>(input_size());
  DenseMatrix g(k, k);
  std::vector<double> basis(input_size(), 0.0);
  std::vector<double> image(output_size());
  std::vector<double> back(input_size());
  for (Eigen::Index i = 0; i < k; ++i) {
    basis[static_cast<std::size_t>(i)] = 1.0;
    apply(basis, image);
    adjoint(image, back);
    basis[static_cast<std::size_t>(i)] = 0.0;
    g.col(i) = Eigen::Map<const Eigen::VectorXd>(back.data(), k);
  }
  return 0.5 * (g + g.transpose());
}

std::vector<double> theta_apply(const InitiatorParams& params, std::span<const double> x) {
  return ThetaOperator(params.p, params.shape).apply(x);
}

std::vector<double> theta_adjoint_apply(const InitiatorParams& params, std::span<const double> s) {
  return ThetaOperator(params.p, params.shape).adjoint(s);
}

DenseMatrix theta_gram(const InitiatorParams& params) { return ThetaOperator(params.p, params.shape).gram(); }

EvenTensor linearized_pk(const InitiatorParams& params) {
  EvenTensor out = signal_tensor(params);
  const double base = std::pow(params.p, static_cast<double>(params.shape.K));
  const double root_d = std::sqrt(static_cast<double>(params.shape.d()));
  kernels::omp::affine(out.data(), -base / root_d, root_d, out.data());
  return out;
}

}  // namespace kroninfer
