#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "kroninfer/errors.hpp"
#include "kroninfer/kron_graph.hpp"
#include "kroninfer/rng.hpp"
#include "kroninfer/spectral.hpp"
#include "oracles.hpp"

using namespace kroninfer;

namespace {

const std::vector<double> kStandardX{-5.5, 5.5, -1.5, 1.5};

InitiatorParams params_of(double p, std::vector<double> x, GraphShape shape) {
  return {p, fluctuation_from_vec(shape, x), shape};
}

InitiatorParams random_params(SplitMix64& rng, GraphShape shape) {
  std::vector<double> x(shape.q() * shape.q());
  for (double& v : x) v = rng.uniform01() * 2.0 - 1.0;
  return params_of(0.3 + 0.5 * rng.uniform01(), x, shape);
}

// P_1 = p + X/sqrt(d) without any admissibility checks.
EvenTensor raw_initiator(const InitiatorParams& params) {
  EvenTensor p1 = params.x;
  const double root_d = std::sqrt(static_cast<double>(params.shape.d()));
  for (double& v : p1.data()) v = params.p + v / root_d;
  return p1;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

double max_abs(std::span<const double> a) {
  double out = 0.0;
  for (double v : a) out = std::max(out, std::abs(v));
  return out;
}

struct BudgetOverride {
  explicit BudgetOverride(const char* bytes) { setenv("KRONINFER_MAX_DENSE_BYTES", bytes, 1); }
  ~BudgetOverride() { unsetenv("KRONINFER_MAX_DENSE_BYTES"); }
};

}  // namespace

TEST_CASE("shape bookkeeping") {
  const GraphShape s{2, 2, 3};
  CHECK(s.q() == 4);
  CHECK(s.n() == 8);
  CHECK(s.layers() == 8);
  CHECK(s.d() == 64);
  CHECK(GraphShape::from_side(2, 1, 4096).K == 12);
  CHECK_THROWS_AS(GraphShape::from_side(2, 1, 1000), ParameterError);
  CHECK_THROWS_AS((GraphShape{0, 1, 2}.validate()), ParameterError);
  CHECK_THROWS_AS((GraphShape{2, 1, 40}.validate()), ParameterError);
}

TEST_CASE("initiator construction") {
  const GraphShape shape{2, 1, 12};
  const EvenTensor flat_p = build_initiator(params_of(0.3, {0, 0, 0, 0}, shape));
  for (double v : flat_p.data()) CHECK(v == 0.3);

  const EvenTensor p1 = build_initiator(params_of(0.8, kStandardX, shape));
  const std::vector<double> expected{0.7140625, 0.8859375, 0.7765625, 0.8234375};
  for (std::size_t i = 0; i < 4; ++i) CHECK(p1.data()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  // mat(P_1) row i, column j
  CHECK(p1.at(0, 1) == doctest::Approx(0.7765625));

  InitiatorLimits loose;
  loose.x_max = 100.0;
  loose.centering = 1e9;
  CHECK_THROWS_AS(build_initiator(params_of(0.5, {40, 0, 0, 0}, {2, 1, 2}), loose), ParameterError);
  CHECK_THROWS_AS(build_initiator(params_of(0.5, {40, 0, 0, 0}, {2, 1, 2})), ParameterError);
  CHECK_THROWS_AS(build_initiator(params_of(0.5, {5, 5, 5, 5}, {2, 1, 12})), ParameterError);
  CHECK_THROWS_AS(build_initiator(params_of(1.0, {0, 0, 0, 0}, {2, 1, 12})), ParameterError);
  CHECK_THROWS_AS(build_initiator(params_of(0.5, {0, 0, 0}, {2, 1, 12})), ShapeError);
  try {
    build_initiator(params_of(0.5, {0, 0, 40, -40}, {2, 1, 2}), loose);
    FAIL("expected rejection");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("(1,1,2,1)") != std::string::npos);
  }
}

TEST_CASE("Kronecker power") {
  SplitMix64 rng(31);
  const EvenTensor p1 = oracle::random_tensor(rng, {2, 1}, {2, 1}, 0.1, 0.9);
  CHECK(flatten(kronecker_power(p1, 1)) == flatten(p1));

  const EvenTensor constant = EvenTensor({2, 2}, {2, 2}, 0.7);
  const EvenTensor cube = kronecker_power(constant, 3);
  CHECK(cube.row_dims() == Dims{8, 8});
  for (double v : cube.data()) CHECK(v == doctest::Approx(0.343).epsilon(1e-15));

  const EvenTensor brute = oracle::brute_kron_power(p1, 3);
  CHECK(max_abs_diff(kronecker_power(p1, 3).data(), brute.data()) < 1e-15);
  const EvenTensor multi = oracle::random_tensor(rng, {2, 2}, {2, 2}, 0.1, 0.9);
  CHECK(max_abs_diff(kronecker_power(multi, 3).data(), oracle::brute_kron_power(multi, 3).data()) < 1e-15);

  // single layer: flattening is the matrix Kronecker power
  const DenseMatrix m1 = flatten(p1);
  const DenseMatrix m3 = kron_matrix(kron_matrix(m1, m1), m1);
  CHECK((flatten(kronecker_power(p1, 3)) - m3).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(kronecker_power(p1, 0), ParameterError);
  BudgetOverride budget("1000");
  CHECK_THROWS_AS(kronecker_power(p1, 4), CapacityError);
}

TEST_CASE("sampling") {
  const Dims dims{4, 1};
  const Permutation id = identity_permutation(4);
  const GraphSample zero = sample_adjacency(EvenTensor(dims, dims, 0.0), 5, id);
  for (double v : zero.adjacency.data()) CHECK(v == 0.0);
  const GraphSample one = sample_adjacency(EvenTensor(dims, dims, 1.0), 5, id);
  for (double v : one.adjacency.data()) CHECK(v == 1.0);
  CHECK_THROWS_AS(sample_adjacency(EvenTensor(dims, dims, 1.5), 5, id), ParameterError);
  CHECK_THROWS_AS(sample_adjacency(EvenTensor(dims, dims, 0.5), 5, Permutation{0, 0, 1, 2}), ParameterError);

  // edge density at d = 1024 within 3 sigma of the mean probability
  const GraphShape shape{2, 1, 10};
  const InitiatorParams params = params_of(0.8, kStandardX, shape);
  const EvenTensor pk = kronecker_power(build_initiator(params), 10);
  const GraphSample g = sample_adjacency(pk, 17, identity_permutation(1024));
  double mean = 0.0, var = 0.0, edges = 0.0;
  for (double v : pk.data()) mean += v, var += v * (1.0 - v);
  for (double v : g.adjacency.data()) edges += v;
  CHECK(std::abs(edges - mean) < 3.0 * std::sqrt(var));
}

TEST_CASE("permuted sampling is conjugation of the identity-permuted draw") {
  SplitMix64 rng(32);
  const EvenTensor pk = oracle::random_tensor(rng, {8, 2}, {8, 2}, 0.0, 1.0);
  const Permutation perm = random_sparse_permutation(16, 6, 9);
  const GraphSample plain = sample_adjacency(pk, 44, identity_permutation(16));
  const GraphSample permuted = sample_adjacency(pk, 44, perm);
  const EvenTensor conj = conjugate(plain.adjacency, perm);
  CHECK(std::equal(conj.data().begin(), conj.data().end(), permuted.adjacency.data().begin()));
}

TEST_CASE("adjacency mean approaches P_K") {
  SplitMix64 rng(33);
  const EvenTensor pk = oracle::random_tensor(rng, {4, 4}, {4, 4}, 0.05, 0.95);
  std::vector<double> mean(pk.size(), 0.0);
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    const GraphSample g = sample_adjacency(pk, static_cast<std::uint64_t>(s), identity_permutation(16));
    for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += g.adjacency.data()[e] / seeds;
  }
  for (std::size_t e = 0; e < mean.size(); ++e) {
    const double p = pk.data()[e];
    CHECK(std::abs(mean[e] - p) < 4.0 * std::sqrt(p * (1.0 - p) / seeds));
  }
}

TEST_CASE("streaming sampler reproduces the dense draw") {
  const GraphShape shape{2, 2, 3};
  SplitMix64 rng(34);
  std::vector<double> x(16);
  for (double& v : x) v = rng.uniform01() - 0.5;
  double total = 0.0;
  for (double v : x) total += v;
  x[0] -= total;
  const InitiatorParams params = params_of(0.6, x, shape);
  const Permutation perm = random_sparse_permutation(64, 10, 5);
  const GraphSample dense = sample_adjacency(kronecker_power(build_initiator(params), 3), 77, perm);
  EvenTensor streamed(dense.adjacency.row_dims(), dense.adjacency.col_dims());
  const std::size_t edges =
      sample_adjacency_streaming(params, 77, perm, [&](std::size_t u, std::size_t v) { streamed.at(u, v) = 1.0; });
  CHECK(std::equal(streamed.data().begin(), streamed.data().end(), dense.adjacency.data().begin()));
  double count = 0.0;
  for (double v : dense.adjacency.data()) count += v;
  CHECK(static_cast<double>(edges) == count);

  // digit products against the dense power at 100 random entries
  const EvenTensor pk = kronecker_power(build_initiator(params), 3);
  const EvenTensor p1 = build_initiator(params);
  const kernels::LevelCodes codes({2, 2}, 3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t u = rng.below(64), v = rng.below(64);
    double prod = 1.0;
    for (std::size_t k = 0; k < 3; ++k) prod *= p1.at(codes.code(u, k), codes.code(v, k));
    CHECK(std::abs(prod - pk.at(u, v)) <= 1e-15);
  }
}

TEST_CASE("streaming edge count for a flat initiator") {
  const GraphShape shape{2, 1, 10};
  const InitiatorParams params = params_of(0.8, {0, 0, 0, 0}, shape);
  const std::size_t edges = sample_adjacency_streaming(params, 3, identity_permutation(1024), [](auto, auto) {});
  const double pk = std::pow(0.8, 10), n = 1024.0 * 1024.0;
  CHECK(std::abs(static_cast<double>(edges) - pk * n) < 3.0 * std::sqrt(n * pk * (1.0 - pk)));

  const InitiatorParams single = params_of(0.5, {0, 0, 0, 0}, {2, 1, 1});
  std::size_t count = 0;
  const std::size_t reported =
      sample_adjacency_streaming(single, 8, identity_permutation(2), [&](std::size_t, std::size_t) { ++count; });
  std::size_t direct = 0;
  for (std::size_t v = 0; v < 2; ++v)
    for (std::size_t u = 0; u < 2; ++u) direct += counter_uniform(8, u + 2 * v) < 0.5;
  CHECK(count == direct);
  CHECK(reported == direct);
}

TEST_CASE("signal tensor: closed form, recursion and theta agree") {
  SplitMix64 rng(35);
  for (const GraphShape shape : {GraphShape{2, 1, 1}, GraphShape{2, 1, 4}, GraphShape{3, 1, 3}, GraphShape{2, 2, 3},
                                 GraphShape{4, 1, 2}, GraphShape{1, 3, 2}}) {
    const InitiatorParams params = random_params(rng, shape);
    const EvenTensor closed = signal_tensor(params);
    const EvenTensor recursive = signal_tensor_recursive(params);
    const double scale = std::max(max_abs(closed.data()), 1e-300);
    CHECK(max_abs_diff(closed.data(), recursive.data()) <= 1e-12 * scale);
    const std::vector<double> via_theta = theta_apply(params, params.x.data());
    CHECK(max_abs_diff(closed.data(), via_theta) <= 1e-12 * scale);

    // sum identity: 1^T S_K 1 = p^{K-1} K / d * (q^{K-1})^2 * 1^T X 1
    double s_sum = 0.0, x_sum = 0.0;
    for (double v : closed.data()) s_sum += v;
    for (double v : params.x.data()) x_sum += v;
    const double K = static_cast<double>(shape.K), q = static_cast<double>(shape.q());
    const double predicted =
        std::pow(params.p, K - 1) * K / static_cast<double>(shape.d()) * std::pow(q, 2 * (K - 1)) * x_sum;
    CHECK(s_sum == doctest::Approx(predicted).epsilon(1e-12));
  }
}

TEST_CASE("signal tensor small cases") {
  const GraphShape k1{2, 1, 1};
  const InitiatorParams p1 = params_of(0.8, kStandardX, k1);
  const EvenTensor s1 = signal_tensor(p1);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s1.data()[i] == kStandardX[i] / 2.0);

  const GraphShape k2{2, 1, 2};
  const InitiatorParams p2 = params_of(0.8, kStandardX, k2);
  const EvenTensor j = EvenTensor::ones({2, 1}, {2, 1});
  const EvenTensor a = kron(j, p2.x), b = kron(p2.x, j);
  const EvenTensor s2 = signal_tensor(p2);
  for (std::size_t e = 0; e < s2.size(); ++e)
    CHECK(s2.data()[e] == doctest::Approx(0.8 / 4.0 * (a.data()[e] + b.data()[e])).epsilon(1e-15));

  const EvenTensor zero = signal_tensor(params_of(0.8, {0, 0, 0, 0}, {2, 1, 3}));
  CHECK(max_abs(zero.data()) == 0.0);
}

TEST_CASE("theta operator") {
  const GraphShape shape{2, 1, 2};
  const Eigen::MatrixXd brute = oracle::theta_by_differentiation(0.7, shape);
  const ThetaOperator theta(0.7, shape);
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> e(4, 0.0);
    e[i] = 1.0;
    const auto col = theta.apply(e);
    for (std::size_t r = 0; r < col.size(); ++r)
      CHECK(col[r] == brute(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)));
  }
  const std::vector<double> zero = theta.apply(std::vector<double>(4, 0.0));
  CHECK(max_abs(zero) == 0.0);

  SplitMix64 rng(36);
  const ThetaOperator t3(0.6, {2, 1, 3});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(4), s(64);
    for (double& v : x) v = rng.normal();
    for (double& v : s) v = rng.normal();
    const auto tx = t3.apply(x);
    const auto ts = t3.adjoint(s);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) lhs += tx[i] * s[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * ts[i];
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
  CHECK_THROWS_AS(t3.apply(std::vector<double>(3)), ShapeError);
  CHECK_THROWS_AS(t3.adjoint(std::vector<double>(3)), ShapeError);
}

TEST_CASE("theta Gram matrix") {
  const GraphShape k1{2, 1, 1};
  const DenseMatrix g1 = theta_gram(params_of(0.5, {0, 0, 0, 0}, k1));
  CHECK((g1 - DenseMatrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-15);

  for (const GraphShape shape : {GraphShape{2, 1, 4}, GraphShape{3, 1, 3}, GraphShape{2, 2, 2}}) {
    const double p = 0.7;
    const DenseMatrix g = theta_gram(params_of(p, std::vector<double>(shape.q() * shape.q(), 0.0), shape));
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(g);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    // c^2 [K (d/q)^2 I + K (K-1) (d/q^2)^2 11^T]
    const double K = static_cast<double>(shape.K), q = static_cast<double>(shape.q()),
                 d = static_cast<double>(shape.d());
    const double c = std::pow(p, K - 1) / d;
    const auto n = static_cast<Eigen::Index>(shape.q() * shape.q());
    const DenseMatrix expected = c * c *
                                 (K * (d / q) * (d / q) * DenseMatrix::Identity(n, n) +
                                  K * (K - 1) * std::pow(d / (q * q), 2) * DenseMatrix::Ones(n, n));
    CHECK((g - expected).cwiseAbs().maxCoeff() <= 1e-12 * expected.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("linearization") {
  const InitiatorParams flat = params_of(0.8, {0, 0, 0, 0}, {2, 1, 5});
  const EvenTensor lin = linearized_pk(flat);
  for (double v : lin.data()) CHECK(v == doctest::Approx(std::pow(0.8, 5)).epsilon(1e-14));

  std::vector<double> scaled;
  for (std::size_t K : {6, 8, 10}) {
    const InitiatorParams params = params_of(0.8, kStandardX, {2, 1, K});
    const EvenTensor pk = kronecker_power(raw_initiator(params), K);
    const EvenTensor pl = linearized_pk(params);
    scaled.push_back(max_abs_diff(pk.data(), pl.data()) * static_cast<double>(params.shape.d()));
  }
  const double hi = *std::max_element(scaled.begin(), scaled.end());
  const double lo = *std::min_element(scaled.begin(), scaled.end());
  CHECK(hi / lo < 3.0);

  const InitiatorParams small = params_of(0.8, kStandardX, {2, 1, 4});
  const Eigen::VectorXd sv = singular_values(signal_tensor(small).matrix());
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0);
  CHECK(rank <= 5);
}

TEST_CASE("sparse permutations") {
  const Permutation id = random_sparse_permutation(10, 0, 1);
  CHECK(hamming_distance(id) == 0);
  const Permutation swap = random_sparse_permutation(10, 2, 1);
  CHECK(hamming_distance(swap) == 2);
  for (std::size_t u = 0; u < 10; ++u) CHECK(swap[swap[u]] == u);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Permutation p = random_sparse_permutation(64, 5, seed);
    CHECK(is_permutation(p));
    CHECK(hamming_distance(p) == 5);
  }
  CHECK_THROWS_AS(random_sparse_permutation(10, 1, 1), ParameterError);
  CHECK_THROWS_AS(random_sparse_permutation(10, 11, 1), ParameterError);
}
