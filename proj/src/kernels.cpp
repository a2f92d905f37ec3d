#include "kroninfer/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdint>

#include "kroninfer/errors.hpp"
#include "kroninfer/rng.hpp"

namespace kroninfer::kernels {

LevelCodes::LevelCodes(const Dims& base_dims, std::size_t levels) : base_(dims_product(base_dims)), levels_(levels) {
  if (levels == 0) throw ParameterError("Kronecker power needs at least one level");
  const std::size_t modes = base_dims.size();
  Dims power_dims(modes, 1);
  for (std::size_t t = 0; t < modes; ++t)
    for (std::size_t k = 0; k < levels; ++k) power_dims[t] *= base_dims[t];
  extent_ = dims_product(power_dims);
  codes_.resize(extent_ * levels_);

  Dims index(modes);
  for (std::size_t u = 0; u < extent_; ++u) {
    std::size_t rest = u;
    for (std::size_t t = 0; t < modes; ++t) {
      index[t] = rest % power_dims[t];
      rest /= power_dims[t];
    }
    // Level k digit of mode t, level 0 most significant.
    for (std::size_t k = levels_; k-- > 0;) {
      std::size_t code = 0;
      std::size_t stride = 1;
      for (std::size_t t = 0; t < modes; ++t) {
        code += (index[t] % base_dims[t]) * stride;
        index[t] /= base_dims[t];
        stride *= base_dims[t];
      }
      codes_[u * levels_ + k] = static_cast<std::uint32_t>(code);
    }
  }
}

namespace serial {

EvenTensor kron_power(const EvenTensor& p1, std::size_t levels) {
  EvenTensor out = p1;
  for (std::size_t k = 1; k < levels; ++k) out = kron(out, p1);
  return out;
}

void bernoulli_sample(std::span<const double> prob, std::size_t d, std::uint64_t seed,
                      std::span<const std::size_t> perm, std::span<double> out) {
  for (std::size_t v = 0; v < d; ++v)
    for (std::size_t u = 0; u < d; ++u) {
      const std::size_t e = u + d * v;
      out[perm[u] + d * perm[v]] = counter_uniform(seed, e) < prob[e] ? 1.0 : 0.0;
    }
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    const double w = x[j];
    const double* col = a.data() + j * rows;
    for (std::size_t i = 0; i < rows; ++i) y[i] += col[i] * w;
  }
}

void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  for (std::size_t j = 0; j < cols; ++j) {
    const double* col = a.data() + j * rows;
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) acc += col[i] * x[i];
    y[j] = acc;
  }
}

double sum(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

void theta_apply(std::span<const double> x, double scale, const LevelCodes& codes, std::span<double> out) {
  const std::size_t d = codes.extent();
  const std::size_t q = codes.base();
  const std::size_t levels = codes.levels();
  for (std::size_t v = 0; v < d; ++v)
    for (std::size_t u = 0; u < d; ++u) {
      double acc = 0.0;
      for (std::size_t k = 0; k < levels; ++k) acc += x[codes.code(u, k) + q * codes.code(v, k)];
      out[u + d * v] = scale * acc;
    }
}

void theta_adjoint(std::span<const double> s, double scale, const LevelCodes& codes, std::span<double> out) {
  const std::size_t d = codes.extent();
  const std::size_t q = codes.base();
  const std::size_t levels = codes.levels();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t v = 0; v < d; ++v)
    for (std::size_t u = 0; u < d; ++u)
      for (std::size_t k = 0; k < levels; ++k) out[codes.code(u, k) + q * codes.code(v, k)] += s[u + d * v];
  for (double& o : out) o *= scale;
}

}  // namespace serial

namespace omp {

void kron_power_fill(std::span<const double> p1_flat, const LevelCodes& row_codes, const LevelCodes& col_codes,
                     std::span<double> out) {
  const std::size_t rows = row_codes.extent();
  const auto cols = static_cast<std::int64_t>(col_codes.extent());
  const std::size_t base_rows = row_codes.base();
  const std::size_t levels = row_codes.levels();
#pragma omp parallel for schedule(static)
  for (std::int64_t v = 0; v < cols; ++v) {
    const auto cv = col_codes.codes_of(static_cast<std::size_t>(v));
    double* col = out.data() + static_cast<std::size_t>(v) * rows;
    for (std::size_t u = 0; u < rows; ++u) {
      const auto cu = row_codes.codes_of(u);
      double acc = p1_flat[cu[0] + base_rows * cv[0]];
      for (std::size_t k = 1; k < levels; ++k) acc *= p1_flat[cu[k] + base_rows * cv[k]];
      col[u] = acc;
    }
  }
}

void bernoulli_sample(std::span<const double> prob, std::size_t d, std::uint64_t seed,
                      std::span<const std::size_t> perm, std::span<double> out) {
  const auto cols = static_cast<std::int64_t>(d);
#pragma omp parallel for schedule(static)
  for (std::int64_t vi = 0; vi < cols; ++vi) {
    const auto v = static_cast<std::size_t>(vi);
    double* target = out.data() + d * perm[v];
    for (std::size_t u = 0; u < d; ++u) {
      const std::size_t e = u + d * v;
      target[perm[u]] = counter_uniform(seed, e) < prob[e] ? 1.0 : 0.0;
    }
  }
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  constexpr std::size_t block = 512;
  const auto blocks = static_cast<std::int64_t>((rows + block - 1) / block);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::size_t r0 = static_cast<std::size_t>(b) * block;
    const std::size_t r1 = std::min(rows, r0 + block);
    for (std::size_t i = r0; i < r1; ++i) y[i] = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double w = x[j];
      const double* col = a.data() + j * rows;
      for (std::size_t i = r0; i < r1; ++i) y[i] += col[i] * w;
    }
  }
}

void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  const auto n = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const double* col = a.data() + j * rows;
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) acc += col[i] * x[i];
    y[j] = acc;
  }
}

double sum(std::span<const double> values, std::size_t rows) {
  if (rows == 0 || values.empty()) return 0.0;
  const std::size_t cols = (values.size() + rows - 1) / rows;
  std::vector<double> partial(cols, 0.0);
  const auto n = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const std::size_t end = std::min(values.size(), (j + 1) * rows);
    double acc = 0.0;
    for (std::size_t i = j * rows; i < end; ++i) acc += values[i];
    partial[j] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void affine(std::span<const double> a, double shift, double scale, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = (a[static_cast<std::size_t>(i)] - shift) * scale;
}

void theta_apply(std::span<const double> x, double scale, const LevelCodes& codes, std::span<double> out) {
  const std::size_t d = codes.extent();
  const std::size_t q = codes.base();
  const std::size_t levels = codes.levels();
  const auto cols = static_cast<std::int64_t>(d);
#pragma omp parallel for schedule(static)
  for (std::int64_t vi = 0; vi < cols; ++vi) {
    const auto v = static_cast<std::size_t>(vi);
    const auto cv = codes.codes_of(v);
    double* col = out.data() + d * v;
    for (std::size_t u = 0; u < d; ++u) {
      const auto cu = codes.codes_of(u);
      double acc = 0.0;
      for (std::size_t k = 0; k < levels; ++k) acc += x[cu[k] + q * cv[k]];
      col[u] = scale * acc;
    }
  }
}

void theta_adjoint(std::span<const double> s, double scale, const LevelCodes& codes, std::span<double> out) {
  const std::size_t d = codes.extent();
  const std::size_t q = codes.base();
  const std::size_t levels = codes.levels();
  // partial[v][k][a] = sum over rows u with code(u,k) = a of s[u, v]
  std::vector<double> partial(d * levels * q, 0.0);
  const auto cols = static_cast<std::int64_t>(d);
#pragma omp parallel for schedule(static)
  for (std::int64_t vi = 0; vi < cols; ++vi) {
    const auto v = static_cast<std::size_t>(vi);
    double* acc = partial.data() + v * levels * q;
    const double* col = s.data() + d * v;
    for (std::size_t u = 0; u < d; ++u) {
      const auto cu = codes.codes_of(u);
      const double value = col[u];
      for (std::size_t k = 0; k < levels; ++k) acc[k * q + cu[k]] += value;
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t v = 0; v < d; ++v) {
    const auto cv = codes.codes_of(v);
    const double* acc = partial.data() + v * levels * q;
    for (std::size_t k = 0; k < levels; ++k)
      for (std::size_t a = 0; a < q; ++a) out[a + q * cv[k]] += acc[k * q + a];
  }
  for (double& o : out) o *= scale;
}

}  // namespace omp

}  // namespace kroninfer::kernels
