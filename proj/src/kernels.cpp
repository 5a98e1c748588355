#include "senticomp/kernels.hpp"

#include <cmath>

#include "senticomp/threading.hpp"

namespace senticomp::kernels {

namespace {

inline double dot_strided(const double* a, std::size_t stride_a,
                          const double* b, std::size_t stride_b,
                          std::size_t k) {
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += a[i * stride_a] * b[i * stride_b];
  return acc;
}

// Resolve the (row pointer, stride) pair for element (i, j) walks of a
// possibly transposed operand. For op(A) of logical shape m x k stored as
// m x k (no transpose) or k x m (transposed), row i starts at:
inline const double* row_ptr(const double* a, std::size_t i, std::size_t k,
                             bool trans) {
  return trans ? a + i : a + i * k;
}

inline std::size_t row_stride(std::size_t m, std::size_t /*k*/, bool trans) {
  return trans ? m : 1;
}

inline void matmul_element_loop(double* c, const double* a, const double* b,
                                std::size_t m, std::size_t k, std::size_t n,
                                bool ta, bool tb, bool accumulate,
                                std::size_t i_begin, std::size_t i_end) {
  const std::size_t sa = row_stride(m, k, ta);
  const std::size_t sb = tb ? 1 : n;
  for (std::size_t i = i_begin; i < i_end; ++i) {
    const double* arow = row_ptr(a, i, k, ta);
    for (std::size_t j = 0; j < n; ++j) {
      const double* bcol = tb ? b + j * k : b + j;
      double v = dot_strided(arow, sa, bcol, sb, k);
      if (accumulate)
        c[i * n + j] += v;
      else
        c[i * n + j] = v;
    }
  }
}

}  // namespace

void matmul_serial(double* c, const double* a, const double* b, std::size_t m,
                   std::size_t k, std::size_t n, bool ta, bool tb) {
  matmul_element_loop(c, a, b, m, k, n, ta, tb, false, 0, m);
}

void matmul(double* c, const double* a, const double* b, std::size_t m,
            std::size_t k, std::size_t n, bool ta, bool tb) {
  const std::size_t work = m * n * k;
  if (work < 16384 || max_threads() <= 1 || in_parallel_region()) {
    matmul_serial(c, a, b, m, k, n, ta, tb);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long i = 0; i < static_cast<long>(m); ++i) {
    matmul_element_loop(c, a, b, m, k, n, ta, tb, false, i, i + 1);
  }
}

void matmul_acc(double* c, const double* a, const double* b, std::size_t m,
                std::size_t k, std::size_t n, bool ta, bool tb) {
  const std::size_t work = m * n * k;
  if (work < 16384 || max_threads() <= 1 || in_parallel_region()) {
    matmul_element_loop(c, a, b, m, k, n, ta, tb, true, 0, m);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long i = 0; i < static_cast<long>(m); ++i) {
    matmul_element_loop(c, a, b, m, k, n, ta, tb, true, i, i + 1);
  }
}

void selu_serial(double* out, const double* in, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double x = in[i];
    out[i] = x > 0.0 ? kSeluLambda * x
                     : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
  }
}

void selu(double* out, const double* in, std::size_t n) {
  if (n < 4096 || max_threads() <= 1 || in_parallel_region()) {
    selu_serial(out, in, n);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long i = 0; i < static_cast<long>(n); ++i) {
    double x = in[i];
    out[i] = x > 0.0 ? kSeluLambda * x
                     : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
  }
}

void selu_backward(double* din, const double* in, const double* dout,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double x = in[i];
    double d = x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    din[i] += d * dout[i];
  }
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

void gelu_serial(double* out, const double* in, std::size_t n) {
  // Exact Gaussian-CDF form, not the tanh approximation.
  for (std::size_t i = 0; i < n; ++i) {
    double x = in[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
}

void gelu(double* out, const double* in, std::size_t n) {
  if (n < 4096 || max_threads() <= 1 || in_parallel_region()) {
    gelu_serial(out, in, n);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long i = 0; i < static_cast<long>(n); ++i) {
    double x = in[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
}

void gelu_backward(double* din, const double* in, const double* dout,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double x = in[i];
    double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    din[i] += (cdf + x * pdf) * dout[i];
  }
}

void tanh_fwd(double* out, const double* in, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
}

void tanh_backward(double* din, const double* out, const double* dout,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) din[i] += (1.0 - out[i] * out[i]) * dout[i];
}

void softmax_rows_serial(double* out, const double* in, std::size_t rows,
                         std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    double* y = out + r * cols;
    double mx = x[0];
    for (std::size_t j = 1; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
}

void softmax_rows(double* out, const double* in, std::size_t rows,
                  std::size_t cols) {
  if (rows * cols < 4096 || max_threads() <= 1 || in_parallel_region()) {
    softmax_rows_serial(out, in, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long r = 0; r < static_cast<long>(rows); ++r) {
    softmax_rows_serial(out + r * cols, in + r * cols, 1, cols);
  }
}

}  // namespace senticomp::kernels
