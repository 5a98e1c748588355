#pragma once

#include <cstddef>

namespace senticomp::kernels {

// Dense numeric kernels behind the tensor ops. Each kernel has a serial
// reference implementation and an OpenMP build that parallelizes over
// independent output elements only, so both produce bitwise-identical
// results for any thread count. tools/bench.cpp compares the two.

/// C(m,n) = op(A) * op(B) with op controlled by the transpose flags.
/// A is m x k after transposition, B is k x n. C is overwritten.
void matmul(double* c, const double* a, const double* b, std::size_t m,
            std::size_t k, std::size_t n, bool trans_a, bool trans_b);
void matmul_serial(double* c, const double* a, const double* b, std::size_t m,
                   std::size_t k, std::size_t n, bool trans_a, bool trans_b);

/// Gradient helpers for matmul: dA += update, dB += update. Accumulating,
/// element-parallel over the destination.
void matmul_acc(double* c, const double* a, const double* b, std::size_t m,
                std::size_t k, std::size_t n, bool trans_a, bool trans_b);

void selu(double* out, const double* in, std::size_t n);
void selu_serial(double* out, const double* in, std::size_t n);
void selu_backward(double* din, const double* in, const double* dout,
                   std::size_t n);

void gelu(double* out, const double* in, std::size_t n);
void gelu_serial(double* out, const double* in, std::size_t n);
void gelu_backward(double* din, const double* in, const double* dout,
                   std::size_t n);

void tanh_fwd(double* out, const double* in, std::size_t n);
void tanh_backward(double* din, const double* out, const double* dout,
                   std::size_t n);

/// Row-wise softmax over the last axis of a rows x cols matrix.
void softmax_rows(double* out, const double* in, std::size_t rows,
                  std::size_t cols);
void softmax_rows_serial(double* out, const double* in, std::size_t rows,
                         std::size_t cols);

constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

}  // namespace senticomp::kernels
