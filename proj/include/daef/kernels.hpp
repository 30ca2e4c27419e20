#pragma once

#include <cstddef>

// Raw row-major kernels behind the differentiable ops.
//
// `serial` is the reference implementation. `parallel` distributes the same
// loops over OpenMP threads without changing any per-element summation order,
// so both produce bit-identical results; tests hold them to that.
//
// Matrix kernels take `accumulate`: when true, C += result instead of C = result.
namespace daef::kernels {

namespace serial {

// C(n x m) = A(n x k) * B(k x m)
void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate = false);
// C(n x m) = A(n x k) * B(m x k)^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate = false);
// C(n x m) = A(k x n)^T * B(k x m)
void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate = false);

// Softmax over the middle extent of an (outer, len, inner) view.
void softmax(const double* x, double* y, std::size_t outer, std::size_t len, std::size_t inner);
// dx (+)= y * (dy - <dy, y>) along the same extent.
void softmax_backward(const double* y, const double* dy, double* dx, std::size_t outer,
                      std::size_t len, std::size_t inner);

// y = x / max(||x||_2, eps) along the middle extent; writes the clamped norms.
void l2_normalize(const double* x, double* y, double* norms, std::size_t outer, std::size_t len,
                  std::size_t inner, double eps);

// Per-row standardization with population variance; writes mean and 1/std per row.
void layer_norm(const double* x, const double* gamma, const double* beta, double* y,
                double* mean, double* rstd, std::size_t rows, std::size_t cols, double eps);

// 3x3 depth-wise convolution, zero padding 1, stride 1, on tokens laid out
// (h*w) x c. kernel is c x 9 (row-major 3x3 taps per channel).
void depthwise_conv3x3(const double* x, const double* kernel, const double* bias, double* y,
                       std::size_t h, std::size_t w, std::size_t c);

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate = false);
void softmax(const double* x, double* y, std::size_t outer, std::size_t len, std::size_t inner);
void softmax_backward(const double* y, const double* dy, double* dx, std::size_t outer,
                      std::size_t len, std::size_t inner);
void l2_normalize(const double* x, double* y, double* norms, std::size_t outer, std::size_t len,
                  std::size_t inner, double eps);
void layer_norm(const double* x, const double* gamma, const double* beta, double* y,
                double* mean, double* rstd, std::size_t rows, std::size_t cols, double eps);
void depthwise_conv3x3(const double* x, const double* kernel, const double* bias, double* y,
                       std::size_t h, std::size_t w, std::size_t c);

// Work (in multiply-adds) below which the parallel kernels stay on one thread.
inline constexpr std::size_t kMinParallelWork = 1 << 15;

}  // namespace parallel

}  // namespace daef::kernels
