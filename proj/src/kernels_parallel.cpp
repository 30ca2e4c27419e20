#include "daef/kernels.hpp"

#include <omp.h>

#include "kernel_rows.hpp"

namespace daef::kernels::parallel {

namespace {

// Splits [0, count) into one contiguous chunk per thread.
template <typename Fn>
void for_chunks(std::size_t count, std::size_t work, Fn&& fn) {
  // Entering a parallel region costs real time even with one thread.
  if (work < kMinParallelWork || count < 2 || omp_get_max_threads() < 2) {
    fn(std::size_t{0}, count);
    return;
  }
#pragma omp parallel
  {
    const std::size_t threads = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t id = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t chunk = (count + threads - 1) / threads;
    const std::size_t begin = std::min(count, id * chunk);
    const std::size_t end = std::min(count, begin + chunk);
    if (begin < end) fn(begin, end);
  }
}

}  // namespace

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate) {
  for_chunks(n, n * k * m, [&](std::size_t lo, std::size_t hi) {
    rows::matmul(a, b, c, lo, hi, k, m, accumulate);
  });
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
  for_chunks(n, n * k * m, [&](std::size_t lo, std::size_t hi) {
    rows::matmul_nt(a, b, c, lo, hi, k, m, accumulate);
  });
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
  for_chunks(n, n * k * m, [&](std::size_t lo, std::size_t hi) {
    rows::matmul_tn(a, b, c, lo, hi, n, k, m, accumulate);
  });
}

void softmax(const double* x, double* y, std::size_t outer, std::size_t len, std::size_t inner) {
  const std::size_t lines = outer * inner;
  for_chunks(lines, lines * len * 8, [&](std::size_t lo, std::size_t hi) {
    rows::softmax(x, y, lo, hi, len, inner);
  });
}

void softmax_backward(const double* y, const double* dy, double* dx, std::size_t outer,
                      std::size_t len, std::size_t inner) {
  const std::size_t lines = outer * inner;
  for_chunks(lines, lines * len * 2, [&](std::size_t lo, std::size_t hi) {
    rows::softmax_backward(y, dy, dx, lo, hi, len, inner);
  });
}

void l2_normalize(const double* x, double* y, double* norms, std::size_t outer, std::size_t len,
                  std::size_t inner, double eps) {
  const std::size_t lines = outer * inner;
  for_chunks(lines, lines * len * 2, [&](std::size_t lo, std::size_t hi) {
    rows::l2_normalize(x, y, norms, lo, hi, len, inner, eps);
  });
}

void layer_norm(const double* x, const double* gamma, const double* beta, double* y,
                double* mean, double* rstd, std::size_t n, std::size_t cols, double eps) {
  for_chunks(n, n * cols * 4, [&](std::size_t lo, std::size_t hi) {
    rows::layer_norm(x, gamma, beta, y, mean, rstd, lo, hi, cols, eps);
  });
}

void depthwise_conv3x3(const double* x, const double* kernel, const double* bias, double* y,
                       std::size_t h, std::size_t w, std::size_t c) {
  for_chunks(h, h * w * c * 9, [&](std::size_t lo, std::size_t hi) {
    rows::depthwise_conv3x3(x, kernel, bias, y, lo, hi, h, w, c);
  });
}

}  // namespace daef::kernels::parallel
