#include "daef/kernels.hpp"

#include "kernel_rows.hpp"

namespace daef::kernels::serial {

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate) {
  rows::matmul(a, b, c, 0, n, k, m, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
  rows::matmul_nt(a, b, c, 0, n, k, m, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
  rows::matmul_tn(a, b, c, 0, n, n, k, m, accumulate);
}

void softmax(const double* x, double* y, std::size_t outer, std::size_t len, std::size_t inner) {
  rows::softmax(x, y, 0, outer * inner, len, inner);
}

void softmax_backward(const double* y, const double* dy, double* dx, std::size_t outer,
                      std::size_t len, std::size_t inner) {
  rows::softmax_backward(y, dy, dx, 0, outer * inner, len, inner);
}

void l2_normalize(const double* x, double* y, double* norms, std::size_t outer, std::size_t len,
                  std::size_t inner, double eps) {
  rows::l2_normalize(x, y, norms, 0, outer * inner, len, inner, eps);
}

void layer_norm(const double* x, const double* gamma, const double* beta, double* y,
                double* mean, double* rstd, std::size_t n, std::size_t cols, double eps) {
  rows::layer_norm(x, gamma, beta, y, mean, rstd, 0, n, cols, eps);
}

void depthwise_conv3x3(const double* x, const double* kernel, const double* bias, double* y,
                       std::size_t h, std::size_t w, std::size_t c) {
  rows::depthwise_conv3x3(x, kernel, bias, y, 0, h, h, w, c);
}

}  // namespace daef::kernels::serial
