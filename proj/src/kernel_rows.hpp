#pragma once

// Range kernels shared by the serial and parallel entry points. Each call
// covers a contiguous slice of independent outputs, so splitting the slices
// across threads never changes arithmetic order.

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace daef::kernels::rows {

inline void matmul(const double* a, const double* b, double* c, std::size_t begin,
                   std::size_t end, std::size_t k, std::size_t m, bool accumulate) {
  for (std::size_t i = begin; i < end; ++i) {
    double* ci = c + i * m;
    if (!accumulate) std::fill(ci, ci + m, 0.0);
    const double* ai = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ai[t];
      const double* bt = b + t * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bt[j];
    }
  }
}

inline void matmul_nt(const double* a, const double* b, double* c, std::size_t begin,
                      std::size_t end, std::size_t k, std::size_t m, bool accumulate) {
  for (std::size_t i = begin; i < end; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b + j * k;
      // Four interleaved partial sums break the add dependency chain.
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t t = 0;
      for (; t + 4 <= k; t += 4) {
        s0 += ai[t] * bj[t];
        s1 += ai[t + 1] * bj[t + 1];
        s2 += ai[t + 2] * bj[t + 2];
        s3 += ai[t + 3] * bj[t + 3];
      }
      for (; t < k; ++t) s0 += ai[t] * bj[t];
      const double s = (s0 + s1) + (s2 + s3);
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

inline void matmul_tn(const double* a, const double* b, double* c, std::size_t begin,
                      std::size_t end, std::size_t n, std::size_t k, std::size_t m,
                      bool accumulate) {
  for (std::size_t i = begin; i < end; ++i) {
    double* ci = c + i * m;
    if (!accumulate) std::fill(ci, ci + m, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a[t * n + i];
      const double* bt = b + t * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bt[j];
    }
  }
}

// Lines are indexed 0 .. outer*inner; line (o, r) strides by `inner`.
inline void softmax(const double* x, double* y, std::size_t begin, std::size_t end,
                    std::size_t len, std::size_t inner) {
  for (std::size_t line = begin; line < end; ++line) {
    const std::size_t o = line / inner, r = line % inner;
    const std::size_t base = o * len * inner + r;
    double mx = x[base];
    for (std::size_t l = 1; l < len; ++l) mx = std::max(mx, x[base + l * inner]);
    double sum = 0.0;
    for (std::size_t l = 0; l < len; ++l) {
      const double e = std::exp(x[base + l * inner] - mx);
      y[base + l * inner] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t l = 0; l < len; ++l) y[base + l * inner] *= inv;
  }
}

inline void softmax_backward(const double* y, const double* dy, double* dx, std::size_t begin,
                             std::size_t end, std::size_t len, std::size_t inner) {
  for (std::size_t line = begin; line < end; ++line) {
    const std::size_t o = line / inner, r = line % inner;
    const std::size_t base = o * len * inner + r;
    double dot = 0.0;
    for (std::size_t l = 0; l < len; ++l) dot += dy[base + l * inner] * y[base + l * inner];
    for (std::size_t l = 0; l < len; ++l) {
      const std::size_t idx = base + l * inner;
      dx[idx] += y[idx] * (dy[idx] - dot);
    }
  }
}

inline void l2_normalize(const double* x, double* y, double* norms, std::size_t begin,
                         std::size_t end, std::size_t len, std::size_t inner, double eps) {
  for (std::size_t line = begin; line < end; ++line) {
    const std::size_t o = line / inner, r = line % inner;
    const std::size_t base = o * len * inner + r;
    double ss = 0.0;
    for (std::size_t l = 0; l < len; ++l) ss += x[base + l * inner] * x[base + l * inner];
    const double norm = std::max(std::sqrt(ss), eps);
    norms[line] = norm;
    for (std::size_t l = 0; l < len; ++l) y[base + l * inner] = x[base + l * inner] / norm;
  }
}

inline void layer_norm(const double* x, const double* gamma, const double* beta, double* y,
                       double* mean, double* rstd, std::size_t begin, std::size_t end,
                       std::size_t cols, double eps) {
  for (std::size_t i = begin; i < end; ++i) {
    const double* xi = x + i * cols;
    double mu = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mu += xi[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<double>(cols);
    const double rs = 1.0 / std::sqrt(var + eps);
    mean[i] = mu;
    rstd[i] = rs;
    double* yi = y + i * cols;
    for (std::size_t j = 0; j < cols; ++j) yi[j] = (xi[j] - mu) * rs * gamma[j] + beta[j];
  }
}

// Output image rows [begin, end).
inline void depthwise_conv3x3(const double* x, const double* kernel, const double* bias,
                              double* y, std::size_t begin, std::size_t end, std::size_t h,
                              std::size_t w, std::size_t c) {
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t q = 0; q < w; ++q) {
      double* out = y + (r * w + q) * c;
      for (std::size_t ch = 0; ch < c; ++ch) out[ch] = bias ? bias[ch] : 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        const long rr = static_cast<long>(r) + dr;
        if (rr < 0 || rr >= static_cast<long>(h)) continue;
        for (int dq = -1; dq <= 1; ++dq) {
          const long qq = static_cast<long>(q) + dq;
          if (qq < 0 || qq >= static_cast<long>(w)) continue;
          const double* in = x + (static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(qq)) * c;
          const std::size_t tap = static_cast<std::size_t>((dr + 1) * 3 + (dq + 1));
          for (std::size_t ch = 0; ch < c; ++ch) out[ch] += kernel[ch * 9 + tap] * in[ch];
        }
      }
    }
  }
}

}  // namespace daef::kernels::rows
