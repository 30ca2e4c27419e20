#pragma once

// Loop-based reference implementations, written independently of the library
// kernels. Everything is plain nested loops over std::vector<double>.

#include <cmath>
#include <cstddef>
#include <vector>

#include "daef/rng.hpp"
#include "daef/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const daef::Tensor& t) {
  const std::size_t r = t.dim(0), c = t.dim(1);
  Mat m(r, std::vector<double>(c));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m[i][j] = t.data()[i * c + j];
  return m;
}

inline daef::Tensor random_tensor(daef::Rng& rng, daef::Shape shape, double lo = -1.0,
                                  double hi = 1.0) {
  std::vector<double> v(daef::shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return daef::Tensor::from(std::move(shape), std::move(v));
}

inline double max_abs_diff(const daef::Tensor& a, const Mat& b) {
  double worst = 0.0;
  const std::size_t c = a.dim(1);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b[i].size(); ++j)
      worst = std::max(worst, std::abs(a.data()[i * c + j] - b[i][j]));
  return worst;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t t = 0; t < b.size(); ++t) c[i][j] += a[i][t] * b[t][j];
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

// Softmax of every row.
inline Mat softmax_rows(const Mat& a) {
  Mat y = a;
  for (auto& row : y) {
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  return y;
}

inline Mat softmax_cols(const Mat& a) { return transpose(softmax_rows(transpose(a))); }

// Explicit n x n weights, then a weighted sum of value rows per query.
inline Mat standard_attention(const Mat& q, const Mat& k, const Mat& v) {
  const std::size_t n = q.size(), dk = q[0].size(), dv = v[0].size();
  Mat out(n, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s(n);
    double mx = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < dk; ++t) dot += q[i][t] * k[j][t];
      s[j] = dot / std::sqrt(static_cast<double>(dk));
      mx = std::max(mx, s[j]);
    }
    double z = 0.0;
    for (double& e : s) z += (e = std::exp(e - mx));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < dv; ++c) out[i][c] += s[j] / z * v[j][c];
  }
  return out;
}

// Materializes the n x n map rho_q(Q) rho_k(K)^T before touching V.
inline Mat efficient_attention_weights(const Mat& q, const Mat& k) {
  return matmul(softmax_rows(q), transpose(softmax_cols(k)));
}

inline Mat efficient_attention(const Mat& q, const Mat& k, const Mat& v) {
  return matmul(efficient_attention_weights(q, k), v);
}

// Channel vectors normalized to unit length, explicit d x d cross covariance,
// softmax down each column, then V times that map.
inline Mat transpose_attention(const Mat& q, const Mat& k, const Mat& v, double tau) {
  const std::size_t n = q.size(), d = q[0].size();
  auto unit_cols = [&](const Mat& m) {
    Mat r = m;
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += m[i][c] * m[i][c];
      const double norm = std::max(std::sqrt(s), 1e-12);
      for (std::size_t i = 0; i < n; ++i) r[i][c] = m[i][c] / norm;
    }
    return r;
  };
  const Mat qh = unit_cols(q), kh = unit_cols(k);
  Mat cov(d, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t i = 0; i < n; ++i) cov[a][b] += kh[i][a] * qh[i][b];
      cov[a][b] /= tau;
    }
  return matmul(v, softmax_cols(cov));
}

// rho_v(V) rho_k(K^T) Q term by term: out[i][c] = sum_a sv[i][a] sum_j sk[a][j] q[j][c],
// with sv the channel softmax of V and sk the token softmax of K^T's rows.
inline Mat scca_attention(const Mat& q, const Mat& k, const Mat& v) {
  const std::size_t n = q.size(), dq = q[0].size(), d = k[0].size();
  const Mat sv = softmax_rows(v);
  const Mat sk = softmax_rows(transpose(k));  // d x n, each channel over tokens
  Mat out(n, std::vector<double>(dq, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dq; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        double inner = 0.0;
        for (std::size_t j = 0; j < n; ++j) inner += sk[a][j] * q[j][c];
        acc += sv[i][a] * inner;
      }
      out[i][c] = acc;
    }
  return out;
}

// ---- closed-form parameter counts ----

inline std::size_t linear(std::size_t in, std::size_t out) { return in * out + out; }
inline std::size_t norm(std::size_t d) { return 2 * d; }
inline std::size_t mix_ffn(std::size_t in, std::size_t hidden, std::size_t out) {
  return linear(in, hidden) + 10 * hidden + linear(hidden, out);
}
inline std::size_t norm_ffn(std::size_t d, std::size_t r) { return norm(d) + mix_ffn(d, r * d, d); }

// strategy: 0 sequential, 1 simple additive, 2 complex additive, 3 concatenation
inline std::size_t block(std::size_t d, std::size_t r, int strategy) {
  std::size_t n = 2 * d * (d / 2) + d * d;  // efficient: w_q, w_k (d x d/2), w_v
  n += 3 * d * d + 1;                       // transpose: three d x d and tau
  n += 2 * norm_ffn(d, r);
  if (strategy == 2) n += norm_ffn(d, r);
  if (strategy == 3) n += 3 * norm(d) + mix_ffn(2 * d, r * d, d);
  return n;
}

inline std::size_t scca_stage(std::size_t d) { return linear(d, d) + 3 * d * d + linear(2 * d, d); }

inline std::size_t model(std::size_t in_ch, std::size_t classes, std::size_t d0, std::size_t d1,
                         std::size_t d2, std::size_t blocks, std::size_t r, int strategy,
                         std::size_t skips) {
  const std::size_t d[3] = {d0, d1, d2};
  std::size_t n = linear(49 * in_ch, d0) + norm(d0);
  n += 4 * d0 * d1 + 4 * d1 * d2;
  for (std::size_t s = 0; s < 3; ++s) n += 2 * blocks * block(d[s], r, strategy);
  for (std::size_t s = 0; s < skips && s < 2; ++s) n += scca_stage(d[s]);
  n += d2 * 2 * d2 + d1 * 2 * d1 + d0 * 4 * d0;
  n += linear(d0 / 4, classes);
  return n;
}

}  // namespace oracle

namespace oracle {

// Overwrites a parameter's values in place (the handle shares storage).
inline void assign(daef::Tensor t, double value) {
  for (double& v : t.mutable_data()) v = value;
}

inline void assign_identity(daef::Tensor t) {
  assign(t, 0.0);
  const std::size_t r = t.dim(0), c = t.dim(1);
  for (std::size_t i = 0; i < std::min(r, c); ++i) t.mutable_data()[i * c + i] = 1.0;
}

inline void jitter(daef::Tensor t, daef::Rng& rng, double amount) {
  for (double& v : t.mutable_data()) v += rng.uniform(-amount, amount);
}

}  // namespace oracle
