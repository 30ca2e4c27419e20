#include "daef/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "daef/ops.hpp"

namespace daef {

namespace {

void require_qkv(const Tensor& q, const Tensor& k, const Tensor& v, const char* op) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
    throw DimensionError(std::string(op) + ": Q, K, V must be matrices");
  }
  if (q.dim(0) != k.dim(0) || k.dim(0) != v.dim(0)) {
    throw DimensionError(std::string(op) + ": token counts differ (" + shape_str(q.shape()) +
                         ", " + shape_str(k.shape()) + ", " + shape_str(v.shape()) + ")");
  }
  if (q.dim(1) != k.dim(1)) {
    throw DimensionError(std::string(op) + ": query and key widths differ");
  }
}

}  // namespace

AttentionParams make_efficient_attention(ParamStore& store, const std::string& prefix,
                                         std::size_t d, Rng& rng) {
  if (d % 2 != 0) throw DimensionError("efficient attention needs an even width");
  AttentionParams p;
  p.w_q = store.truncated_normal(prefix + ".w_q", {d, d / 2}, rng);
  p.w_k = store.truncated_normal(prefix + ".w_k", {d, d / 2}, rng);
  p.w_v = store.truncated_normal(prefix + ".w_v", {d, d}, rng);
  return p;
}

AttentionParams make_transpose_attention(ParamStore& store, const std::string& prefix,
                                         std::size_t d, Rng& rng) {
  AttentionParams p;
  p.w_q = store.truncated_normal(prefix + ".w_q", {d, d}, rng);
  p.w_k = store.truncated_normal(prefix + ".w_k", {d, d}, rng);
  p.w_v = store.truncated_normal(prefix + ".w_v", {d, d}, rng);
  p.tau = store.ones(prefix + ".tau", {1});
  return p;
}

Tensor standard_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  require_qkv(q, k, v, "standard_attention");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  Tensor scores = scale(matmul_nt(q, k), inv_sqrt_dk);
  return matmul(softmax(scores, 1), v);
}

Tensor efficient_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  require_qkv(q, k, v, "efficient_attention");
  Tensor context = matmul_tn(softmax(k, 0), v);  // d_k x d_v
  return matmul(softmax(q, 1), context);
}

Tensor transpose_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& tau) {
  require_qkv(q, k, v, "transpose_attention");
  if (q.dim(1) != v.dim(1)) throw DimensionError("transpose_attention: Q, K, V widths differ");
  if (tau.numel() != 1) throw DimensionError("transpose_attention: tau must be a scalar");
  if (!(tau.item() > 0.0)) {
    throw std::invalid_argument("transpose_attention: tau must be positive, got " +
                                std::to_string(tau.item()));
  }
  Tensor qn = l2_normalize(q, 0);
  Tensor kn = l2_normalize(k, 0);
  Tensor cross = div_scalar(matmul_tn(kn, qn), tau);  // d x d, K^T Q
  return matmul(v, softmax(cross, 0));
}

Tensor transpose_attention(const Tensor& q, const Tensor& k, const Tensor& v, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("transpose_attention: tau must be positive, got " +
                                std::to_string(tau));
  }
  return transpose_attention(q, k, v, Tensor::scalar(tau));
}

Tensor efficient_attention(const Tensor& x, const AttentionParams& p) {
  return efficient_attention(matmul(x, p.w_q), matmul(x, p.w_k), matmul(x, p.w_v));
}

Tensor transpose_attention(const Tensor& x, const AttentionParams& p) {
  return transpose_attention(matmul(x, p.w_q), matmul(x, p.w_k), matmul(x, p.w_v), p.tau);
}

SccaParams make_scca(ParamStore& store, const std::string& prefix, std::size_t d_decoder,
                     std::size_t d_skip, bool eq2_order, Rng& rng) {
  SccaParams p;
  p.fc = make_linear(store, prefix + ".fc", d_decoder, d_skip, true, rng);
  p.w_q = store.truncated_normal(prefix + ".w_q", {d_skip, d_skip}, rng);
  p.w_k = store.truncated_normal(prefix + ".w_k", {d_skip, d_skip}, rng);
  p.w_v = store.truncated_normal(prefix + ".w_v", {d_skip, d_skip}, rng);
  p.eq2_order = eq2_order;
  return p;
}

Tensor scca_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
    throw DimensionError("scca_attention: operands must be matrices");
  }
  if (k.dim(0) != q.dim(0) || v.dim(0) != q.dim(0) || v.dim(1) != k.dim(1)) {
    throw DimensionError("scca_attention: q " + shape_str(q.shape()) + ", k " +
                         shape_str(k.shape()) + ", v " + shape_str(v.shape()));
  }
  // rho_k(K^T) is K^T softmaxed along tokens, i.e. softmax(K, 0)^T. The
  // product is associated right-first so only d x d intermediates appear.
  return matmul(softmax(v, 1), matmul_tn(softmax(k, 0), q));
}

Tensor scca(const Tensor& x1, const Tensor& x2, const SccaParams& p) {
  if (x1.rank() != 2 || x2.rank() != 2) throw DimensionError("scca: inputs must be matrices");
  if (x1.dim(0) != x2.dim(0)) {
    throw DimensionError("scca: decoder has " + std::to_string(x1.dim(0)) +
                         " tokens, skip has " + std::to_string(x2.dim(0)));
  }
  Tensor x1p = linear(x1, p.fc);
  Tensor k = matmul(x1p, p.w_k);
  Tensor v = matmul(x1p, p.w_v);
  Tensor q = matmul(x2, p.w_q);
  Tensor attended = p.eq2_order ? efficient_attention(q, k, v) : scca_attention(q, k, v);
  return concat_cols(attended, x2);
}

}  // namespace daef
