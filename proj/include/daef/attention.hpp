#pragma once

#include <cstddef>
#include <string>

#include "daef/layers.hpp"
#include "daef/param_store.hpp"
#include "daef/tensor.hpp"

namespace daef {

// Single-head projections. Queries/keys/values are x * w_{q,k,v}; no output
// projection. `tau` is only defined for transpose attention.
struct AttentionParams {
  Tensor w_q;  // d_in x d_k
  Tensor w_k;  // d_in x d_k
  Tensor w_v;  // d_in x d_v
  Tensor tau;  // one element, > 0
};

// d_k = d/2, d_v = d.
AttentionParams make_efficient_attention(ParamStore& store, const std::string& prefix,
                                         std::size_t d, Rng& rng);
// d_k = d_v = d, tau initialized to 1.
AttentionParams make_transpose_attention(ParamStore& store, const std::string& prefix,
                                         std::size_t d, Rng& rng);

// softmax(Q K^T / sqrt(d_k)) V. Materializes the n x n score matrix.
Tensor standard_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// rho_q(Q) (rho_k(K)^T V): queries softmaxed over channels, keys over tokens.
// The d_k x d_v context is formed first; no n x n buffer exists.
Tensor efficient_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// V softmax(K^T Q / tau) with Q, K l2-normalized along the token axis and the
// softmax taken down each column of the d x d map.
Tensor transpose_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& tau);
Tensor transpose_attention(const Tensor& q, const Tensor& k, const Tensor& v, double tau);

Tensor efficient_attention(const Tensor& x, const AttentionParams& p);
Tensor transpose_attention(const Tensor& x, const AttentionParams& p);

// Skip-connection cross attention.
//   X1' = fc(X1)                     decoder feature brought to the skip width
//   K = X1' w_k, V = X1' w_v, Q = X2 w_q
//   attended = rho_v(V) rho_k(K^T) Q  (or efficient_attention(Q, K, V) when eq2_order)
//   output   = [attended | X2]        width 2 * d_skip
struct SccaParams {
  Linear fc;   // d_decoder -> d_skip
  Tensor w_q;  // d_skip x d_skip
  Tensor w_k;
  Tensor w_v;
  bool eq2_order = false;
};

SccaParams make_scca(ParamStore& store, const std::string& prefix, std::size_t d_decoder,
                     std::size_t d_skip, bool eq2_order, Rng& rng);

// rho_v(V) (rho_k(K^T) Q): V softmaxed over channels, K over tokens.
// q: n x d_q, k and v: n x d. Returns n x d_q without an n x n buffer.
Tensor scca_attention(const Tensor& q, const Tensor& k, const Tensor& v);

Tensor scca(const Tensor& x1, const Tensor& x2, const SccaParams& p);

}  // namespace daef
