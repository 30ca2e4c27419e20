#pragma once

#include <cstddef>
#include <string>

#include "daef/param_store.hpp"
#include "daef/tensor.hpp"

namespace daef {

// Tokens (n x d) together with their spatial grid; n == h * w always.
class TokenMap {
 public:
  TokenMap(Tensor tokens, std::size_t h, std::size_t w);

  const Tensor& tokens() const { return tokens_; }
  std::size_t h() const { return h_; }
  std::size_t w() const { return w_; }
  std::size_t n() const { return tokens_.dim(0); }
  std::size_t d() const { return tokens_.dim(1); }

  TokenMap with_tokens(Tensor tokens) const { return TokenMap(std::move(tokens), h_, w_); }

 private:
  Tensor tokens_;
  std::size_t h_, w_;
};

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // out, or undefined
};

Linear make_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                   bool with_bias, Rng& rng);
Tensor linear(const Tensor& x, const Linear& layer);

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

LayerNormParams make_layer_norm(ParamStore& store, const std::string& name, std::size_t d);
Tensor layer_norm(const Tensor& x, const LayerNormParams& ln);

}  // namespace daef
