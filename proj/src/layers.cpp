#include "daef/layers.hpp"

#include "daef/ops.hpp"

namespace daef {

TokenMap::TokenMap(Tensor tokens, std::size_t h, std::size_t w)
    : tokens_(std::move(tokens)), h_(h), w_(w) {
  if (tokens_.rank() != 2) throw DimensionError("TokenMap: tokens must be a matrix");
  if (tokens_.dim(0) != h * w) {
    throw GridError("TokenMap: " + std::to_string(tokens_.dim(0)) + " tokens for a " +
                    std::to_string(h) + "x" + std::to_string(w) + " grid");
  }
}

Linear make_linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                   bool with_bias, Rng& rng) {
  Linear l;
  l.weight = store.truncated_normal(name + ".weight", {in, out}, rng);
  if (with_bias) l.bias = store.zeros(name + ".bias", {out});
  return l;
}

Tensor linear(const Tensor& x, const Linear& layer) {
  Tensor y = matmul(x, layer.weight);
  return layer.bias.defined() ? add_row(y, layer.bias) : y;
}

LayerNormParams make_layer_norm(ParamStore& store, const std::string& name, std::size_t d) {
  return {store.ones(name + ".gamma", {d}), store.zeros(name + ".beta", {d})};
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& ln) {
  return layer_norm(x, ln.gamma, ln.beta, 1e-6);
}

}  // namespace daef
