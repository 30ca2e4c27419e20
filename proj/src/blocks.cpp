#include "daef/blocks.hpp"

#include <stdexcept>

#include "daef/ops.hpp"

namespace daef {

std::string to_string(DualStrategy s) {
  switch (s) {
    case DualStrategy::Sequential: return "sequential";
    case DualStrategy::SimpleAdditive: return "simple_additive";
    case DualStrategy::ComplexAdditive: return "complex_additive";
    case DualStrategy::Concatenation: return "concatenation";
  }
  return "unknown";
}

DualStrategy parse_strategy(const std::string& name) {
  if (name == "sequential") return DualStrategy::Sequential;
  if (name == "simple_additive") return DualStrategy::SimpleAdditive;
  if (name == "complex_additive") return DualStrategy::ComplexAdditive;
  if (name == "concatenation") return DualStrategy::Concatenation;
  throw std::invalid_argument("unknown dual attention strategy '" + name + "'");
}

MixFfnParams make_mix_ffn(ParamStore& store, const std::string& prefix, std::size_t in,
                          std::size_t hidden, std::size_t out, Rng& rng) {
  MixFfnParams p;
  p.fc1 = make_linear(store, prefix + ".fc1", in, hidden, true, rng);
  p.dw_kernel = store.truncated_normal(prefix + ".dw.weight", {hidden, 9}, rng);
  p.dw_bias = store.zeros(prefix + ".dw.bias", {hidden});
  p.fc2 = make_linear(store, prefix + ".fc2", hidden, out, true, rng);
  return p;
}

TokenMap mix_ffn(const TokenMap& x, const MixFfnParams& p) {
  Tensor hidden = linear(x.tokens(), p.fc1);
  hidden = depthwise_conv3x3(hidden, x.h(), x.w(), p.dw_kernel, p.dw_bias);
  return x.with_tokens(linear(gelu(hidden), p.fc2));
}

NormFfn make_norm_ffn(ParamStore& store, const std::string& prefix, std::size_t d,
                      std::size_t expansion, Rng& rng) {
  NormFfn p;
  p.norm = make_layer_norm(store, prefix + ".norm", d);
  p.ffn = make_mix_ffn(store, prefix + ".ffn", d, expansion * d, d, rng);
  return p;
}

Tensor norm_ffn(const TokenMap& x, const NormFfn& p) {
  return mix_ffn(x.with_tokens(layer_norm(x.tokens(), p.norm)), p.ffn).tokens();
}

BlockParams make_block(ParamStore& store, const std::string& prefix, std::size_t d,
                       std::size_t expansion, DualStrategy strategy, Rng& rng,
                       bool t_residual_mlp_only) {
  BlockParams p;
  p.strategy = strategy;
  p.t_residual_mlp_only = t_residual_mlp_only;
  p.efficient = make_efficient_attention(store, prefix + ".efficient", d, rng);
  p.transpose = make_transpose_attention(store, prefix + ".transpose", d, rng);
  p.ffn1 = make_norm_ffn(store, prefix + ".mlp1", d, expansion, rng);
  p.ffn2 = make_norm_ffn(store, prefix + ".mlp2", d, expansion, rng);
  if (strategy == DualStrategy::ComplexAdditive) {
    p.fusion = ComplexAdditiveFusion{make_norm_ffn(store, prefix + ".fuse", d, expansion, rng)};
  } else if (strategy == DualStrategy::Concatenation) {
    ConcatenationFusion f;
    f.norm_e = make_layer_norm(store, prefix + ".fuse.norm_e", d);
    f.norm_t = make_layer_norm(store, prefix + ".fuse.norm_t", d);
    f.reduce = make_mix_ffn(store, prefix + ".fuse.reduce", 2 * d, expansion * d, d, rng);
    f.norm_out = make_layer_norm(store, prefix + ".fuse.norm_out", d);
    p.fusion = f;
  }
  return p;
}

TokenMap dual_block_sequential(const TokenMap& x, const BlockParams& p) {
  const Tensor& in = x.tokens();
  Tensor e_block = add(efficient_attention(in, p.efficient), in);
  Tensor mlp1 = norm_ffn(x.with_tokens(e_block), p.ffn1);
  Tensor u = add(mlp1, e_block);
  Tensor t_block = add(transpose_attention(u, p.transpose), p.t_residual_mlp_only ? mlp1 : u);
  Tensor mlp2 = norm_ffn(x.with_tokens(t_block), p.ffn2);
  return x.with_tokens(add(mlp2, t_block));
}

namespace {

// Attention plus residual, then norm & FFN plus residual.
Tensor branch(const TokenMap& x, const Tensor& attended, const NormFfn& ffn) {
  Tensor b = add(attended, x.tokens());
  return add(norm_ffn(x.with_tokens(b), ffn), b);
}

}  // namespace

TokenMap dual_block_variant(const TokenMap& x, const BlockParams& p, DualStrategy strategy) {
  const Tensor& in = x.tokens();
  switch (strategy) {
    case DualStrategy::Sequential:
      return dual_block_sequential(x, p);
    case DualStrategy::SimpleAdditive: {
      Tensor y = add(add(efficient_attention(in, p.efficient), transpose_attention(in, p.transpose)), in);
      Tensor z = add(norm_ffn(x.with_tokens(y), p.ffn1), y);
      return x.with_tokens(add(norm_ffn(x.with_tokens(z), p.ffn2), z));
    }
    case DualStrategy::ComplexAdditive: {
      const auto* f = std::get_if<ComplexAdditiveFusion>(&p.fusion);
      if (f == nullptr) throw std::invalid_argument("complex additive block lacks fusion parameters");
      Tensor e = branch(x, efficient_attention(in, p.efficient), p.ffn1);
      Tensor t = branch(x, transpose_attention(in, p.transpose), p.ffn2);
      Tensor y = add(e, t);
      return x.with_tokens(add(norm_ffn(x.with_tokens(y), f->fuse), y));
    }
    case DualStrategy::Concatenation: {
      const auto* f = std::get_if<ConcatenationFusion>(&p.fusion);
      if (f == nullptr) throw std::invalid_argument("concatenation block lacks fusion parameters");
      Tensor e = layer_norm(branch(x, efficient_attention(in, p.efficient), p.ffn1), f->norm_e);
      Tensor t = layer_norm(branch(x, transpose_attention(in, p.transpose), p.ffn2), f->norm_t);
      Tensor reduced = mix_ffn(x.with_tokens(concat_cols(e, t)), f->reduce).tokens();
      return x.with_tokens(layer_norm(reduced, f->norm_out));
    }
  }
  throw std::invalid_argument("unknown dual attention strategy");
}

}  // namespace daef
