#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "daef/attention.hpp"
#include "daef/layers.hpp"

namespace daef {

enum class DualStrategy { Sequential, SimpleAdditive, ComplexAdditive, Concatenation };

std::string to_string(DualStrategy s);
// Accepts "sequential", "simple_additive", "complex_additive", "concatenation".
DualStrategy parse_strategy(const std::string& name);

// FC(in -> hidden) -> depth-wise 3x3 conv -> GELU -> FC(hidden -> out)
struct MixFfnParams {
  Linear fc1;
  Tensor dw_kernel;  // hidden x 9
  Tensor dw_bias;    // hidden
  Linear fc2;
};

MixFfnParams make_mix_ffn(ParamStore& store, const std::string& prefix, std::size_t in,
                          std::size_t hidden, std::size_t out, Rng& rng);
TokenMap mix_ffn(const TokenMap& x, const MixFfnParams& p);

// MLP(LN(x)) as used by the add & norm stages.
struct NormFfn {
  LayerNormParams norm;
  MixFfnParams ffn;
};

NormFfn make_norm_ffn(ParamStore& store, const std::string& prefix, std::size_t d,
                      std::size_t expansion, Rng& rng);
Tensor norm_ffn(const TokenMap& x, const NormFfn& p);

struct ComplexAdditiveFusion {
  NormFfn fuse;
};

struct ConcatenationFusion {
  LayerNormParams norm_e;
  LayerNormParams norm_t;
  MixFfnParams reduce;  // 2d -> d
  LayerNormParams norm_out;
};

using FusionParams = std::variant<std::monostate, ComplexAdditiveFusion, ConcatenationFusion>;

struct BlockParams {
  DualStrategy strategy = DualStrategy::Sequential;
  AttentionParams efficient;
  AttentionParams transpose;
  NormFfn ffn1;
  NormFfn ffn2;
  FusionParams fusion;
  // Residual after transpose attention: false adds MLP1(E)+E (default), true adds MLP1(E) only.
  bool t_residual_mlp_only = false;
};

BlockParams make_block(ParamStore& store, const std::string& prefix, std::size_t d,
                       std::size_t expansion, DualStrategy strategy, Rng& rng,
                       bool t_residual_mlp_only = false);

// E = E(x) + x; M1 = MLP(LN(E)); U = M1 + E; T = T(U) + U; out = MLP(LN(T)) + T
TokenMap dual_block_sequential(const TokenMap& x, const BlockParams& p);

// Sequential:      dual_block_sequential
// SimpleAdditive:  Y = E(x) + T(x) + x; Z = MLP1(LN(Y)) + Y; out = MLP2(LN(Z)) + Z
// ComplexAdditive: Eb = E(x) + x, Tb = T(x) + x, each through its own norm & FFN
//                  with residual, summed, then a fusing norm & FFN with residual
// Concatenation:   the same two branches, each layer-normalized, concatenated to
//                  2d, reduced to d by a Mix-FFN, then layer-normalized
// Throws std::invalid_argument when the fusion parameters for `strategy` are absent.
TokenMap dual_block_variant(const TokenMap& x, const BlockParams& p, DualStrategy strategy);

inline TokenMap dual_block(const TokenMap& x, const BlockParams& p) {
  return dual_block_variant(x, p, p.strategy);
}

}  // namespace daef
