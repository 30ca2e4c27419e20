#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "daef/blocks.hpp"
#include "daef/layers.hpp"
#include "daef/param_store.hpp"

namespace daef {

struct ModelConfig {
  std::size_t image_size = 32;
  std::size_t in_channels = 1;
  std::size_t num_classes = 2;
  std::array<std::size_t, 3> embed_dims{32, 64, 128};
  std::size_t blocks_per_stage = 2;
  DualStrategy strategy = DualStrategy::Sequential;
  std::size_t skip_connections = 2;
  std::size_t expansion_ratio = 4;
  bool scca_use_eq2_order = false;
  bool t_residual_mlp_only = false;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument listing every violated constraint.
  void validate() const;
};

struct PatchEmbedParams {
  Linear proj;  // (7*7*in_channels) x d
  LayerNormParams norm;
};

// Overlapping patch embedding: 7x7 windows, stride 4, zero padding 3, a linear
// map per window, then layer norm. (H x W x C) -> TokenMap of (H/4)*(W/4) tokens.
TokenMap patch_embed(const Tensor& image, const PatchEmbedParams& p);

// 2x2 token neighborhoods concatenated (4d) and mapped to 2d by `reduction` (4d x 2d).
TokenMap patch_merge(const TokenMap& x, const Tensor& reduction);

// Linear map d -> factor*d (`projection`: d x factor*d), then each token is
// spread over a factor x factor patch of width d/factor.
TokenMap patch_expand(const TokenMap& x, std::size_t factor, const Tensor& projection);

// Hierarchical U-shaped dual-attention segmentation network.
//
// Encoder stage s (s = 0, 1, 2): patch embed (s = 0) or patch merge, then
// `blocks_per_stage` dual blocks. Decoder stage s runs from s = 2 up to 0:
// optional SCCA with the encoder output of stage s followed by a 2d -> d linear
// (the top `skip_connections` stages only; never the lowest), dual blocks,
// then a x2 patch expand (s > 0) or the x4 head expand and per-pixel classifier.
class Model {
 public:
  explicit Model(const ModelConfig& config);

  // image: H x W x C  ->  logits H x W x num_classes
  Tensor forward(const Tensor& image) const;
  // Same logits as a (H*W) x num_classes matrix, raster order.
  Tensor forward_tokens(const Tensor& image) const;

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return store_; }
  ParamStore& params() { return store_; }

 private:
  struct DecoderStage {
    bool has_scca = false;
    SccaParams scca;
    Linear scca_proj;  // 2d -> d
    std::vector<BlockParams> blocks;
    Tensor expand;
  };

  ModelConfig config_;
  ParamStore store_;
  PatchEmbedParams embed_;
  std::array<Tensor, 2> merges_;
  std::array<std::vector<BlockParams>, 3> encoder_blocks_;
  std::array<DecoderStage, 3> decoder_;
  Linear classifier_;
};

std::size_t param_count(const ModelConfig& config);

// Scalar learnables grouped by module (first two name components), in build order.
std::vector<std::pair<std::string, std::size_t>> param_breakdown(const ModelConfig& config);

}  // namespace daef
