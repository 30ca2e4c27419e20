#include "daef/model.hpp"

#include <sstream>
#include <stdexcept>

#include "daef/ops.hpp"

namespace daef {

void ModelConfig::validate() const {
  std::vector<std::string> errors;
  if (image_size == 0 || image_size % 16 != 0) {
    errors.push_back("image_size must be a positive multiple of 16");
  }
  if (in_channels == 0) errors.push_back("in_channels must be positive");
  if (num_classes == 0) errors.push_back("num_classes must be positive");
  for (std::size_t d : embed_dims) {
    if (d == 0 || d % 2 != 0) errors.push_back("embed_dims entries must be positive and even");
  }
  if (embed_dims[1] != 2 * embed_dims[0] || embed_dims[2] != 2 * embed_dims[1]) {
    errors.push_back("embed_dims must double from stage to stage");
  }
  if (embed_dims[0] % 4 != 0) errors.push_back("embed_dims[0] must be divisible by 4");
  if (blocks_per_stage == 0) errors.push_back("blocks_per_stage must be positive");
  if (skip_connections > 2) errors.push_back("skip_connections must be 0, 1 or 2");
  if (expansion_ratio == 0) errors.push_back("expansion_ratio must be positive");
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid model config:";
    for (const auto& e : errors) os << "\n  - " << e;
    throw std::invalid_argument(os.str());
  }
}

TokenMap patch_embed(const Tensor& image, const PatchEmbedParams& p) {
  if (image.rank() != 3) throw DimensionError("patch_embed: image must be H x W x C");
  const std::size_t h = image.dim(0), w = image.dim(1);
  if (h % 4 != 0 || w % 4 != 0) {
    throw GridError("patch_embed: image " + shape_str(image.shape()) + " not divisible by 4");
  }
  Tensor windows = extract_windows(image, 7, 4, 3);
  Tensor tokens = layer_norm(linear(windows, p.proj), p.norm);
  return TokenMap(std::move(tokens), h / 4, w / 4);
}

TokenMap patch_merge(const TokenMap& x, const Tensor& reduction) {
  if (x.h() % 2 != 0 || x.w() % 2 != 0) {
    throw GridError("patch_merge: grid " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                    " is not even");
  }
  Tensor gathered = space_to_depth(x.tokens(), x.h(), x.w(), 2);
  return TokenMap(matmul(gathered, reduction), x.h() / 2, x.w() / 2);
}

TokenMap patch_expand(const TokenMap& x, std::size_t factor, const Tensor& projection) {
  if (factor == 0 || x.d() % factor != 0) {
    throw DimensionError("patch_expand: width " + std::to_string(x.d()) +
                         " not divisible by factor " + std::to_string(factor));
  }
  if (projection.rank() != 2 || projection.dim(1) != factor * x.d()) {
    throw DimensionError("patch_expand: projection must be d x factor*d");
  }
  Tensor widened = matmul(x.tokens(), projection);
  return TokenMap(depth_to_space(widened, x.h(), x.w(), factor), x.h() * factor, x.w() * factor);
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const auto& dims = config_.embed_dims;
  const std::size_t r = config_.expansion_ratio;

  embed_.proj = make_linear(store_, "encoder.embed.proj", 49 * config_.in_channels, dims[0], true, rng);
  embed_.norm = make_layer_norm(store_, "encoder.embed.norm", dims[0]);
  for (std::size_t s = 0; s < 3; ++s) {
    if (s > 0) {
      merges_[s - 1] = store_.truncated_normal("encoder.merge" + std::to_string(s) + ".reduction",
                                               {4 * dims[s - 1], dims[s]}, rng);
    }
    for (std::size_t b = 0; b < config_.blocks_per_stage; ++b) {
      encoder_blocks_[s].push_back(make_block(store_,
                                              "encoder.stage" + std::to_string(s) + ".block" + std::to_string(b),
                                              dims[s], r, config_.strategy, rng,
                                              config_.t_residual_mlp_only));
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t s = 2 - i;  // build lowest first, matching execution order
    DecoderStage& stage = decoder_[s];
    const std::string prefix = "decoder.stage" + std::to_string(s);
    stage.has_scca = s < 2 && s < config_.skip_connections;
    if (stage.has_scca) {
      stage.scca = make_scca(store_, prefix + ".scca", dims[s], dims[s],
                             config_.scca_use_eq2_order, rng);
      stage.scca_proj = make_linear(store_, prefix + ".scca_proj", 2 * dims[s], dims[s], true, rng);
    }
    for (std::size_t b = 0; b < config_.blocks_per_stage; ++b) {
      stage.blocks.push_back(make_block(store_, prefix + ".block" + std::to_string(b), dims[s], r,
                                        config_.strategy, rng, config_.t_residual_mlp_only));
    }
    const std::size_t factor = s == 0 ? 4 : 2;
    stage.expand = store_.truncated_normal(s == 0 ? "head.expand" : prefix + ".expand",
                                           {dims[s], factor * dims[s]}, rng);
  }
  classifier_ = make_linear(store_, "head.classifier", dims[0] / 4, config_.num_classes, true, rng);
}

Tensor Model::forward_tokens(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != config_.image_size ||
      image.dim(1) != config_.image_size || image.dim(2) != config_.in_channels) {
    throw DimensionError("model: image " + shape_str(image.shape()) + " does not match config (" +
                         std::to_string(config_.image_size) + "x" +
                         std::to_string(config_.image_size) + "x" +
                         std::to_string(config_.in_channels) + ")");
  }
  std::vector<TokenMap> skips;
  TokenMap x = patch_embed(image, embed_);
  for (std::size_t s = 0; s < 3; ++s) {
    if (s > 0) x = patch_merge(x, merges_[s - 1]);
    for (const BlockParams& b : encoder_blocks_[s]) x = dual_block(x, b);
    skips.push_back(x);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t s = 2 - i;
    const DecoderStage& stage = decoder_[s];
    if (stage.has_scca) {
      Tensor fused = scca(x.tokens(), skips[s].tokens(), stage.scca);
      x = x.with_tokens(linear(fused, stage.scca_proj));
    }
    for (const BlockParams& b : stage.blocks) x = dual_block(x, b);
    x = patch_expand(x, s == 0 ? 4 : 2, stage.expand);
  }
  return linear(x.tokens(), classifier_);
}

Tensor Model::forward(const Tensor& image) const {
  return reshape(forward_tokens(image),
                 {config_.image_size, config_.image_size, config_.num_classes});
}

std::size_t param_count(const ModelConfig& config) {
  return Model(config).params().scalar_count();
}

std::vector<std::pair<std::string, std::size_t>> param_breakdown(const ModelConfig& config) {
  Model model(config);
  std::vector<std::pair<std::string, std::size_t>> groups;
  for (const auto& [name, t] : model.params().entries()) {
    const auto first = name.find('.');
    const auto second = first == std::string::npos ? first : name.find('.', first + 1);
    const std::string group = name.substr(0, second);
    if (groups.empty() || groups.back().first != group) groups.emplace_back(group, 0);
    groups.back().second += t.numel();
  }
  return groups;
}

}  // namespace daef
