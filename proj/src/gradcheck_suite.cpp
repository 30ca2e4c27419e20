#include "daef/gradcheck_suite.hpp"

#include <functional>
#include <stdexcept>

#include "daef/attention.hpp"
#include "daef/blocks.hpp"
#include "daef/gradcheck.hpp"
#include "daef/losses.hpp"
#include "daef/model.hpp"
#include "daef/ops.hpp"
#include "daef/synth.hpp"

namespace daef {

GradScope parse_grad_scope(const std::string& name) {
  if (name == "op") return GradScope::Op;
  if (name == "block") return GradScope::Block;
  if (name == "model") return GradScope::Model;
  throw std::invalid_argument("unknown gradcheck scope '" + name + "' (op, block, model)");
}

std::string to_string(GradScope scope) {
  switch (scope) {
    case GradScope::Op: return "op";
    case GradScope::Block: return "block";
    case GradScope::Model: return "model";
  }
  return "?";
}

namespace {

using Inputs = std::vector<std::pair<std::string, Tensor>>;

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& e : v) e = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Random linear functional of an op output, so every output element carries a
// distinct, non-degenerate weight.
std::function<Tensor(const Tensor&)> probe(Rng& rng, const Shape& shape) {
  Tensor w = random_tensor(rng, shape, -1.0, 1.0);
  w.set_requires_grad(false);
  return [w](const Tensor& y) { return dot(y, w); };
}

class Suite {
 public:
  Suite(std::uint64_t seed) : rng_(seed) {}

  Rng& rng() { return rng_; }

  // `op` maps the inputs to a tensor, reduced to a scalar by a random probe.
  void op(const std::string& name, Inputs inputs, const std::function<Tensor(const Inputs&)>& fn,
          double tol, std::size_t max_per_tensor = 0) {
    auto shape = fn(inputs).shape();
    auto reduce = probe(rng_, shape);
    run(name, inputs, [&] { return reduce(fn(inputs)); }, tol, max_per_tensor);
  }

  void scalar(const std::string& name, Inputs inputs, const std::function<Tensor()>& fn, double tol,
              std::size_t max_per_tensor = 0) {
    run(name, inputs, fn, tol, max_per_tensor);
  }

  std::vector<GradCheckItem> take() { return std::move(items_); }

 private:
  void run(const std::string& name, const Inputs& inputs, const std::function<Tensor()>& fn,
           double tol, std::size_t max_per_tensor) {
    GradCheckResult r = grad_check_params(fn, inputs, kGradCheckStep, max_per_tensor, &rng_);
    items_.push_back({name, r.max_rel_error, tol, r.checked,
                      r.worst_param + "[" + std::to_string(r.worst_index) + "]", r.worst_analytic,
                      r.worst_numeric});
  }

  Rng rng_;
  std::vector<GradCheckItem> items_;
};

// Moves freshly initialized parameters away from their small-scale init so the
// checks exercise every nonlinearity at O(1) activations.
void jitter(ParamStore& store, Rng& rng) {
  for (const auto& [name, t] : store.entries()) {
    Tensor p = t;
    const bool positive = name.ends_with(".tau");
    for (auto& v : p.mutable_data()) {
      v = positive ? v * rng.uniform(0.8, 1.25) : v + rng.uniform(-0.3, 0.3);
    }
  }
}

Inputs with_params(Inputs inputs, const ParamStore& store) {
  for (const auto& e : store.entries()) inputs.push_back(e);
  return inputs;
}

// x^2 with a backward rule off by a factor of 1.5.
Tensor faulty_square(const Tensor& x) {
  std::vector<double> v(x.data().begin(), x.data().end());
  for (auto& e : v) e *= e;
  return record_op(Tensor::from(x.shape(), std::move(v)), {x}, [x](const Tensor& out) {
    auto g = out.grad();
    auto gx = x.grad_slot();
    auto xv = x.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 3.0 * xv[i] * g[i];
  });
}

void op_checks(Suite& s) {
  Rng& r = s.rng();
  const double tol = kOpTolerance;
  auto in = [&](const char* name, Shape shape, double lo = -1.0, double hi = 1.0) {
    return std::pair<std::string, Tensor>{name, random_tensor(r, std::move(shape), lo, hi)};
  };

  s.op("matmul", {in("a", {4, 3}), in("b", {3, 5})},
       [](const Inputs& x) { return matmul(x[0].second, x[1].second); }, tol);
  s.op("matmul_tn", {in("a", {3, 4}), in("b", {3, 5})},
       [](const Inputs& x) { return matmul_tn(x[0].second, x[1].second); }, tol);
  s.op("matmul_nt", {in("a", {4, 3}), in("b", {5, 3})},
       [](const Inputs& x) { return matmul_nt(x[0].second, x[1].second); }, tol);
  s.op("transpose", {in("a", {4, 3})}, [](const Inputs& x) { return transpose(x[0].second); }, tol);
  s.op("add", {in("a", {3, 4}), in("b", {3, 4})},
       [](const Inputs& x) { return add(x[0].second, x[1].second); }, tol);
  s.op("sub", {in("a", {3, 4}), in("b", {3, 4})},
       [](const Inputs& x) { return sub(x[0].second, x[1].second); }, tol);
  s.op("mul", {in("a", {3, 4}), in("b", {3, 4})},
       [](const Inputs& x) { return mul(x[0].second, x[1].second); }, tol);
  s.op("div", {in("a", {3, 4}), in("b", {3, 4}, 0.5, 2.0)},
       [](const Inputs& x) { return div(x[0].second, x[1].second); }, tol);
  s.op("scale", {in("a", {3, 4})}, [](const Inputs& x) { return scale(x[0].second, -1.7); }, tol);
  s.op("add_scalar", {in("a", {3, 4})},
       [](const Inputs& x) { return add_scalar(x[0].second, 0.3); }, tol);
  s.op("div_scalar", {in("a", {3, 4}), in("s", {1}, 0.5, 2.0)},
       [](const Inputs& x) { return div_scalar(x[0].second, x[1].second); }, tol);
  s.op("add_row", {in("a", {3, 4}), in("bias", {4})},
       [](const Inputs& x) { return add_row(x[0].second, x[1].second); }, tol);
  s.op("gelu", {in("a", {3, 4}, -3.0, 3.0)}, [](const Inputs& x) { return gelu(x[0].second); }, tol);
  s.op("log", {in("a", {3, 4}, 0.2, 3.0)}, [](const Inputs& x) { return log(x[0].second); }, tol);
  {
    // Values kept clear of the clamp edges; the kink itself has no derivative.
    std::vector<double> v{-2.0, -0.7, -0.2, 0.1, 0.45, 0.9, 1.6, 2.5};
    Tensor a = Tensor::from({2, 4}, v, true);
    s.op("clamp", {{"a", a}}, [](const Inputs& x) { return clamp(x[0].second, -1.0, 1.0); }, tol);
  }
  s.op("sum", {in("a", {3, 4})}, [](const Inputs& x) { return sum(x[0].second); }, tol);
  s.op("mean", {in("a", {3, 4})}, [](const Inputs& x) { return mean(x[0].second); }, tol);
  s.op("column_sums", {in("a", {3, 4})},
       [](const Inputs& x) { return column_sums(x[0].second); }, tol);
  s.op("softmax_axis0", {in("a", {5, 4}, -2.0, 2.0)},
       [](const Inputs& x) { return softmax(x[0].second, 0); }, tol);
  s.op("softmax_axis1", {in("a", {5, 4}, -2.0, 2.0)},
       [](const Inputs& x) { return softmax(x[0].second, 1); }, tol);
  s.op("l2_normalize_axis0", {in("a", {5, 4})},
       [](const Inputs& x) { return l2_normalize(x[0].second, 0); }, tol);
  s.op("l2_normalize_axis1", {in("a", {5, 4})},
       [](const Inputs& x) { return l2_normalize(x[0].second, 1); }, tol);
  s.op("layer_norm", {in("a", {5, 6}, -2.0, 2.0), in("gamma", {6}, 0.5, 1.5), in("beta", {6})},
       [](const Inputs& x) { return layer_norm(x[0].second, x[1].second, x[2].second); }, tol);
  s.op("reshape", {in("a", {3, 4})}, [](const Inputs& x) { return reshape(x[0].second, {2, 6}); },
       tol);
  s.op("concat_cols", {in("a", {3, 2}), in("b", {3, 4})},
       [](const Inputs& x) { return concat_cols(x[0].second, x[1].second); }, tol);
  s.op("concat_rows", {in("a", {2, 3}), in("b", {4, 3})},
       [](const Inputs& x) { return concat_rows({x[0].second, x[1].second}); }, tol);
  s.op("slice_cols", {in("a", {3, 6})},
       [](const Inputs& x) { return slice_cols(x[0].second, 2, 3); }, tol);
  s.op("depthwise_conv3x3", {in("x", {12, 3}), in("kernel", {3, 9}), in("bias", {3})},
       [](const Inputs& x) {
         return depthwise_conv3x3(x[0].second, 3, 4, x[1].second, x[2].second);
       },
       tol);
  s.op("extract_windows", {in("image", {6, 5, 2})},
       [](const Inputs& x) { return extract_windows(x[0].second, 3, 2, 1); }, tol);
  s.op("space_to_depth", {in("x", {16, 3})},
       [](const Inputs& x) { return space_to_depth(x[0].second, 4, 4, 2); }, tol);
  s.op("depth_to_space", {in("x", {6, 8})},
       [](const Inputs& x) { return depth_to_space(x[0].second, 2, 3, 2); }, tol);
  s.op("standard_attention", {in("q", {6, 4}), in("k", {6, 4}), in("v", {6, 5})},
       [](const Inputs& x) { return standard_attention(x[0].second, x[1].second, x[2].second); },
       tol);
  s.op("efficient_attention", {in("q", {6, 4}), in("k", {6, 4}), in("v", {6, 5})},
       [](const Inputs& x) { return efficient_attention(x[0].second, x[1].second, x[2].second); },
       tol);
  s.op("transpose_attention",
       {in("q", {6, 4}), in("k", {6, 4}), in("v", {6, 4}), in("tau", {1}, 0.5, 1.5)},
       [](const Inputs& x) {
         return transpose_attention(x[0].second, x[1].second, x[2].second, x[3].second);
       },
       tol);
  s.op("scca_attention", {in("q", {6, 4}), in("k", {6, 5}), in("v", {6, 5})},
       [](const Inputs& x) { return scca_attention(x[0].second, x[1].second, x[2].second); },
       tol);

  // Losses against their logits, through a channel softmax.
  {
    Tensor logits = random_tensor(r, {6, 3}, -2.0, 2.0);
    std::vector<int> labels{0, 2, 1, 1, 0, 2};
    Tensor y = one_hot(labels, 3);
    s.scalar("dice_loss", {{"logits", logits}},
             [=] { return dice_loss(y, softmax(logits, 1)); }, tol);
    s.scalar("ce_loss", {{"logits", logits}}, [=] { return ce_loss(y, softmax(logits, 1)); }, tol);
    s.scalar("total_loss", {{"logits", logits}},
             [=] { return total_loss(y, softmax(logits, 1)); }, tol);
  }
}

void block_checks(Suite& s) {
  Rng& r = s.rng();
  const double tol = kBlockTolerance;
  const std::size_t h = 3, w = 4, d = 8;
  auto tokens = [&](std::size_t cols) {
    return std::pair<std::string, Tensor>{"x", random_tensor(r, {h * w, cols})};
  };

  {
    ParamStore store;
    MixFfnParams p = make_mix_ffn(store, "mix_ffn", d, 2 * d, d, r);
    jitter(store, r);
    s.op("mix_ffn", with_params({tokens(d)}, store),
         [=](const Inputs& x) { return mix_ffn(TokenMap(x[0].second, h, w), p).tokens(); }, tol);
  }
  {
    ParamStore store;
    AttentionParams p = make_efficient_attention(store, "efficient", d, r);
    jitter(store, r);
    s.op("efficient_attention_layer", with_params({tokens(d)}, store),
         [=](const Inputs& x) { return efficient_attention(x[0].second, p); }, tol);
  }
  {
    ParamStore store;
    AttentionParams p = make_transpose_attention(store, "transpose", d, r);
    jitter(store, r);
    s.op("transpose_attention_layer", with_params({tokens(d)}, store),
         [=](const Inputs& x) { return transpose_attention(x[0].second, p); }, tol);
  }
  for (bool eq2 : {false, true}) {
    ParamStore store;
    SccaParams p = make_scca(store, "scca", 2 * d, d, eq2, r);
    jitter(store, r);
    s.op(eq2 ? "scca_eq2_order" : "scca_layer", with_params({tokens(2 * d), {"x2", random_tensor(r, {h * w, d})}}, store),
         [=](const Inputs& x) { return scca(x[0].second, x[1].second, p); }, tol);
  }
  for (DualStrategy strategy : {DualStrategy::Sequential, DualStrategy::SimpleAdditive,
                                DualStrategy::ComplexAdditive, DualStrategy::Concatenation}) {
    ParamStore store;
    BlockParams p = make_block(store, "block", d, 2, strategy, r);
    jitter(store, r);
    s.op("dual_block_" + to_string(strategy), with_params({tokens(d)}, store),
         [=](const Inputs& x) { return dual_block(TokenMap(x[0].second, h, w), p).tokens(); }, tol);
  }
  {
    ParamStore store;
    BlockParams p = make_block(store, "block", d, 2, DualStrategy::Sequential, r, true);
    jitter(store, r);
    s.op("dual_block_mlp_residual", with_params({tokens(d)}, store),
         [=](const Inputs& x) { return dual_block(TokenMap(x[0].second, h, w), p).tokens(); }, tol);
  }
  {
    ParamStore store;
    PatchEmbedParams p{make_linear(store, "embed.proj", 49 * 2, d, true, r),
                       make_layer_norm(store, "embed.norm", d)};
    jitter(store, r);
    s.op("patch_embed", with_params({{"image", random_tensor(r, {8, 8, 2})}}, store),
         [=](const Inputs& x) { return patch_embed(x[0].second, p).tokens(); }, tol);
  }
  {
    ParamStore store;
    Tensor reduction = store.truncated_normal("merge", {4 * d, 2 * d}, r);
    jitter(store, r);
    s.op("patch_merge", with_params({{"x", random_tensor(r, {16, d})}}, store),
         [=](const Inputs& x) { return patch_merge(TokenMap(x[0].second, 4, 4), reduction).tokens(); },
         tol);
  }
  {
    ParamStore store;
    Tensor projection = store.truncated_normal("expand", {d, 2 * d}, r);
    jitter(store, r);
    s.op("patch_expand", with_params({tokens(d)}, store),
         [=](const Inputs& x) {
           return patch_expand(TokenMap(x[0].second, h, w), 2, projection).tokens();
         },
         tol);
  }
}

void model_checks(Suite& s, std::uint64_t seed) {
  ModelConfig config;
  config.image_size = 16;
  config.embed_dims = {8, 16, 32};
  config.seed = seed;
  Model model(config);
  SegBatch batch = synth_task(seed, 16, 2, config.num_classes, 1, config.in_channels);
  Tensor image = batch.image(0);
  Inputs params = model.params().entries();
  constexpr std::size_t kSamples = 16;

  s.scalar("model_mean_logit", params, [&] { return mean(model.forward(image)); },
           kModelTolerance, kSamples);
}

}  // namespace

std::vector<GradCheckItem> run_gradcheck_suite(GradScope scope, std::uint64_t seed,
                                               bool inject_fault) {
  Suite suite(seed);
  switch (scope) {
    case GradScope::Op: op_checks(suite); break;
    case GradScope::Block: block_checks(suite); break;
    case GradScope::Model: model_checks(suite, seed); break;
  }
  if (inject_fault) {
    Tensor x = random_tensor(suite.rng(), {3, 3}, 0.5, 1.5);
    suite.op("injected_fault", {{"x", x}}, [](const Inputs& in) { return faulty_square(in[0].second); },
             kOpTolerance);
  }
  return suite.take();
}

}  // namespace daef
