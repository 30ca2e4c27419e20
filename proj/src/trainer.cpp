#include "daef/trainer.hpp"

#include <algorithm>
#include <string>

#include "daef/losses.hpp"
#include "daef/ops.hpp"

namespace daef {

void sgd_update(std::span<double> w, std::span<const double> g, std::span<double> v,
                const SgdOptions& options) {
  if (w.size() != g.size() || w.size() != v.size()) {
    throw DimensionError("sgd_update: parameter, gradient and velocity lengths differ (" +
                         std::to_string(w.size()) + ", " + std::to_string(g.size()) + ", " +
                         std::to_string(v.size()) + ")");
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = options.momentum * v[i] + (g[i] + options.weight_decay * w[i]);
    w[i] -= options.learning_rate * v[i];
  }
}

void sgd_step(ParamStore& params, OptimState& state) {
  const auto& entries = params.entries();
  if (state.velocity.empty()) {
    for (const auto& [name, t] : entries) state.velocity.emplace_back(t.numel(), 0.0);
  }
  if (state.velocity.size() != entries.size()) {
    throw DimensionError("sgd_step: optimizer state tracks " +
                         std::to_string(state.velocity.size()) + " tensors, store has " +
                         std::to_string(entries.size()));
  }
  std::vector<double> zeros;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor w = entries[i].second;
    std::span<const double> g;
    if (w.has_grad()) {
      g = w.grad();
    } else {
      zeros.assign(w.numel(), 0.0);
      g = zeros;
    }
    sgd_update(w.mutable_data(), g, state.velocity[i], state.options);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  // splitmix64 finalizer over a simple combination
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xBF58476D1CE4E5B9ULL * counter;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;
}  // namespace

SegBatch eval_batch(const TrainConfig& config) {
  return synth_task(derive_seed(config.model.seed, kEvalStream, 0), config.model.image_size,
                    config.num_shapes, config.model.num_classes, config.eval_images,
                    config.model.in_channels);
}

SegBatch train_batch(const TrainConfig& config, std::size_t step) {
  return synth_task(derive_seed(config.model.seed, kTrainStream, step), config.model.image_size,
                    config.num_shapes, config.model.num_classes, config.batch_size,
                    config.model.in_channels);
}

BatchLoss batch_loss(const Model& model, const SegBatch& batch) {
  std::vector<Tensor> probs;
  probs.reserve(batch.batch());
  for (std::size_t b = 0; b < batch.batch(); ++b) {
    probs.push_back(softmax(model.forward_tokens(batch.image(b)), 1));
  }
  Tensor p = probs.size() == 1 ? probs[0] : concat_rows(probs);
  Tensor y = one_hot(batch.masks, batch.num_classes);
  LossParts parts = segmentation_loss(y, p);
  return BatchLoss{parts.total, parts.dice, parts.ce};
}

TrainResult train_toy(Model& model, const TrainConfig& config) {
  config.model.validate();
  TrainResult result;
  OptimState state{config.sgd, {}};
  ParamStore& params = model.params();
  for (std::size_t step = 0; step < config.steps; ++step) {
    SegBatch batch = train_batch(config, step);
    params.zero_grad();
    Tape tape;
    BatchLoss loss;
    {
      TapeScope scope(tape);
      loss = batch_loss(model, batch);
    }
    tape.backward(loss.total);
    sgd_step(params, state);
    result.log.push_back(
        {step, loss.total.item(), loss.dice, loss.ce, config.sgd.learning_rate});
  }
  params.zero_grad();
  const std::size_t tail = std::min<std::size_t>(10, result.log.size());
  for (std::size_t i = result.log.size() - tail; i < result.log.size(); ++i) {
    result.final_loss += result.log[i].loss_total / static_cast<double>(tail);
  }
  result.eval = evaluate(model, eval_batch(config));
  return result;
}

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log) {
  const auto prec = out.precision(12);
  out << "step,loss_total,loss_dice,loss_ce,lr\n";
  for (const auto& r : log) {
    out << r.step << ',' << r.loss_total << ',' << r.loss_dice << ',' << r.loss_ce << ',' << r.lr
        << '\n';
  }
  out.precision(prec);
}

}  // namespace daef
