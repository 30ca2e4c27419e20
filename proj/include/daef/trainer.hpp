#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "daef/metrics.hpp"
#include "daef/model.hpp"
#include "daef/param_store.hpp"
#include "daef/synth.hpp"

namespace daef {

struct SgdOptions {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

struct OptimState {
  SgdOptions options;
  // One buffer per parameter, in ParamStore order; created on the first step.
  std::vector<std::vector<double>> velocity;
};

// v <- momentum*v + (g + weight_decay*w); w <- w - lr*v. Throws DimensionError
// when the spans disagree in length.
void sgd_update(std::span<double> w, std::span<const double> g, std::span<double> v,
                const SgdOptions& options);

// Applies sgd_update to every parameter using its accumulated gradient
// (missing gradients count as zero).
void sgd_step(ParamStore& params, OptimState& state);

struct TrainConfig {
  ModelConfig model;
  std::size_t steps = 500;
  std::size_t batch_size = 8;
  SgdOptions sgd;
  std::size_t num_shapes = 2;
  std::size_t eval_images = 32;
};

// Mixes a run seed with a stream tag and counter.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

// Held-out evaluation batch for a config (a seed stream disjoint from training).
SegBatch eval_batch(const TrainConfig& config);
// Training batch for one step.
SegBatch train_batch(const TrainConfig& config, std::size_t step);

struct TrainLogRow {
  std::size_t step = 0;
  double loss_total = 0.0;
  double loss_dice = 0.0;
  double loss_ce = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  MetricReport eval;
  // Mean total loss over the last min(10, steps) steps.
  double final_loss = 0.0;
};

// Softmax probabilities of every pixel of every image, stacked as rows, and the
// matching one-hot targets; returns the total loss with its parts.
struct BatchLoss {
  Tensor total;
  double dice = 0.0;
  double ce = 0.0;
};
BatchLoss batch_loss(const Model& model, const SegBatch& batch);

// Trains `model` in place on fresh synthetic batches, one per step, then evaluates
// on the held-out batch. Deterministic given the config.
TrainResult train_toy(Model& model, const TrainConfig& config);

// Header step,loss_total,loss_dice,loss_ce,lr.
void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log);

}  // namespace daef
