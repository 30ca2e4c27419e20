#pragma once

#include <cstddef>
#include <span>

#include "daef/tensor.hpp"

namespace daef {

inline constexpr double kProbabilityClamp = 1e-7;

// Targets and predictions are (pixels x classes) matrices; losses are computed
// per class over the flattened pixels and macro-averaged over classes.

// 1 - (2 sum(y p) + 1) / (sum(y) + sum(p) + 1). Throws std::invalid_argument
// when p leaves [0, 1].
Tensor dice_loss(const Tensor& y, const Tensor& p);

// Mean binary cross-entropy -(y log q + (1 - y) log(1 - q)), with each log
// argument floored at 1e-7.
Tensor ce_loss(const Tensor& y, const Tensor& yhat);

// 0.6 * dice + 0.4 * ce
Tensor total_loss(const Tensor& y, const Tensor& p);

struct LossParts {
  Tensor total;
  double dice = 0.0;
  double ce = 0.0;
};

LossParts segmentation_loss(const Tensor& y, const Tensor& p);

// labels -> (labels.size() x classes) indicator matrix.
Tensor one_hot(std::span<const int> labels, std::size_t classes);

}  // namespace daef
