#include "daef/losses.hpp"

#include <stdexcept>
#include <string>

#include "daef/ops.hpp"

namespace daef {

namespace {

void require_pair(const Tensor& y, const Tensor& p, const char* op) {
  if (y.shape() != p.shape()) {
    throw DimensionError(std::string(op) + ": target " + shape_str(y.shape()) +
                         " vs prediction " + shape_str(p.shape()));
  }
  if (y.rank() != 2) throw DimensionError(std::string(op) + ": expected pixels x classes");
}

}  // namespace

Tensor dice_loss(const Tensor& y, const Tensor& p) {
  require_pair(y, p, "dice_loss");
  for (double v : p.data()) {
    if (v < 0.0 || v > 1.0) {
      throw std::invalid_argument("dice_loss: probability " + std::to_string(v) + " outside [0, 1]");
    }
  }
  Tensor overlap = column_sums(mul(y, p));
  Tensor totals = add(column_sums(y), column_sums(p));
  Tensor ratio = div(add_scalar(scale(overlap, 2.0), 1.0), add_scalar(totals, 1.0));
  return add_scalar(scale(mean(ratio), -1.0), 1.0);
}

Tensor ce_loss(const Tensor& y, const Tensor& yhat) {
  require_pair(y, yhat, "ce_loss");
  // Each log argument is floored at the clamp, so a confident wrong pixel costs
  // -ln(1e-7) while a perfect one costs exactly 0.
  Tensor q = clamp(yhat, kProbabilityClamp, 1.0);
  Tensor not_q = clamp(add_scalar(scale(yhat, -1.0), 1.0), kProbabilityClamp, 1.0);
  Tensor not_y = add_scalar(scale(y, -1.0), 1.0);
  Tensor ll = add(mul(y, log(q)), mul(not_y, log(not_q)));
  return scale(mean(ll), -1.0);
}

Tensor total_loss(const Tensor& y, const Tensor& p) { return segmentation_loss(y, p).total; }

LossParts segmentation_loss(const Tensor& y, const Tensor& p) {
  Tensor d = dice_loss(y, p);
  Tensor c = ce_loss(y, p);
  LossParts parts;
  parts.dice = d.item();
  parts.ce = c.item();
  parts.total = add(scale(d, 0.6), scale(c, 0.4));
  return parts;
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  std::vector<double> values(labels.size() * classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) + " out of range");
    }
    values[i * classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return Tensor::from({labels.size(), classes}, std::move(values));
}

}  // namespace daef
