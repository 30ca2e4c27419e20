#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

namespace daef {

class Model;
struct SegBatch;

struct ClassMetrics {
  int label = 0;
  double dsc = 1.0;
  double sensitivity = 1.0;
  double specificity = 1.0;
  double accuracy = 1.0;
  double hausdorff = 0.0;
  // Images in which the class appears in both prediction and truth.
  std::size_t hausdorff_pairs = 0;
};

struct MetricReport {
  double dsc = 1.0;
  double sensitivity = 1.0;
  double specificity = 1.0;
  double accuracy = 1.0;
  double hausdorff = 0.0;
  // Classes present in prediction or truth somewhere in the batch.
  std::vector<ClassMetrics> per_class;
};

// Confusion counts are pooled over the batch per class; a ratio with a zero
// denominator counts as 1. Classes absent from both prediction and truth are
// dropped. Hausdorff distance (pixels) compares the boundary pixel sets of the
// prediction and truth, one image at a time, for every (image, class) pair
// present in both; per-class values average over images, the macro value
// averages over classes with at least one such pair.
MetricReport evaluate_masks(std::span<const int> prediction, std::span<const int> truth,
                            std::size_t batch, std::size_t height, std::size_t width,
                            std::size_t num_classes);

// Symmetric Hausdorff distance between the boundaries of two binary masks
// (h x w, nonzero = member). Both masks must be nonempty.
double hausdorff_distance(std::span<const int> a, std::span<const int> b, std::size_t height,
                          std::size_t width);

// Per-pixel argmax of the model logits for every image in the batch.
std::vector<int> predict_masks(const Model& model, const SegBatch& batch);

MetricReport evaluate(const Model& model, const SegBatch& batch);

// Header class,dsc,se,sp,acc,hd; one row per class then a "macro" row.
void write_metric_csv(std::ostream& out, const MetricReport& report);

}  // namespace daef
