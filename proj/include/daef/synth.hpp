#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "daef/tensor.hpp"

namespace daef {

struct SegBatch {
  Tensor images;           // B x H x W x C
  std::vector<int> masks;  // B * H * W labels in [0, num_classes)
  std::size_t num_classes = 0;

  std::size_t batch() const { return images.dim(0); }
  std::size_t height() const { return images.dim(1); }
  std::size_t width() const { return images.dim(2); }
  std::size_t channels() const { return images.dim(3); }

  // H x W x C copy of one image.
  Tensor image(std::size_t b) const;
  std::span<const int> mask(std::size_t b) const;
};

// Random anti-aliased ellipses and rectangles on a noisy background. Each image
// gets exactly `num_shapes` shapes with classes drawn from 1..num_classes-1;
// class c is drawn at intensity c / (num_classes - 1). Masks label pixel
// centers exactly. Deterministic per seed.
SegBatch synth_task(std::uint64_t seed, std::size_t size, std::size_t num_shapes,
                    std::size_t num_classes, std::size_t batch = 8, std::size_t channels = 1);

}  // namespace daef
