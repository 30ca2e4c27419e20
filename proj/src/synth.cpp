#include "daef/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "daef/rng.hpp"

namespace daef {

Tensor SegBatch::image(std::size_t b) const {
  const std::size_t n = height() * width() * channels();
  auto all = images.data();
  std::vector<double> values(all.begin() + static_cast<std::ptrdiff_t>(b * n),
                             all.begin() + static_cast<std::ptrdiff_t>((b + 1) * n));
  return Tensor::from({height(), width(), channels()}, std::move(values));
}

std::span<const int> SegBatch::mask(std::size_t b) const {
  const std::size_t n = height() * width();
  return std::span<const int>(masks).subspan(b * n, n);
}

namespace {

struct Shape2D {
  bool ellipse = true;
  double cy = 0, cx = 0, ry = 1, rx = 1, angle = 0;
  int label = 1;
  double intensity = 1.0;

  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    if (ellipse) return (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
    return std::abs(u) <= rx && std::abs(v) <= ry;
  }
};

constexpr int kSupersample = 4;
constexpr double kNoiseStd = 0.1;

}  // namespace

SegBatch synth_task(std::uint64_t seed, std::size_t size, std::size_t num_shapes,
                    std::size_t num_classes, std::size_t batch, std::size_t channels) {
  if (size < 16) throw std::invalid_argument("synth_task: size must be at least 16");
  if (num_classes < 1 || batch == 0 || channels == 0) {
    throw std::invalid_argument("synth_task: classes, batch and channels must be positive");
  }
  if (num_classes == 1 && num_shapes > 0) {
    throw std::invalid_argument("synth_task: shapes need at least two classes");
  }
  Rng rng(seed);
  const std::size_t pixels = size * size;
  std::vector<double> values(batch * pixels * channels, 0.0);
  std::vector<int> masks(batch * pixels, 0);
  const double dim = static_cast<double>(size);

  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<double> canvas(pixels, 0.0);
    int* mask = masks.data() + b * pixels;
    for (std::size_t k = 0; k < num_shapes; ++k) {
      Shape2D sh;
      sh.ellipse = rng.uniform() < 0.5;
      sh.cy = rng.uniform(0.2, 0.8) * dim;
      sh.cx = rng.uniform(0.2, 0.8) * dim;
      sh.ry = rng.uniform(0.1, 0.28) * dim;
      sh.rx = rng.uniform(0.1, 0.28) * dim;
      sh.angle = rng.uniform(0.0, std::numbers::pi);
      sh.label = 1 + static_cast<int>(rng.index(num_classes - 1));
      sh.intensity = static_cast<double>(sh.label) / static_cast<double>(num_classes - 1);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          int inside = 0;
          for (int sy = 0; sy < kSupersample; ++sy) {
            for (int sx = 0; sx < kSupersample; ++sx) {
              const double py = static_cast<double>(y) + (sy + 0.5) / kSupersample;
              const double px = static_cast<double>(x) + (sx + 0.5) / kSupersample;
              inside += sh.contains(py, px) ? 1 : 0;
            }
          }
          const double cover = static_cast<double>(inside) / (kSupersample * kSupersample);
          double& v = canvas[y * size + x];
          v = v * (1.0 - cover) + sh.intensity * cover;
          if (sh.contains(static_cast<double>(y) + 0.5, static_cast<double>(x) + 0.5)) {
            mask[y * size + x] = sh.label;
          }
        }
      }
    }
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t c = 0; c < channels; ++c) {
        values[(b * pixels + p) * channels + c] = canvas[p] + kNoiseStd * rng.normal();
      }
    }
  }
  SegBatch out;
  out.images = Tensor::from({batch, size, size, channels}, std::move(values));
  out.masks = std::move(masks);
  out.num_classes = num_classes;
  return out;
}

}  // namespace daef
