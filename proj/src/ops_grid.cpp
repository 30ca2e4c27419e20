#include <string>

#include "daef/kernels.hpp"
#include "daef/ops.hpp"
#include "ops_internal.hpp"

namespace daef {

namespace {

void require_grid(const Tensor& x, std::size_t h, std::size_t w, const char* op) {
  if (x.rank() != 2) throw DimensionError(std::string(op) + ": tokens must be a matrix");
  if (x.dim(0) != h * w) {
    throw GridError(std::string(op) + ": " + std::to_string(x.dim(0)) +
                    " tokens do not fill a " + std::to_string(h) + "x" + std::to_string(w) +
                    " grid");
  }
}

}  // namespace

Tensor depthwise_conv3x3(const Tensor& x, std::size_t h, std::size_t w, const Tensor& kernel,
                         const Tensor& bias) {
  require_grid(x, h, w, "depthwise_conv3x3");
  const std::size_t c = x.dim(1);
  if (kernel.numel() != c * 9) {
    throw DimensionError("depthwise_conv3x3: kernel " + shape_str(kernel.shape()) + " for " +
                         std::to_string(c) + " channels");
  }
  if (bias.defined() && bias.numel() != c) {
    throw DimensionError("depthwise_conv3x3: bias does not match channels");
  }
  Tensor out = Tensor::zeros({h * w, c});
  const double* bptr = bias.defined() ? bias.data().data() : nullptr;
  if (backend() == Backend::Serial) {
    kernels::serial::depthwise_conv3x3(x.data().data(), kernel.data().data(), bptr,
                                       out.mutable_data().data(), h, w, c);
  } else {
    kernels::parallel::depthwise_conv3x3(x.data().data(), kernel.data().data(), bptr,
                                         out.mutable_data().data(), h, w, c);
  }
  Tensor b = bias.defined() ? bias : Tensor::scalar(0.0);
  return record_op(std::move(out), {x, kernel, b}, [x, kernel, b, h, w, c](const Tensor& res) {
    auto g = res.grad();
    auto xv = x.data();
    auto kv = kernel.data();
    std::span<double> gx, gk, gb;
    if (x.requires_grad()) gx = x.grad_slot();
    if (kernel.requires_grad()) gk = kernel.grad_slot();
    if (b.requires_grad()) gb = b.grad_slot();
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t q = 0; q < w; ++q) {
        const std::size_t o = (r * w + q) * c;
        if (!gb.empty()) {
          for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += g[o + ch];
        }
        for (int dr = -1; dr <= 1; ++dr) {
          const long rr = static_cast<long>(r) + dr;
          if (rr < 0 || rr >= static_cast<long>(h)) continue;
          for (int dq = -1; dq <= 1; ++dq) {
            const long qq = static_cast<long>(q) + dq;
            if (qq < 0 || qq >= static_cast<long>(w)) continue;
            const std::size_t in = (static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(qq)) * c;
            const std::size_t tap = static_cast<std::size_t>((dr + 1) * 3 + (dq + 1));
            for (std::size_t ch = 0; ch < c; ++ch) {
              if (!gx.empty()) gx[in + ch] += kv[ch * 9 + tap] * g[o + ch];
              if (!gk.empty()) gk[ch * 9 + tap] += xv[in + ch] * g[o + ch];
            }
          }
        }
      }
    }
  });
}

Tensor extract_windows(const Tensor& image, std::size_t k, std::size_t stride, std::size_t pad) {
  if (image.rank() != 3) throw DimensionError("extract_windows: image must be h x w x c");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  if (h + 2 * pad < k || w + 2 * pad < k || stride == 0) {
    throw DimensionError("extract_windows: window does not fit the padded image");
  }
  const std::size_t oh = (h + 2 * pad - k) / stride + 1;
  const std::size_t ow = (w + 2 * pad - k) / stride + 1;
  const std::size_t feat = k * k * c;
  std::vector<std::ptrdiff_t> index(oh * ow * feat, -1);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      std::ptrdiff_t* row = index.data() + (oy * ow + ox) * feat;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
        if (iy < 0 || iy >= static_cast<long>(h)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
          if (ix < 0 || ix >= static_cast<long>(w)) continue;
          for (std::size_t ch = 0; ch < c; ++ch) {
            row[(ky * k + kx) * c + ch] =
                static_cast<std::ptrdiff_t>((static_cast<std::size_t>(iy) * w +
                                             static_cast<std::size_t>(ix)) * c + ch);
          }
        }
      }
    }
  }
  return detail::gather(image, {oh * ow, feat}, std::move(index));
}

Tensor space_to_depth(const Tensor& x, std::size_t h, std::size_t w, std::size_t factor) {
  require_grid(x, h, w, "space_to_depth");
  if (factor == 0 || h % factor != 0 || w % factor != 0) {
    throw GridError("space_to_depth: grid " + std::to_string(h) + "x" + std::to_string(w) +
                    " not divisible by " + std::to_string(factor));
  }
  const std::size_t c = x.dim(1), oh = h / factor, ow = w / factor;
  const std::size_t feat = factor * factor * c;
  std::vector<std::ptrdiff_t> index(oh * ow * feat);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t q = 0; q < ow; ++q) {
      for (std::size_t a = 0; a < factor; ++a) {
        for (std::size_t b = 0; b < factor; ++b) {
          const std::size_t src = ((r * factor + a) * w + (q * factor + b)) * c;
          const std::size_t dst = (r * ow + q) * feat + (a * factor + b) * c;
          for (std::size_t ch = 0; ch < c; ++ch) {
            index[dst + ch] = static_cast<std::ptrdiff_t>(src + ch);
          }
        }
      }
    }
  }
  return detail::gather(x, {oh * ow, feat}, std::move(index));
}

Tensor depth_to_space(const Tensor& x, std::size_t h, std::size_t w, std::size_t factor) {
  require_grid(x, h, w, "depth_to_space");
  const std::size_t feat = x.dim(1);
  if (factor == 0 || feat % (factor * factor) != 0) {
    throw DimensionError("depth_to_space: width " + std::to_string(feat) +
                         " not divisible by factor^2");
  }
  const std::size_t c = feat / (factor * factor), oh = h * factor, ow = w * factor;
  std::vector<std::ptrdiff_t> index(oh * ow * c);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t q = 0; q < w; ++q) {
      for (std::size_t a = 0; a < factor; ++a) {
        for (std::size_t b = 0; b < factor; ++b) {
          const std::size_t dst = ((r * factor + a) * ow + (q * factor + b)) * c;
          const std::size_t src = (r * w + q) * feat + (a * factor + b) * c;
          for (std::size_t ch = 0; ch < c; ++ch) {
            index[dst + ch] = static_cast<std::ptrdiff_t>(src + ch);
          }
        }
      }
    }
  }
  return detail::gather(x, {oh * ow, c}, std::move(index));
}

}  // namespace daef
