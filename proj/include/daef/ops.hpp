#pragma once

#include <cstddef>
#include <vector>

#include "daef/tensor.hpp"

// Differentiable tensor operations. Every op validates shapes, refuses to
// produce non-finite values, and records a backward rule on the active tape
// when any input requires grad.
namespace daef {

enum class Backend { Serial, Parallel };

// Kernel family used by all ops (process-wide; default Parallel).
void set_backend(Backend backend);
Backend backend();

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);     // a(n x k) b(k x m)
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a(k x n)^T b(k x m)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a(n x k) b(m x k)^T
Tensor transpose(const Tensor& a);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
// x / s for a one-element tensor s.
Tensor div_scalar(const Tensor& x, const Tensor& s);
// x(n x d) + bias(d), broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& bias);
Tensor gelu(const Tensor& x);
Tensor log(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

// ---- reductions ----
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Sum of elementwise products of two same-shape tensors.
Tensor dot(const Tensor& a, const Tensor& b);
// Sum over the rows of a matrix: (n x d) -> (d).
Tensor column_sums(const Tensor& x);

// ---- normalizations ----
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor l2_normalize(const Tensor& x, std::size_t axis, double eps = 1e-12);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-6);

// ---- structural ----
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);
// Columns [begin, begin + count) of a matrix.
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);

// ---- token-grid ops (tokens are rows of an (h*w) x c matrix, raster order) ----

// Depth-wise 3x3 convolution with zero padding 1 and stride 1.
// kernel: c x 9, bias: c (may be undefined).
Tensor depthwise_conv3x3(const Tensor& x, std::size_t h, std::size_t w, const Tensor& kernel,
                         const Tensor& bias);

// Sliding windows over an image (h x w x c): window `k`, `stride`, zero padding
// `pad`. Returns (oh*ow) x (k*k*c) with features ordered (ky, kx, channel).
Tensor extract_windows(const Tensor& image, std::size_t k, std::size_t stride, std::size_t pad);

// Gathers each f x f token neighborhood into one token: (h*w) x c ->
// (h/f * w/f) x (f*f*c), sub-tokens ordered row-major within the neighborhood.
Tensor space_to_depth(const Tensor& x, std::size_t h, std::size_t w, std::size_t factor);
// Inverse rearrangement: (h*w) x (f*f*c) -> (h*f * w*f) x c.
Tensor depth_to_space(const Tensor& x, std::size_t h, std::size_t w, std::size_t factor);

}  // namespace daef
