#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace daef {

using Shape = std::vector<std::size_t>;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Token count does not match the spatial grid, or a grid extent is unusable.
struct GridError : DimensionError {
  using DimensionError::DimensionError;
};

// A NaN or Inf reached a tensor buffer.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl;
}

// Dense row-major array of doubles. Handles are cheap to copy and share storage.
// Values are immutable once an op has produced them; the only mutable state is
// the gradient slot (and the raw buffer, which initializers and optimizers own).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  std::span<const double> grad() const;
  // Gradient slot, allocated as zeros on first use.
  std::span<double> grad_slot() const;
  void zero_grad();
  void clear_grad();

  // Deep copy of the values; the copy is a fresh leaf.
  Tensor detach_copy(bool requires_grad = false) const;

  bool shares_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;

  friend class Tape;
  friend Tensor record_op(Tensor out, std::span<const Tensor> inputs,
                          std::function<void(const Tensor&)> backward);
};

// Ordered record of differentiable operations. Single-threaded; one tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(Tensor output, std::function<void(const Tensor&)> backward);
  // Seeds d(root)/d(root) = 1 and replays the tape in reverse, accumulating
  // into every requires_grad tensor. The tape is consumed.
  void backward(const Tensor& root);
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    Tensor output;
    std::function<void(const Tensor&)> backward;
  };
  std::vector<Entry> entries_;
};

// Makes `tape` the recording target for ops run on this thread while alive.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Finalizes an op result: validates finiteness and, when a tape is active and
// any input requires grad, marks the output and records its backward rule.
Tensor record_op(Tensor out, std::span<const Tensor> inputs,
                 std::function<void(const Tensor&)> backward);
inline Tensor record_op(Tensor out, std::initializer_list<Tensor> inputs,
                        std::function<void(const Tensor&)> backward) {
  return record_op(std::move(out), std::span<const Tensor>(inputs.begin(), inputs.size()),
                   std::move(backward));
}

// Process-wide accounting of tensor buffer bytes (values and gradients).
class AllocationLog {
 public:
  static std::size_t live_bytes();
  static std::size_t peak_bytes();
  // Resets the high-water mark to the current live byte count.
  static void reset_peak();

  static void on_alloc(std::size_t bytes, const Shape& shape);
  static void on_free(std::size_t bytes);
};

// Captures the shape of every tensor allocated on this thread while alive.
class ShapeRecorder {
 public:
  ShapeRecorder();
  ~ShapeRecorder();
  ShapeRecorder(const ShapeRecorder&) = delete;
  ShapeRecorder& operator=(const ShapeRecorder&) = delete;

  const std::vector<Shape>& shapes() const { return shapes_; }

 private:
  std::vector<Shape> shapes_;
  ShapeRecorder* previous_;
  friend class AllocationLog;
};

}  // namespace daef
