#include "daef/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

namespace daef {

namespace {

std::atomic<std::size_t> g_live_bytes{0};
std::atomic<std::size_t> g_peak_bytes{0};
thread_local Tape* t_active_tape = nullptr;
thread_local ShapeRecorder* t_shape_recorder = nullptr;

}  // namespace

std::size_t AllocationLog::live_bytes() { return g_live_bytes.load(); }
std::size_t AllocationLog::peak_bytes() { return g_peak_bytes.load(); }
void AllocationLog::reset_peak() { g_peak_bytes.store(g_live_bytes.load()); }

void AllocationLog::on_alloc(std::size_t bytes, const Shape& shape) {
  const std::size_t now = g_live_bytes.fetch_add(bytes) + bytes;
  std::size_t peak = g_peak_bytes.load();
  while (now > peak && !g_peak_bytes.compare_exchange_weak(peak, now)) {
  }
  if (t_shape_recorder != nullptr) t_shape_recorder->shapes_.push_back(shape);
}

void AllocationLog::on_free(std::size_t bytes) { g_live_bytes.fetch_sub(bytes); }

ShapeRecorder::ShapeRecorder() : previous_(t_shape_recorder) { t_shape_recorder = this; }
ShapeRecorder::~ShapeRecorder() { t_shape_recorder = previous_; }

namespace detail {

class TrackedBuffer {
 public:
  TrackedBuffer() = default;
  TrackedBuffer(std::vector<double> values, const Shape& shape) : values_(std::move(values)) {
    AllocationLog::on_alloc(bytes(), shape);
  }
  ~TrackedBuffer() {
    if (!values_.empty()) AllocationLog::on_free(bytes());
  }
  TrackedBuffer(const TrackedBuffer&) = delete;
  TrackedBuffer& operator=(const TrackedBuffer&) = delete;

  void assign(std::vector<double> values, const Shape& shape) {
    if (!values_.empty()) AllocationLog::on_free(bytes());
    values_ = std::move(values);
    AllocationLog::on_alloc(bytes(), shape);
  }
  void release() {
    if (!values_.empty()) AllocationLog::on_free(bytes());
    values_.clear();
    values_.shrink_to_fit();
  }
  bool empty() const { return values_.empty(); }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t bytes() const { return values_.size() * sizeof(double); }
  std::vector<double> values_;
};

struct TensorImpl {
  TensorImpl(Shape s, std::vector<double> values, bool rg)
      : shape(std::move(s)), data(std::move(values), shape), requires_grad(rg) {}

  Shape shape;
  TrackedBuffer data;
  TrackedBuffer grad;
  bool requires_grad = false;
};

}  // namespace detail

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

static void validate_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  validate_shape(shape);
  const std::size_t n = shape_numel(shape);
  return Tensor(std::make_shared<detail::TensorImpl>(std::move(shape), std::vector<double>(n, 0.0),
                                                     requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  validate_shape(shape);
  const std::size_t n = shape_numel(shape);
  return Tensor(std::make_shared<detail::TensorImpl>(std::move(shape),
                                                     std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_str(shape));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in tensor construction");
  }
  return Tensor(
      std::make_shared<detail::TensorImpl>(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("use of an undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  shape();
  return impl_->data.values();
}

std::span<double> Tensor::mutable_data() {
  shape();
  return impl_->data.values();
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return data()[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  if (rank() != 2) throw DimensionError("at(i, j) requires a matrix");
  return data()[i * dim(1) + j];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  shape();
  impl_->requires_grad = flag;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return impl_->grad.values();
}

std::span<double> Tensor::grad_slot() const {
  shape();
  if (impl_->grad.empty()) impl_->grad.assign(std::vector<double>(numel(), 0.0), impl_->shape);
  return impl_->grad.values();
}

void Tensor::zero_grad() {
  if (has_grad()) std::fill(impl_->grad.values().begin(), impl_->grad.values().end(), 0.0);
}

void Tensor::clear_grad() {
  if (impl_) impl_->grad.release();
}

Tensor Tensor::detach_copy(bool requires_grad) const {
  std::vector<double> copy(data().begin(), data().end());
  return Tensor(std::make_shared<detail::TensorImpl>(shape(), std::move(copy), requires_grad));
}

void Tape::record(Tensor output, std::function<void(const Tensor&)> backward) {
  entries_.push_back(Entry{std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& root) {
  if (!root.requires_grad()) {
    throw std::logic_error("backward() from a tensor that does not require grad");
  }
  auto seed = root.grad_slot();
  std::fill(seed.begin(), seed.end(), 1.0);
  while (!entries_.empty()) {
    Entry entry = std::move(entries_.back());
    entries_.pop_back();
    if (entry.output.has_grad()) {
      entry.backward(entry.output);
      // Intermediate gradients are dead once propagated.
      entry.output.clear_grad();
    }
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(t_active_tape) { t_active_tape = &tape; }
TapeScope::~TapeScope() { t_active_tape = previous_; }

Tape* active_tape() { return t_active_tape; }

Tensor record_op(Tensor out, std::span<const Tensor> inputs,
                 std::function<void(const Tensor&)> backward) {
  for (double v : out.data()) {
    if (!std::isfinite(v)) throw NumericError("op produced a non-finite value");
  }
  Tape* tape = t_active_tape;
  if (tape == nullptr) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  out.impl_->requires_grad = true;
  tape->record(out, std::move(backward));
  return out;
}

}  // namespace daef
