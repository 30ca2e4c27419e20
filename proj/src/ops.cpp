#include "daef/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <numbers>

#include "daef/kernels.hpp"
#include "ops_internal.hpp"

namespace daef {

namespace {

std::atomic<Backend> g_backend{Backend::Parallel};

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_axis(const Tensor& t, std::size_t axis, const char* op) {
  if (axis >= t.rank()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_str(t.shape()));
  }
}

struct AxisView {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

using MatmulFn = void (*)(const double*, const double*, double*, std::size_t, std::size_t,
                          std::size_t, bool);

MatmulFn mm_nn() {
  return backend() == Backend::Serial ? kernels::serial::matmul : kernels::parallel::matmul;
}
MatmulFn mm_nt() {
  return backend() == Backend::Serial ? kernels::serial::matmul_nt : kernels::parallel::matmul_nt;
}
MatmulFn mm_tn() {
  return backend() == Backend::Serial ? kernels::serial::matmul_tn : kernels::parallel::matmul_tn;
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner extents differ " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros({n, m});
  mm_nn()(a.data().data(), b.data().data(), out.mutable_data().data(), n, k, m, false);
  return record_op(std::move(out), {a, b}, [a, b, n, k, m](const Tensor& o) {
    const double* g = o.grad().data();
    if (a.requires_grad()) mm_nt()(g, b.data().data(), a.grad_slot().data(), n, m, k, true);
    if (b.requires_grad()) mm_tn()(a.data().data(), g, b.grad_slot().data(), k, n, m, true);
  });
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_tn");
  require_rank(b, 2, "matmul_tn");
  const std::size_t k = a.dim(0), n = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul_tn: row extents differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros({n, m});
  mm_tn()(a.data().data(), b.data().data(), out.mutable_data().data(), n, k, m, false);
  return record_op(std::move(out), {a, b}, [a, b, n, k, m](const Tensor& o) {
    const double* g = o.grad().data();
    // dA(k x n) = B dC^T ; dB(k x m) = A dC
    if (a.requires_grad()) mm_nt()(b.data().data(), g, a.grad_slot().data(), k, m, n, true);
    if (b.requires_grad()) mm_nn()(a.data().data(), g, b.grad_slot().data(), k, n, m, true);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(0);
  if (b.dim(1) != k) {
    throw DimensionError("matmul_nt: column extents differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros({n, m});
  mm_nt()(a.data().data(), b.data().data(), out.mutable_data().data(), n, k, m, false);
  return record_op(std::move(out), {a, b}, [a, b, n, k, m](const Tensor& o) {
    const double* g = o.grad().data();
    // dA(n x k) = dC B ; dB(m x k) = dC^T A
    if (a.requires_grad()) mm_nn()(g, b.data().data(), a.grad_slot().data(), n, m, k, true);
    if (b.requires_grad()) mm_tn()(g, a.data().data(), b.grad_slot().data(), m, n, k, true);
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t n = a.dim(0), m = a.dim(1);
  std::vector<std::ptrdiff_t> index(n * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) index[i * n + j] = static_cast<std::ptrdiff_t>(j * m + i);
  }
  return detail::gather(a, {m, n}, std::move(index));
}

namespace {

template <typename Fwd, typename Bwd>
Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Bwd bwd) {
  require_same_shape(a, b, name);
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(x[i], y[i]);
  return record_op(std::move(out), {a, b}, [a, b, bwd](const Tensor& res) {
    auto g = res.grad();
    auto x = a.data();
    auto y = b.data();
    std::span<double> ga, gb;
    if (a.requires_grad()) ga = a.grad_slot();
    if (b.requires_grad()) gb = b.grad_slot();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto [da, db] = bwd(x[i], y[i], g[i]);
      if (!ga.empty()) ga[i] += da;
      if (!gb.empty()) gb[i] += db;
    }
  });
}

template <typename Fwd, typename Bwd>
Tensor unary_elementwise(const Tensor& a, Fwd fwd, Bwd bwd) {
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(x[i]);
  return record_op(std::move(out), {a}, [a, bwd](const Tensor& res) {
    auto g = res.grad();
    auto x = a.data();
    auto y = res.data();
    auto ga = a.grad_slot();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += bwd(x[i], y[i], g[i]);
  });
}

struct Pair {
  double a, b;
};

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double g) { return Pair{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double g) { return Pair{g, -g}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double g) { return Pair{g * y, g * x}; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double x, double y, double g) { return Pair{g / y, -g * x / (y * y)}; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary_elementwise(
      x, [factor](double v) { return v * factor; },
      [factor](double, double, double g) { return g * factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary_elementwise(
      x, [value](double v) { return v + value; }, [](double, double, double g) { return g; });
}

Tensor div_scalar(const Tensor& x, const Tensor& s) {
  if (s.numel() != 1) throw DimensionError("div_scalar: divisor must have one element");
  const double sv = s.item();
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] / sv;
  return record_op(std::move(out), {x, s}, [x, s, sv](const Tensor& res) {
    auto g = res.grad();
    auto xv = x.data();
    if (x.requires_grad()) {
      auto gx = x.grad_slot();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / sv;
    }
    if (s.requires_grad()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
      s.grad_slot()[0] += -acc / (sv * sv);
    }
  });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (bias.numel() != d) {
    throw DimensionError("add_row: bias of " + shape_str(bias.shape()) + " for rows of width " +
                         std::to_string(d));
  }
  Tensor out = Tensor::zeros({n, d});
  auto o = out.mutable_data();
  auto xv = x.data();
  auto bv = bias.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) o[i * d + j] = xv[i * d + j] + bv[j];
  }
  return record_op(std::move(out), {x, bias}, [x, bias, n, d](const Tensor& res) {
    auto g = res.grad();
    if (x.requires_grad()) {
      auto gx = x.grad_slot();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (bias.requires_grad()) {
      auto gb = bias.grad_slot();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
      }
    }
  });
}

Tensor gelu(const Tensor& x) {
  return unary_elementwise(
      x, [](double v) { return v * 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2)); },
      [](double v, double, double g) {
        const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * v * v) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
        return g * (cdf + v * pdf);
      });
}

Tensor log(const Tensor& x) {
  return unary_elementwise(
      x, [](double v) { return std::log(v); }, [](double v, double, double g) { return g / v; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary_elementwise(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double, double g) { return (v >= lo && v <= hi) ? g : 0.0; });
}

Tensor sum(const Tensor& x) {
  long double acc = 0.0L;
  for (double v : x.data()) acc += v;
  return record_op(Tensor::scalar(static_cast<double>(acc)), {x}, [x](const Tensor& res) {
    const double g = res.grad()[0];
    for (double& v : x.grad_slot()) v += g;
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("dot: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  long double acc = 0.0L;
  auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < av.size(); ++i) acc += static_cast<long double>(av[i]) * bv[i];
  return record_op(Tensor::scalar(static_cast<double>(acc)), {a, b}, [a, b](const Tensor& res) {
    const double g = res.grad()[0];
    if (a.requires_grad()) {
      auto ga = a.grad_slot();
      auto bv = b.data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_slot();
      auto av = a.data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * av[i];
    }
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor column_sums(const Tensor& x) {
  require_rank(x, 2, "column_sums");
  const std::size_t n = x.dim(0), d = x.dim(1);
  Tensor out = Tensor::zeros({d});
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) o[j] += xv[i * d + j];
  }
  return record_op(std::move(out), {x}, [x, n, d](const Tensor& res) {
    auto g = res.grad();
    auto gx = x.grad_slot();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[j];
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  require_axis(x, axis, "softmax");
  const AxisView v = axis_view(x.shape(), axis);
  Tensor out = Tensor::zeros(x.shape());
  if (backend() == Backend::Serial) {
    kernels::serial::softmax(x.data().data(), out.mutable_data().data(), v.outer, v.len, v.inner);
  } else {
    kernels::parallel::softmax(x.data().data(), out.mutable_data().data(), v.outer, v.len,
                               v.inner);
  }
  return record_op(std::move(out), {x}, [x, v](const Tensor& res) {
    const double* y = res.data().data();
    const double* g = res.grad().data();
    double* gx = x.grad_slot().data();
    if (backend() == Backend::Serial) {
      kernels::serial::softmax_backward(y, g, gx, v.outer, v.len, v.inner);
    } else {
      kernels::parallel::softmax_backward(y, g, gx, v.outer, v.len, v.inner);
    }
  });
}

Tensor l2_normalize(const Tensor& x, std::size_t axis, double eps) {
  require_axis(x, axis, "l2_normalize");
  const AxisView v = axis_view(x.shape(), axis);
  Tensor out = Tensor::zeros(x.shape());
  auto norms = std::make_shared<std::vector<double>>(v.outer * v.inner);
  if (backend() == Backend::Serial) {
    kernels::serial::l2_normalize(x.data().data(), out.mutable_data().data(), norms->data(),
                                  v.outer, v.len, v.inner, eps);
  } else {
    kernels::parallel::l2_normalize(x.data().data(), out.mutable_data().data(), norms->data(),
                                    v.outer, v.len, v.inner, eps);
  }
  return record_op(std::move(out), {x}, [x, v, norms, eps](const Tensor& res) {
    auto y = res.data();
    auto g = res.grad();
    auto gx = x.grad_slot();
    for (std::size_t line = 0; line < v.outer * v.inner; ++line) {
      const std::size_t base = (line / v.inner) * v.len * v.inner + line % v.inner;
      const double norm = (*norms)[line];
      // Below eps the divisor is the constant eps, so the map is linear.
      const bool clamped = norm <= eps;
      double dot = 0.0;
      if (!clamped) {
        for (std::size_t l = 0; l < v.len; ++l) dot += y[base + l * v.inner] * g[base + l * v.inner];
      }
      for (std::size_t l = 0; l < v.len; ++l) {
        const std::size_t i = base + l * v.inner;
        gx[i] += (g[i] - (clamped ? 0.0 : y[i] * dot)) / norm;
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 2, "layer_norm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm: affine parameters do not match width " + std::to_string(d));
  }
  Tensor out = Tensor::zeros({n, d});
  auto stats = std::make_shared<std::vector<double>>(2 * n);
  double* mu = stats->data();
  double* rstd = stats->data() + n;
  if (backend() == Backend::Serial) {
    kernels::serial::layer_norm(x.data().data(), gamma.data().data(), beta.data().data(),
                                out.mutable_data().data(), mu, rstd, n, d, eps);
  } else {
    kernels::parallel::layer_norm(x.data().data(), gamma.data().data(), beta.data().data(),
                                  out.mutable_data().data(), mu, rstd, n, d, eps);
  }
  return record_op(std::move(out), {x, gamma, beta}, [x, gamma, beta, stats, n, d](const Tensor& res) {
    auto g = res.grad();
    auto xv = x.data();
    auto gm = gamma.data();
    const double* mu = stats->data();
    const double* rstd = stats->data() + n;
    std::span<double> gx, gg, gb;
    if (x.requires_grad()) gx = x.grad_slot();
    if (gamma.requires_grad()) gg = gamma.grad_slot();
    if (beta.requires_grad()) gb = beta.grad_slot();
    std::vector<double> xhat(d), dxhat(d);
    for (std::size_t i = 0; i < n; ++i) {
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t idx = i * d + j;
        xhat[j] = (xv[idx] - mu[i]) * rstd[i];
        dxhat[j] = g[idx] * gm[j];
        if (!gg.empty()) gg[j] += g[idx] * xhat[j];
        if (!gb.empty()) gb[j] += g[idx];
        mean_dxhat += dxhat[j];
        mean_dxhat_xhat += dxhat[j] * xhat[j];
      }
      if (gx.empty()) continue;
      mean_dxhat /= static_cast<double>(d);
      mean_dxhat_xhat /= static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) {
        gx[i * d + j] += rstd[i] * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> values(x.data().begin(), x.data().end());
  Tensor out = Tensor::from(std::move(shape), std::move(values));
  return record_op(std::move(out), {x}, [x](const Tensor& res) {
    auto g = res.grad();
    auto gx = x.grad_slot();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("concat_cols: row counts differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), da = a.dim(1), db = b.dim(1);
  Tensor out = Tensor::zeros({n, da + db});
  auto o = out.mutable_data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(i * da), da,
                o.begin() + static_cast<std::ptrdiff_t>(i * (da + db)));
    std::copy_n(bv.begin() + static_cast<std::ptrdiff_t>(i * db), db,
                o.begin() + static_cast<std::ptrdiff_t>(i * (da + db) + da));
  }
  return record_op(std::move(out), {a, b}, [a, b, n, da, db](const Tensor& res) {
    auto g = res.grad();
    if (a.requires_grad()) {
      auto ga = a.grad_slot();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < da; ++j) ga[i * da + j] += g[i * (da + db) + j];
      }
    }
    if (b.requires_grad()) {
      auto gb = b.grad_slot();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < db; ++j) gb[i * db + j] += g[i * (da + db) + da + j];
      }
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t d = parts.front().dim(1);
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.dim(1) != d) throw DimensionError("concat_rows: column counts differ");
    rows += p.dim(0);
  }
  Tensor out = Tensor::zeros({rows, d});
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(), o.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.numel();
  }
  return record_op(std::move(out), std::span<const Tensor>(parts), [parts](const Tensor& res) {
    auto g = res.grad();
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
      if (p.requires_grad()) {
        auto gp = p.grad_slot();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
      }
      offset += p.numel();
    }
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (count == 0 || begin + count > d) throw DimensionError("slice_cols: range out of bounds");
  std::vector<std::ptrdiff_t> index(n * count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      index[i * count + j] = static_cast<std::ptrdiff_t>(i * d + begin + j);
    }
  }
  return detail::gather(x, {n, count}, std::move(index));
}

namespace detail {

Tensor gather(const Tensor& x, Shape out_shape, std::vector<std::ptrdiff_t> index) {
  Tensor out = Tensor::zeros(std::move(out_shape));
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (index[i] >= 0) o[i] = xv[static_cast<std::size_t>(index[i])];
  }
  auto shared_index = std::make_shared<std::vector<std::ptrdiff_t>>(std::move(index));
  return record_op(std::move(out), {x}, [x, shared_index](const Tensor& res) {
    auto g = res.grad();
    auto gx = x.grad_slot();
    const auto& idx = *shared_index;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (idx[i] >= 0) gx[static_cast<std::size_t>(idx[i])] += g[i];
    }
  });
}

}  // namespace detail

}  // namespace daef
