#include "daef/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace daef {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

static double eval_scalar(const Tensor& y) {
  if (y.numel() != 1) {
    throw DimensionError("grad_check: function must return a scalar, got " + shape_str(y.shape()));
  }
  const double v = y.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
  return v;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor leaf = x.detach_copy(true);
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor y = f(leaf);
    eval_scalar(y);
    tape.backward(y);
  }
  std::vector<double> analytic(x.numel(), 0.0);
  if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());

  double worst = 0.0;
  std::vector<double> probe(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = eval_scalar(f(Tensor::from(x.shape(), probe)));
    probe[i] = orig - h;
    const double fm = eval_scalar(f(Tensor::from(x.shape(), probe)));
    probe[i] = orig;
    worst = std::max(worst, relative_error(analytic[i], (fp - fm) / (2.0 * h)));
  }
  return worst;
}

GradCheckResult grad_check_params(const std::function<Tensor()>& f,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double h, std::size_t max_per_tensor, Rng* rng) {
  for (const auto& [name, p] : params) {
    Tensor t = p;
    t.clear_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor y = f();
    eval_scalar(y);
    tape.backward(y);
  }

  GradCheckResult result;
  for (const auto& [name, p] : params) {
    Tensor t = p;
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());

    std::vector<std::size_t> picks(t.numel());
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    if (max_per_tensor != 0 && picks.size() > max_per_tensor && rng != nullptr) {
      // Partial Fisher-Yates: the first max_per_tensor entries become the sample.
      for (std::size_t i = 0; i < max_per_tensor; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng->index(picks.size() - i));
        std::swap(picks[i], picks[j]);
      }
      picks.resize(max_per_tensor);
    }

    auto buf = t.mutable_data();
    for (std::size_t i : picks) {
      const double orig = buf[i];
      buf[i] = orig + h;
      double fp = 0.0, fm = 0.0;
      try {
        fp = eval_scalar(f());
        buf[i] = orig - h;
        fm = eval_scalar(f());
      } catch (...) {
        buf[i] = orig;
        throw;
      }
      buf[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double err = relative_error(analytic[i], numeric);
      ++result.checked;
      if (result.worst_param.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = name;
        result.worst_index = i;
        result.worst_analytic = analytic[i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace daef
