#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "daef/rng.hpp"
#include "daef/tensor.hpp"

namespace daef {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckDenominatorFloor = 1e-8;

// |analytic - numeric| / max(|analytic|, |numeric|, floor)
double relative_error(double analytic, double numeric,
                      double floor = kGradCheckDenominatorFloor);

// Compares the tape gradient of scalar f at x with central differences
// (f(x+h) - f(x-h)) / 2h on every element. Returns the worst relative error.
// Throws NumericError when f (or anything it computes) is non-finite.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double h = kGradCheckStep);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Checks d f / d p for every tensor in `params` by perturbing the parameter
// buffers in place (restored afterwards). When `max_per_tensor` is nonzero, at
// most that many elements per tensor are sampled with `rng`; otherwise all.
GradCheckResult grad_check_params(const std::function<Tensor()>& f,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double h = kGradCheckStep, std::size_t max_per_tensor = 0,
                                  Rng* rng = nullptr);

}  // namespace daef
