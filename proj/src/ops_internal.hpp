#pragma once

#include <cstddef>
#include <vector>

#include "daef/tensor.hpp"

namespace daef::detail {

// out[i] = x[index[i]], or 0 where index[i] < 0. Backward scatter-adds.
Tensor gather(const Tensor& x, Shape out_shape, std::vector<std::ptrdiff_t> index);

}  // namespace daef::detail
