#pragma once

#include <filesystem>
#include <iosfwd>

#include "daef/tensor.hpp"

namespace daef {

// Tensor fixture text format (UTF-8):
//   line 1: space-separated shape extents
//   line 2: space-separated values, row-major, printed with 17 significant digits
void write_fixture(std::ostream& os, const Tensor& t);
void write_fixture(const std::filesystem::path& path, const Tensor& t);
Tensor read_fixture(std::istream& is);
Tensor read_fixture(const std::filesystem::path& path);

}  // namespace daef
