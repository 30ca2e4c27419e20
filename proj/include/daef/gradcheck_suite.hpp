#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace daef {

enum class GradScope { Op, Block, Model };

// Accepts "op", "block", "model"; throws std::invalid_argument otherwise.
GradScope parse_grad_scope(const std::string& name);
std::string to_string(GradScope scope);

inline constexpr double kOpTolerance = 1e-5;
inline constexpr double kBlockTolerance = 1e-4;
inline constexpr double kModelTolerance = 1e-3;

struct GradCheckItem {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool pass() const { return max_rel_error <= tolerance; }
};

// Runs every gradient check registered for `scope`. With `inject_fault`, an
// extra item whose backward rule is deliberately wrong is appended.
std::vector<GradCheckItem> run_gradcheck_suite(GradScope scope, std::uint64_t seed,
                                               bool inject_fault = false);

}  // namespace daef
