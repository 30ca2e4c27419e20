#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "daef/trainer.hpp"

namespace daef {

// Invalid configuration; what() joins every problem found, one per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct BenchConfig {
  std::vector<std::string> kernels{"standard", "efficient", "transpose"};
  std::vector<std::size_t> n_sweep{256, 512, 1024, 2048, 4096};
  std::size_t d = 64;
  std::size_t reps = 5;
};

struct RunConfig {
  TrainConfig train;
  BenchConfig bench;
  bool seed_set = false;  // "seed" appeared in the document
};

// The toy defaults: 32x32 two-class task, dims [16, 32, 64].
RunConfig default_run_config();

// Flat JSON object; absent keys keep their defaults, unknown keys and bad
// values are all reported together.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Keys accepted by parse_run_config.
const std::vector<std::string>& config_keys();

}  // namespace daef
