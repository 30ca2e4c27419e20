#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "daef/config.hpp"
#include "daef/trainer.hpp"

namespace daef {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailure = 1;
inline constexpr int kExitConfigError = 2;

// ---- bench-attn ----
struct BenchRow {
  std::string kernel;
  std::size_t n = 0;
  std::size_t d = 0;
  double median_seconds = 0.0;
  std::size_t peak_bytes = 0;  // tensor bytes allocated above the inputs during one call
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::pair<std::string, double>> slopes;  // log-log time slope per kernel
};

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Times each kernel at each n on random n x d inputs: one discarded warm-up
// call, then the median of `reps` timed calls.
BenchReport run_attention_bench(const BenchConfig& config, std::uint64_t seed);

// Header kernel,n,d,median_seconds,peak_bytes; then "# slope,<kernel>,<value>" lines.
void write_bench_csv(std::ostream& out, const BenchReport& report);

// ---- ablate ----
enum class AblationKind { DualStrategy, SkipCount, ImageSize };
AblationKind parse_ablation_kind(const std::string& name);

struct AblationRow {
  std::string kind;
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t param_count = 0;
  double final_loss = 0.0;
  double dsc = 0.0;
};

// Trains one model per (variant, seed) cell; cells run on up to `threads`
// worker threads. Rows come back ordered by variant, then seed.
std::vector<AblationRow> run_ablation(AblationKind kind, const TrainConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t threads = 1);

// Header kind,variant,seed,param_count,final_loss,dsc.
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

// ---- train-toy ----
struct TrainArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path train_log;
  std::filesystem::path eval_report;
  TrainResult result;
};

// Builds the model from `config`, trains it and writes checkpoint.bin,
// train_log.csv and eval.csv into `out_dir` (created if missing).
TrainArtifacts train_and_save(const TrainConfig& config, const std::filesystem::path& out_dir);

// ---- command line ----
// Seed precedence: --seed, then the config's "seed" key, then DAEFUSION_SEED, then 0.
std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed, const RunConfig& config);

// Full command-line entry point; args excludes the program name. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace daef
