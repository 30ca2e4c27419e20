#include "daef/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "daef/attention.hpp"
#include "daef/checkpoint.hpp"
#include "daef/gradcheck_suite.hpp"
#include "daef/model.hpp"
#include "daef/rng.hpp"

namespace daef {

// ---- bench-attn ----

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope: need at least two matching points");
  }
  double mx = 0, my = 0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / k;
    my += std::log(y[i]) / k;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

Tensor bench_input(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<double> v(n * d);
  for (auto& e : v) e = rng.normal();
  return Tensor::from({n, d}, std::move(v));
}

Tensor run_kernel(const std::string& kernel, const Tensor& q, const Tensor& k, const Tensor& v) {
  if (kernel == "standard") return standard_attention(q, k, v);
  if (kernel == "efficient") return efficient_attention(q, k, v);
  if (kernel == "transpose") return transpose_attention(q, k, v, 1.0);
  throw std::invalid_argument("unknown kernel '" + kernel + "'");
}

}  // namespace

BenchReport run_attention_bench(const BenchConfig& config, std::uint64_t seed) {
  if (config.reps < 3) throw std::invalid_argument("bench: reps must be at least 3");
  using clock = std::chrono::steady_clock;
  BenchReport report;
  Rng rng(seed);
  for (const auto& kernel : config.kernels) {
    std::vector<double> ns, times;
    for (std::size_t n : config.n_sweep) {
      Tensor q = bench_input(rng, n, config.d);
      Tensor k = bench_input(rng, n, config.d);
      Tensor v = bench_input(rng, n, config.d);

      const std::size_t base = AllocationLog::live_bytes();
      AllocationLog::reset_peak();
      run_kernel(kernel, q, k, v);  // warm-up, also the allocation measurement
      const std::size_t peak = AllocationLog::peak_bytes() - base;

      std::vector<double> samples;
      for (std::size_t r = 0; r < config.reps; ++r) {
        const auto t0 = clock::now();
        Tensor out = run_kernel(kernel, q, k, v);
        samples.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      }
      std::sort(samples.begin(), samples.end());
      const std::size_t m = samples.size();
      const double median =
          m % 2 ? samples[m / 2] : 0.5 * (samples[m / 2 - 1] + samples[m / 2]);
      report.rows.push_back({kernel, n, config.d, median, peak});
      ns.push_back(static_cast<double>(n));
      times.push_back(std::max(median, 1e-9));
    }
    if (ns.size() >= 2) report.slopes.emplace_back(kernel, loglog_slope(ns, times));
  }
  return report;
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "kernel,n,d,median_seconds,peak_bytes\n";
  const auto prec = out.precision(9);
  for (const auto& r : report.rows) {
    out << r.kernel << ',' << r.n << ',' << r.d << ',' << r.median_seconds << ',' << r.peak_bytes
        << '\n';
  }
  for (const auto& [kernel, slope] : report.slopes) out << "# slope," << kernel << ',' << slope << '\n';
  out.precision(prec);
}

// ---- ablate ----

AblationKind parse_ablation_kind(const std::string& name) {
  if (name == "dual_strategy") return AblationKind::DualStrategy;
  if (name == "skip_count") return AblationKind::SkipCount;
  if (name == "image_size") return AblationKind::ImageSize;
  throw std::invalid_argument("unknown ablation kind '" + name +
                              "' (dual_strategy, skip_count, image_size)");
}

namespace {

struct Variant {
  std::string name;
  TrainConfig config;
};

std::vector<Variant> ablation_variants(AblationKind kind, const TrainConfig& base) {
  std::vector<Variant> out;
  switch (kind) {
    case AblationKind::DualStrategy:
      for (auto s : {DualStrategy::Sequential, DualStrategy::SimpleAdditive,
                     DualStrategy::ComplexAdditive, DualStrategy::Concatenation}) {
        Variant v{to_string(s), base};
        v.config.model.strategy = s;
        out.push_back(v);
      }
      break;
    case AblationKind::SkipCount:
      for (std::size_t k : {0, 1, 2}) {
        Variant v{std::to_string(k), base};
        v.config.model.skip_connections = k;
        out.push_back(v);
      }
      break;
    case AblationKind::ImageSize:
      for (std::size_t size : {16, 32, 48}) {
        Variant v{std::to_string(size), base};
        v.config.model.image_size = size;
        out.push_back(v);
      }
      break;
  }
  return out;
}

std::string kind_name(AblationKind kind) {
  switch (kind) {
    case AblationKind::DualStrategy: return "dual_strategy";
    case AblationKind::SkipCount: return "skip_count";
    case AblationKind::ImageSize: return "image_size";
  }
  return "?";
}

}  // namespace

std::vector<AblationRow> run_ablation(AblationKind kind, const TrainConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::size_t threads) {
  const auto variants = ablation_variants(kind, base);
  std::vector<AblationRow> rows(variants.size() * seeds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Variant& v = variants[i / seeds.size()];
    rows[i].kind = kind_name(kind);
    rows[i].variant = v.name;
    rows[i].seed = seeds[i % seeds.size()];
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        TrainConfig cfg = variants[i / seeds.size()].config;
        cfg.model.seed = rows[i].seed;
        Model model(cfg.model);
        TrainResult result = train_toy(model, cfg);
        rows[i].param_count = model.params().scalar_count();
        rows[i].final_loss = result.final_loss;
        rows[i].dsc = result.eval.dsc;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, rows.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "kind,variant,seed,param_count,final_loss,dsc\n";
  const auto prec = out.precision(10);
  for (const auto& r : rows) {
    out << r.kind << ',' << r.variant << ',' << r.seed << ',' << r.param_count << ','
        << r.final_loss << ',' << r.dsc << '\n';
  }
  out.precision(prec);
}

// ---- train-toy ----

TrainArtifacts train_and_save(const TrainConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  TrainArtifacts art;
  art.checkpoint = out_dir / "checkpoint.bin";
  art.train_log = out_dir / "train_log.csv";
  art.eval_report = out_dir / "eval.csv";

  Model model(config.model);
  art.result = train_toy(model, config);
  write_checkpoint(art.checkpoint, model.params());
  std::ofstream log(art.train_log);
  write_train_log(log, art.result.log);
  std::ofstream eval(art.eval_report);
  write_metric_csv(eval, art.result.eval);
  if (!log || !eval) throw std::runtime_error("cannot write reports into " + out_dir.string());
  return art;
}

// ---- command line ----

std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed, const RunConfig& config) {
  if (cli_seed) return *cli_seed;
  if (config.seed_set) return config.train.model.seed;
  if (const char* env = std::getenv("DAEFUSION_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError({std::string("DAEFUSION_SEED is not an integer: ") + env});
    return v;
  }
  return 0;
}

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

RunConfig load_config(const CommonOptions& opts) {
  RunConfig config = opts.config_path.empty() ? default_run_config()
                                              : load_run_config(opts.config_path);
  config.train.model.seed = resolve_seed(opts.seed, config);
  return config;
}

// Opens --out as a file, or returns `fallback` when --out is empty.
class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError({"cannot write output file " + path});
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

int cmd_bench(const CommonOptions& opts, std::ostream& out) {
  RunConfig config = load_config(opts);
  OutputSink sink(opts.out, out);
  BenchReport report = run_attention_bench(config.bench, config.train.model.seed);
  write_bench_csv(sink.get(), report);
  return kExitOk;
}

int cmd_gradcheck(const CommonOptions& opts, const std::string& scope, bool inject_fault,
                  std::ostream& out) {
  RunConfig config = load_config(opts);
  std::vector<GradScope> scopes;
  if (scope == "all") {
    scopes = {GradScope::Op, GradScope::Block, GradScope::Model};
  } else {
    try {
      scopes = {parse_grad_scope(scope)};
    } catch (const std::invalid_argument& e) {
      throw ConfigError({e.what()});
    }
  }
  bool ok = true;
  out << std::left << std::setw(7) << "scope" << std::setw(30) << "item" << std::setw(14)
      << "max_rel_err" << std::setw(10) << "tol" << std::setw(8) << "status" << "worst element\n";
  for (std::size_t i = 0; i < scopes.size(); ++i) {
    const bool fault = inject_fault && i + 1 == scopes.size();
    for (const auto& item : run_gradcheck_suite(scopes[i], config.train.model.seed, fault)) {
      ok = ok && item.pass();
      out << std::left << std::setw(7) << to_string(scopes[i]) << std::setw(30) << item.name
          << std::setw(14) << std::setprecision(3) << std::scientific << item.max_rel_error
          << std::setw(10) << std::setprecision(0) << item.tolerance << std::defaultfloat
          << std::setw(8) << (item.pass() ? "PASS" : "FAIL") << item.worst_param << '\n';
    }
  }
  out << (ok ? "all gradient checks passed\n" : "gradient check FAILED\n");
  return ok ? kExitOk : kExitVerificationFailure;
}

int cmd_train(const CommonOptions& opts, std::ostream& out) {
  RunConfig config = load_config(opts);
  const std::filesystem::path dir = opts.out.empty() ? "daefusion_run" : opts.out;
  TrainArtifacts art = train_and_save(config.train, dir);
  const auto& r = art.result;
  out << "steps " << r.log.size() << ", initial loss "
      << (r.log.empty() ? 0.0 : r.log.front().loss_total) << ", final loss " << r.final_loss
      << '\n';
  write_metric_csv(out, r.eval);
  out << "wrote " << art.checkpoint.string() << ", " << art.train_log.string() << ", "
      << art.eval_report.string() << '\n';
  return kExitOk;
}

int cmd_ablate(const CommonOptions& opts, const std::string& kind, std::size_t seed_count,
               std::ostream& out) {
  RunConfig config = load_config(opts);
  AblationKind k;
  try {
    k = parse_ablation_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError({e.what()});
  }
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < seed_count; ++i) seeds.push_back(config.train.model.seed + i);
  OutputSink sink(opts.out, out);
  write_ablation_csv(sink.get(), run_ablation(k, config.train, seeds, opts.threads));
  return kExitOk;
}

int cmd_param_count(const CommonOptions& opts, std::ostream& out) {
  RunConfig config = load_config(opts);
  out << param_count(config.train.model) << '\n';
  for (const auto& [module, count] : param_breakdown(config.train.model)) {
    out << "  " << std::left << std::setw(28) << module << count << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DAE-Former numerics: attention benchmarks, gradient checks, toy training",
               "daefusion"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::uint64_t seed_value = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON config file");
    sub->add_option("--out", opts.out, "output path");
    sub->add_option("--seed", seed_value, "random seed (overrides config and DAEFUSION_SEED)");
    sub->add_option("--threads", opts.threads, "worker threads for independent ablation cells")
        ->check(CLI::PositiveNumber);
  };

  auto* bench = app.add_subcommand("bench-attn", "time attention kernels over a token sweep");
  common(bench);

  auto* grad = app.add_subcommand("gradcheck", "compare backward rules with central differences");
  common(grad);
  std::string scope = "all";
  bool inject_fault = false;
  grad->add_option("--scope", scope, "op, block, model or all");
  grad->add_flag("--inject-fault", inject_fault)->group("");

  auto* train = app.add_subcommand("train-toy", "train on the synthetic task and write artifacts");
  common(train);

  auto* ablate = app.add_subcommand("ablate", "train one model per ablation variant");
  common(ablate);
  std::string kind;
  std::size_t seed_count = 1;
  ablate->add_option("--kind", kind, "dual_strategy, skip_count or image_size")->required();
  ablate->add_option("--seeds", seed_count, "consecutive seeds per variant")
      ->check(CLI::PositiveNumber);

  auto* count = app.add_subcommand("param-count", "print the learnable scalar count");
  common(count);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) opts.seed = seed_value;
  }

  try {
    if (bench->parsed()) return cmd_bench(opts, out);
    if (grad->parsed()) return cmd_gradcheck(opts, scope, inject_fault, out);
    if (train->parsed()) return cmd_train(opts, out);
    if (ablate->parsed()) return cmd_ablate(opts, kind, seed_count, out);
    if (count->parsed()) return cmd_param_count(opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitVerificationFailure;
  }
  return kExitConfigError;
}

}  // namespace daef
