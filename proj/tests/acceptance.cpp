// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion names as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "daef/attention.hpp"
#include "daef/commands.hpp"
#include "daef/config.hpp"
#include "daef/gradcheck_suite.hpp"
#include "daef/losses.hpp"
#include "daef/model.hpp"
#include "daef/ops.hpp"
#include "daef/trainer.hpp"
#include "oracles.hpp"

using namespace daef;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

Outcome oracle_equivalence() {
  double worst[4] = {0, 0, 0, 0};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const std::size_t n = 1 + rng.index(64), dk = 1 + rng.index(32), dv = 1 + rng.index(32);
    Tensor q = oracle::random_tensor(rng, {n, dk}, -2, 2);
    Tensor k = oracle::random_tensor(rng, {n, dk}, -2, 2);
    Tensor v = oracle::random_tensor(rng, {n, dv}, -2, 2);
    Tensor vt = oracle::random_tensor(rng, {n, dk}, -2, 2);
    Tensor qs = oracle::random_tensor(rng, {n, dv}, -2, 2);
    const double tau = rng.uniform(0.25, 2.0);
    const auto Q = oracle::to_mat(q), K = oracle::to_mat(k), V = oracle::to_mat(v);
    const auto VT = oracle::to_mat(vt);
    worst[0] = std::max(worst[0], oracle::max_abs_diff(standard_attention(q, k, v), oracle::standard_attention(Q, K, V)));
    worst[1] = std::max(worst[1], oracle::max_abs_diff(efficient_attention(q, k, v), oracle::efficient_attention(Q, K, V)));
    worst[2] = std::max(worst[2], oracle::max_abs_diff(transpose_attention(q, k, vt, tau),
                                                       oracle::transpose_attention(Q, K, VT, tau)));
    worst[3] = std::max(worst[3], oracle::max_abs_diff(scca_attention(qs, k, vt),
                                                       oracle::scca_attention(oracle::to_mat(qs), K, VT)));
  }
  Outcome o;
  Detail d;
  const char* names[4] = {"standard", "efficient", "transpose", "scca"};
  for (int i = 0; i < 4; ++i) {
    o.pass = o.pass && worst[i] <= 1e-12;
    d << names[i] << " " << worst[i] << (i < 3 ? ", " : "");
  }
  o.detail = "max abs err: " + d.str();
  return o;
}

Outcome row_stochasticity() {
  double worst_sum = 0.0, min_entry = 1.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.index(64), dk = 1 + rng.index(32);
    Tensor q = oracle::random_tensor(rng, {n, dk}, -3, 3);
    Tensor k = oracle::random_tensor(rng, {n, dk}, -3, 3);
    Tensor scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(dk)));
    Tensor standard = softmax(scores, 1);
    Tensor efficient = matmul_nt(softmax(q, 1), softmax(k, 0));
    for (const Tensor* w : {&standard, &efficient}) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          s += w->at(i, j);
          min_entry = std::min(min_entry, w->at(i, j));
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
  }
  Outcome o;
  o.pass = worst_sum <= 1e-9 && min_entry >= 0.0;
  o.detail = (Detail() << "max |row sum - 1| " << worst_sum << ", min entry " << min_entry).str();
  return o;
}

Outcome gradient_suite() {
  Outcome o;
  Detail d;
  for (GradScope scope : {GradScope::Op, GradScope::Block, GradScope::Model}) {
    double worst = 0.0;
    std::string worst_name;
    std::size_t failed = 0, items = 0;
    for (const auto& item : run_gradcheck_suite(scope, 0)) {
      ++items;
      if (!item.pass()) ++failed;
      if (item.max_rel_error >= worst) {
        worst = item.max_rel_error;
        worst_name = item.name;
      }
    }
    o.pass = o.pass && failed == 0;
    d << to_string(scope) << ": " << items << " items, worst " << worst << " (" << worst_name
      << ")" << (failed ? " FAILED " : "") << "; ";
  }
  o.detail = d.str();
  return o;
}

Outcome complexity_scaling() {
  BenchConfig cfg;  // n in {256..4096}, d = 64
  BenchReport report = run_attention_bench(cfg, 0);
  std::map<std::string, double> slope(report.slopes.begin(), report.slopes.end());
  Outcome o;
  o.pass = slope["standard"] >= 1.7 && slope["efficient"] <= 1.3;

  // Allocation log: no n x n buffer in the linear kernels.
  const std::size_t n = 4096, dm = 64;
  Rng rng(1);
  Tensor q = oracle::random_tensor(rng, {n, dm / 2}), k = oracle::random_tensor(rng, {n, dm / 2});
  Tensor v = oracle::random_tensor(rng, {n, dm}), qt = oracle::random_tensor(rng, {n, dm}),
         kt = oracle::random_tensor(rng, {n, dm});
  std::size_t largest = 0;
  for (int which = 0; which < 2; ++which) {
    ShapeRecorder rec;
    if (which == 0) efficient_attention(q, k, v);
    else transpose_attention(qt, kt, v, 1.0);
    for (const Shape& s : rec.shapes()) {
      largest = std::max(largest, shape_numel(s));
      if (std::count(s.begin(), s.end(), n) > 1) o.pass = false;
    }
  }
  o.pass = o.pass && largest < n * n;

  std::map<std::pair<std::string, std::size_t>, std::size_t> peak;
  for (const auto& row : report.rows) peak[{row.kernel, row.n}] = row.peak_bytes;
  const double growth = static_cast<double>(peak[{"efficient", 4096}]) /
                        static_cast<double>(std::max<std::size_t>(1, peak[{"efficient", 512}]));
  o.pass = o.pass && growth <= 10.0;
  o.detail = (Detail() << "slope standard " << slope["standard"] << ", efficient "
                       << slope["efficient"] << ", transpose " << slope["transpose"]
                       << "; largest linear-kernel buffer " << largest << " elems; efficient peak bytes x"
                       << growth << " from n=512 to 4096")
                 .str();
  return o;
}

Outcome parameter_ordering() {
  Outcome o;
  Detail d;
  for (std::size_t dim : {16u, 32u, 64u}) {
    std::size_t count[4];
    for (int s = 0; s < 4; ++s) {
      ModelConfig c;
      c.embed_dims = {dim, 2 * dim, 4 * dim};
      c.strategy = static_cast<DualStrategy>(s);
      count[s] = param_count(c);
      o.pass = o.pass && count[s] == oracle::model(1, 2, dim, 2 * dim, 4 * dim, 2, 4, s, 2);
    }
    // Sequential, SimpleAdditive, ComplexAdditive, Concatenation
    o.pass = o.pass && count[3] > count[2] && count[2] > count[0] && count[0] >= count[1];
    d << "d=" << dim << ": cat " << count[3] << " > cplx " << count[2] << " > seq " << count[0]
      << " >= add " << count[1] << "; ";
  }
  ModelConfig toy = default_run_config().train.model;
  const std::size_t got = param_count(toy);
  const std::size_t want = oracle::model(1, 2, 16, 32, 64, 2, 4, 0, 2);
  o.pass = o.pass && got == want;
  d << "toy count " << got << " vs closed form " << want;
  o.detail = d.str();
  return o;
}

Outcome shape_contracts() {
  Outcome o;
  Detail d;
  for (std::size_t size : {16u, 32u, 64u}) {
    ModelConfig c = default_run_config().train.model;
    c.image_size = size;
    c.num_classes = 3;
    Model m(c);
    Rng rng(size);
    Tensor logits = m.forward(oracle::random_tensor(rng, {size, size, 1}));
    const bool ok = logits.shape() == Shape{size, size, 3};
    o.pass = o.pass && ok;
    d << size << "->" << shape_str(logits.shape()) << " ";
  }
  Rng rng(7);
  for (auto [h, dim] : {std::pair<std::size_t, std::size_t>{8, 16}, {4, 32}, {2, 8}}) {
    TokenMap x(oracle::random_tensor(rng, {h * h, dim}), h, h);
    TokenMap m = patch_merge(x, oracle::random_tensor(rng, {4 * dim, 2 * dim}));
    TokenMap back = patch_expand(m, 2, oracle::random_tensor(rng, {2 * dim, 4 * dim}));
    o.pass = o.pass && m.h() == h / 2 && m.d() == 2 * dim && back.h() == h && back.w() == h &&
             back.d() == dim && back.n() == x.n();
  }
  d << "; merge/expand round trips ok=" << o.pass;
  for (auto [dd, ds] : {std::pair<std::size_t, std::size_t>{64, 32}, {16, 16}, {32, 8}}) {
    ParamStore store;
    SccaParams p = make_scca(store, "s", dd, ds, false, rng);
    Tensor out = scca(oracle::random_tensor(rng, {16, dd}), oracle::random_tensor(rng, {16, ds}), p);
    o.pass = o.pass && out.shape() == Shape{16, 2 * ds};
    d << "; scca skip " << ds << " -> " << out.dim(1);
  }
  o.detail = d.str();
  return o;
}

Outcome loss_identities() {
  auto col = [](std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor::from({n, 1}, std::move(v));
  };
  std::vector<int> labels{0, 1, 2, 1, 0, 2, 2};
  Tensor y = one_hot(labels, 3);
  const double perfect = total_loss(y, y).item();
  const double d1 = dice_loss(col({1, 1, 1, 1}), col({1, 1, 1, 1})).item();
  const double d2 = dice_loss(col({0, 0, 0}), col({0, 0, 0})).item();
  const double d3 = dice_loss(col({1}), col({0})).item();
  const double c1 = ce_loss(col({1}), col({1})).item();
  const double c2 = ce_loss(col({1}), col({0.5})).item();
  const double c3 = ce_loss(col({1}), col({0})).item();
  const double errs[7] = {std::abs(perfect), std::abs(d1), std::abs(d2), std::abs(d3 - 0.5),
                          std::abs(c1), std::abs(c2 - std::log(2.0)),
                          std::abs(c3 + std::log(1e-7))};
  Outcome o;
  o.pass = std::all_of(std::begin(errs), std::end(errs), [](double e) { return e <= 1e-9; });
  o.detail = (Detail() << "perfect total " << perfect << "; dice " << d1 << ", " << d2 << ", "
                       << d3 << "; ce " << c1 + 0.0 << ", " << c2 << ", " << c3)
                 .str();
  return o;
}

Outcome learnability() {
  std::size_t hits = 0;
  Detail d;
  d << "DSC per seed:";
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig cfg = default_run_config().train;
    cfg.model.seed = seed;
    Model model(cfg.model);
    TrainResult r = train_toy(model, cfg);
    if (r.eval.dsc >= 0.90) ++hits;
    d << " " << r.eval.dsc;
    std::fprintf(stderr, "  learnability seed %llu: dsc %.4f\n", static_cast<unsigned long long>(seed), r.eval.dsc);
  }
  Outcome o;
  o.pass = hits >= 8;
  o.detail = (Detail() << hits << "/10 seeds >= 0.90;" << d.str()).str();
  return o;
}

// Runs the ablate command and returns dsc[variant][seed].
std::map<std::string, std::vector<double>> ablate(const std::string& kind) {
  const auto dir = std::filesystem::temp_directory_path() / "daef_acceptance";
  std::filesystem::create_directories(dir);
  const auto csv = dir / (kind + ".csv");
  std::ostringstream out, err;
  const int code = run_cli({"ablate", "--kind", kind, "--seeds", "5", "--out", csv.string()}, out, err);
  if (code != kExitOk) throw std::runtime_error("ablate " + kind + " failed: " + err.str());
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::vector<double>> dsc;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    dsc[f[1]].push_back(std::stod(f[5]));
    std::fprintf(stderr, "  ablate %s: %s\n", kind.c_str(), line.c_str());
  }
  return dsc;
}

// Number of seeds where a beats b (strictly, or weakly).
std::size_t wins(const std::vector<double>& a, const std::vector<double>& b, bool strict) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < a.size(); ++i) w += strict ? a[i] > b[i] : a[i] >= b[i];
  return w;
}

Outcome ablation_parity() {
  auto skip = ablate("skip_count");
  auto size = ablate("image_size");
  const std::size_t s21 = wins(skip["2"], skip["1"], true), s10 = wins(skip["1"], skip["0"], true);
  const std::size_t z32 = wins(size["32"], size["16"], false), z48 = wins(size["48"], size["32"], false);
  Outcome o;
  o.pass = s21 >= 3 && s10 >= 3 && z32 >= 3 && z48 >= 3;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  o.detail = (Detail() << "seeds won: skip 2>1 " << s21 << "/5, 1>0 " << s10 << "/5; size 32>=16 "
                       << z32 << "/5, 48>=32 " << z48 << "/5; mean dsc skip0/1/2 " << mean(skip["0"])
                       << "/" << mean(skip["1"]) << "/" << mean(skip["2"]) << ", size16/32/48 "
                       << mean(size["16"]) << "/" << mean(size["32"]) << "/" << mean(size["48"]))
                 .str();
  return o;
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"oracle_equivalence", 10, oracle_equivalence},
      {"row_stochasticity", 0, row_stochasticity},
      {"gradient_suite", 300, gradient_suite},
      {"complexity_scaling", 120, complexity_scaling},
      {"parameter_count_ordering", 0, parameter_ordering},
      {"shape_contracts", 0, shape_contracts},
      {"loss_identities", 0, loss_identities},
      {"learnability", 900, learnability},
      {"ablation_parity", 0, ablation_parity},
  };
  std::vector<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += " [over time budget]";
    }
    if (!o.pass) ++failures;
    std::printf("%s %-26s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
