// Serial reference vs OpenMP kernels: median time per call and a bitwise match check.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "daef/kernels.hpp"

namespace k = daef::kernels;

namespace {

double median_seconds(const std::function<void()>& fn, int reps) {
  fn();
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& e : v) e = dist(gen);
  return v;
}

void row(const char* name, std::size_t size, const std::vector<double>& ref,
         const std::vector<double>& par, double ts, double tp) {
  const bool same = std::memcmp(ref.data(), par.data(), ref.size() * sizeof(double)) == 0;
  std::printf("%-18s %6zu %12.6f %12.6f %8.2fx  %s\n", name, size, ts, tp, ts / tp,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::max(1, std::atoi(argv[1])) : 5;
  std::mt19937_64 gen(7);
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-18s %6s %12s %12s %9s  %s\n", "kernel", "size", "serial_s", "parallel_s",
              "speedup", "result");

  for (std::size_t n : {128, 256, 512}) {
    auto a = random_vec(n * n, gen), b = random_vec(n * n, gen);
    std::vector<double> cs(n * n), cp(n * n);
    const double ts = median_seconds([&] { k::serial::matmul(a.data(), b.data(), cs.data(), n, n, n); }, reps);
    const double tp = median_seconds([&] { k::parallel::matmul(a.data(), b.data(), cp.data(), n, n, n); }, reps);
    row("matmul", n, cs, cp, ts, tp);
    const double ts2 = median_seconds([&] { k::serial::matmul_tn(a.data(), b.data(), cs.data(), n, n, n); }, reps);
    const double tp2 = median_seconds([&] { k::parallel::matmul_tn(a.data(), b.data(), cp.data(), n, n, n); }, reps);
    row("matmul_tn", n, cs, cp, ts2, tp2);
  }

  for (std::size_t n : {1024, 4096}) {
    const std::size_t d = 64;
    auto x = random_vec(n * d, gen);
    std::vector<double> ys(n * d), yp(n * d), norms(d);
    double ts = median_seconds([&] { k::serial::softmax(x.data(), ys.data(), 1, n, d); }, reps);
    double tp = median_seconds([&] { k::parallel::softmax(x.data(), yp.data(), 1, n, d); }, reps);
    row("softmax_axis0", n, ys, yp, ts, tp);

    auto gamma = random_vec(d, gen), beta = random_vec(d, gen);
    std::vector<double> mean(n), rstd(n);
    ts = median_seconds([&] { k::serial::layer_norm(x.data(), gamma.data(), beta.data(), ys.data(), mean.data(), rstd.data(), n, d, 1e-6); }, reps);
    tp = median_seconds([&] { k::parallel::layer_norm(x.data(), gamma.data(), beta.data(), yp.data(), mean.data(), rstd.data(), n, d, 1e-6); }, reps);
    row("layer_norm", n, ys, yp, ts, tp);

    ts = median_seconds([&] { k::serial::l2_normalize(x.data(), ys.data(), norms.data(), 1, n, d, 1e-12); }, reps);
    tp = median_seconds([&] { k::parallel::l2_normalize(x.data(), yp.data(), norms.data(), 1, n, d, 1e-12); }, reps);
    row("l2_normalize", n, ys, yp, ts, tp);

    const std::size_t side = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    auto kernel = random_vec(d * 9, gen), bias = random_vec(d, gen);
    ts = median_seconds([&] { k::serial::depthwise_conv3x3(x.data(), kernel.data(), bias.data(), ys.data(), side, side, d); }, reps);
    tp = median_seconds([&] { k::parallel::depthwise_conv3x3(x.data(), kernel.data(), bias.data(), yp.data(), side, side, d); }, reps);
    row("depthwise_conv3x3", n, ys, yp, ts, tp);
  }
  return 0;
}
