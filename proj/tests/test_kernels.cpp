#include <cstring>
#include <vector>

#include "daef/kernels.hpp"
#include "daef/ops.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace daef;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1, 1);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct BackendGuard {
  Backend saved = backend();
  ~BackendGuard() { set_backend(saved); }
};

}  // namespace

TEST_CASE("parallel matrix kernels are bit-identical to serial") {
  Rng rng(4);
  // Large enough to clear the parallel work threshold.
  const std::size_t n = 96, k = 80, m = 72;
  static_assert(96 * 80 * 72 > kernels::parallel::kMinParallelWork);
  auto a = random_vec(rng, n * k), b = random_vec(rng, k * m), bt = random_vec(rng, m * k),
       at = random_vec(rng, k * n);
  for (bool acc : {false, true}) {
    auto seed = random_vec(rng, n * m);
    auto s = seed, p = seed;
    kernels::serial::matmul(a.data(), b.data(), s.data(), n, k, m, acc);
    kernels::parallel::matmul(a.data(), b.data(), p.data(), n, k, m, acc);
    CHECK(same_bits(s, p));
    s = seed, p = seed;
    kernels::serial::matmul_nt(a.data(), bt.data(), s.data(), n, k, m, acc);
    kernels::parallel::matmul_nt(a.data(), bt.data(), p.data(), n, k, m, acc);
    CHECK(same_bits(s, p));
    s = seed, p = seed;
    kernels::serial::matmul_tn(at.data(), b.data(), s.data(), n, k, m, acc);
    kernels::parallel::matmul_tn(at.data(), b.data(), p.data(), n, k, m, acc);
    CHECK(same_bits(s, p));
  }
}

TEST_CASE("parallel row kernels are bit-identical to serial") {
  Rng rng(9);
  const std::size_t outer = 64, len = 96, inner = 40;
  auto x = random_vec(rng, outer * len * inner);
  std::vector<double> ys(x.size()), yp(x.size());
  kernels::serial::softmax(x.data(), ys.data(), outer, len, inner);
  kernels::parallel::softmax(x.data(), yp.data(), outer, len, inner);
  CHECK(same_bits(ys, yp));

  auto dy = random_vec(rng, x.size());
  std::vector<double> ds(x.size(), 0.5), dp(x.size(), 0.5);
  kernels::serial::softmax_backward(ys.data(), dy.data(), ds.data(), outer, len, inner);
  kernels::parallel::softmax_backward(ys.data(), dy.data(), dp.data(), outer, len, inner);
  CHECK(same_bits(ds, dp));

  std::vector<double> ns(outer * inner), np(outer * inner);
  kernels::serial::l2_normalize(x.data(), ys.data(), ns.data(), outer, len, inner, 1e-12);
  kernels::parallel::l2_normalize(x.data(), yp.data(), np.data(), outer, len, inner, 1e-12);
  CHECK(same_bits(ys, yp));
  CHECK(same_bits(ns, np));

  const std::size_t rows = 2048, cols = 48;
  auto lx = random_vec(rng, rows * cols), g = random_vec(rng, cols), be = random_vec(rng, cols);
  std::vector<double> ls(lx.size()), lp(lx.size()), ms(rows), mp(rows), rs(rows), rp(rows);
  kernels::serial::layer_norm(lx.data(), g.data(), be.data(), ls.data(), ms.data(), rs.data(), rows,
                              cols, 1e-6);
  kernels::parallel::layer_norm(lx.data(), g.data(), be.data(), lp.data(), mp.data(), rp.data(),
                                rows, cols, 1e-6);
  CHECK(same_bits(ls, lp));
  CHECK(same_bits(rs, rp));

  const std::size_t h = 32, w = 32, c = 64;
  auto dx = random_vec(rng, h * w * c), kern = random_vec(rng, c * 9), bias = random_vec(rng, c);
  std::vector<double> cs(dx.size()), cp(dx.size());
  kernels::serial::depthwise_conv3x3(dx.data(), kern.data(), bias.data(), cs.data(), h, w, c);
  kernels::parallel::depthwise_conv3x3(dx.data(), kern.data(), bias.data(), cp.data(), h, w, c);
  CHECK(same_bits(cs, cp));
}

TEST_CASE("backend switch leaves op results and gradients unchanged") {
  BackendGuard guard;
  Rng rng(13);
  Tensor a = oracle::random_tensor(rng, {200, 64});
  Tensor b = oracle::random_tensor(rng, {64, 48});
  auto run = [&](Backend be) {
    set_backend(be);
    Tensor la = a.detach_copy(true), lb = b.detach_copy(true);
    Tape tape;
    TapeScope scope(tape);
    Tensor y = softmax(matmul(la, lb), 0);
    Tensor loss = dot(y, y);
    tape.backward(loss);
    std::vector<double> out(y.data().begin(), y.data().end());
    out.insert(out.end(), la.grad().begin(), la.grad().end());
    out.insert(out.end(), lb.grad().begin(), lb.grad().end());
    return out;
  };
  CHECK(same_bits(run(Backend::Serial), run(Backend::Parallel)));
}

TEST_CASE("depthwise conv matches a hand evaluation") {
  // 2x2 grid, one channel, kernel taps 1..9 row-major, bias 0.5.
  Tensor x = Tensor::from({4, 1}, {1, 2, 3, 4});
  Tensor k = Tensor::from({1, 9}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor b = Tensor::from({1}, {0.5});
  Tensor y = depthwise_conv3x3(x, 2, 2, k, b);
  // (0,0): centre 5*1 + right 6*2 + below 8*3 + diag 9*4
  CHECK(y.data()[0] == 5 + 12 + 24 + 36 + 0.5);
  // (0,1): left 4*1 + centre 5*2 + below-left 7*3 + below 8*4
  CHECK(y.data()[1] == 4 + 10 + 21 + 32 + 0.5);
  // (1,0): up 2*1 + up-right 3*2 + centre 5*3 + right 6*4
  CHECK(y.data()[2] == 2 + 6 + 15 + 24 + 0.5);
  // (1,1): up-left 1*1 + up 2*2 + left 4*3 + centre 5*4
  CHECK(y.data()[3] == 1 + 4 + 12 + 20 + 0.5);
  CHECK_THROWS_AS(depthwise_conv3x3(x, 3, 2, k, b), GridError);
}
