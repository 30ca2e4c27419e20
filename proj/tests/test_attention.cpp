#include <algorithm>
#include <numeric>

#include "daef/attention.hpp"
#include "daef/ops.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace daef;

namespace {

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  const std::size_t c = x.dim(1);
  std::vector<double> v(x.numel());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < c; ++j) v[i * c + j] = x.data()[perm[i] * c + j];
  return Tensor::from(x.shape(), std::move(v));
}

double max_diff(const Tensor& a, const Tensor& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) w = std::max(w, std::abs(a.data()[i] - b.data()[i]));
  return w;
}

}  // namespace

TEST_CASE("attention kernels match loop oracles") {
  Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 1 + rng.index(64), dk = 1 + rng.index(32), dv = 1 + rng.index(32);
    Tensor q = oracle::random_tensor(rng, {n, dk}, -2, 2);
    Tensor k = oracle::random_tensor(rng, {n, dk}, -2, 2);
    Tensor v = oracle::random_tensor(rng, {n, dv}, -2, 2);
    const auto Q = oracle::to_mat(q), K = oracle::to_mat(k), V = oracle::to_mat(v);
    CHECK(oracle::max_abs_diff(standard_attention(q, k, v), oracle::standard_attention(Q, K, V)) <= 1e-12);
    CHECK(oracle::max_abs_diff(efficient_attention(q, k, v), oracle::efficient_attention(Q, K, V)) <= 1e-12);
    Tensor vt = oracle::random_tensor(rng, {n, dk}, -2, 2);
    const double tau = rng.uniform(0.3, 2.0);
    CHECK(oracle::max_abs_diff(transpose_attention(q, k, vt, tau),
                               oracle::transpose_attention(Q, K, oracle::to_mat(vt), tau)) <= 1e-12);
    Tensor vs = oracle::random_tensor(rng, {n, dk}, -2, 2);
    Tensor qs = oracle::random_tensor(rng, {n, dv}, -2, 2);
    CHECK(oracle::max_abs_diff(scca_attention(qs, k, vs),
                               oracle::scca_attention(oracle::to_mat(qs), K, oracle::to_mat(vs))) <= 1e-12);
  }
}

TEST_CASE("fixed-size attention fixtures") {
  Rng rng(23);
  auto q = oracle::random_tensor(rng, {4, 2}), k = oracle::random_tensor(rng, {4, 2}),
       v = oracle::random_tensor(rng, {4, 3});
  CHECK(oracle::max_abs_diff(standard_attention(q, k, v),
                             oracle::standard_attention(oracle::to_mat(q), oracle::to_mat(k), oracle::to_mat(v))) <= 1e-12);
  auto q6 = oracle::random_tensor(rng, {6, 4}), k6 = oracle::random_tensor(rng, {6, 4}),
       v6 = oracle::random_tensor(rng, {6, 4});
  CHECK(oracle::max_abs_diff(efficient_attention(q6, k6, v6),
                             oracle::efficient_attention(oracle::to_mat(q6), oracle::to_mat(k6), oracle::to_mat(v6))) <= 1e-12);
  auto q5 = oracle::random_tensor(rng, {5, 3}), k5 = oracle::random_tensor(rng, {5, 3}),
       v5 = oracle::random_tensor(rng, {5, 3});
  CHECK(oracle::max_abs_diff(transpose_attention(q5, k5, v5, 1.0),
                             oracle::transpose_attention(oracle::to_mat(q5), oracle::to_mat(k5), oracle::to_mat(v5), 1.0)) <= 1e-12);
}

TEST_CASE("single token and uniform keys") {
  Rng rng(2);
  Tensor q = oracle::random_tensor(rng, {1, 4}), k = oracle::random_tensor(rng, {1, 4}),
         v = oracle::random_tensor(rng, {1, 5});
  CHECK(max_diff(standard_attention(q, k, v), v) <= 1e-12);
  CHECK(max_diff(efficient_attention(q, k, v), v) <= 1e-12);

  Tensor qn = oracle::random_tensor(rng, {6, 3}), vn = oracle::random_tensor(rng, {6, 2});
  Tensor same = Tensor::from({6, 3}, std::vector<double>(18, 0.7));
  Tensor out = standard_attention(qn, same, vn);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0.0;
    for (std::size_t j = 0; j < 6; ++j) m += vn.at(j, c) / 6.0;
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(out.at(i, c) - m) <= 1e-12);
  }
}

TEST_CASE("implicit efficient attention map is row-stochastic") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.index(64), dk = 1 + rng.index(32);
    Tensor q = oracle::random_tensor(rng, {n, dk}, -3, 3);
    Tensor k = oracle::random_tensor(rng, {n, dk}, -3, 3);
    // Applying the kernels to V = I exposes the weight matrices themselves.
    Tensor eye = Tensor::zeros({n, n});
    oracle::assign_identity(eye);
    for (const Tensor& w : {efficient_attention(q, k, eye), standard_attention(q, k, eye)}) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(w.at(i, j) >= 0.0);
          s += w.at(i, j);
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("token permutation equivariance") {
  Rng rng(31);
  const std::size_t n = 20, d = 6;
  Tensor q = oracle::random_tensor(rng, {n, d}), k = oracle::random_tensor(rng, {n, d}),
         v = oracle::random_tensor(rng, {n, d});
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  Tensor qp = permute_rows(q, perm), kp = permute_rows(k, perm), vp = permute_rows(v, perm);
  CHECK(max_diff(permute_rows(standard_attention(q, k, v), perm), standard_attention(qp, kp, vp)) <= 1e-12);
  CHECK(max_diff(permute_rows(efficient_attention(q, k, v), perm), efficient_attention(qp, kp, vp)) <= 1e-12);
  CHECK(max_diff(permute_rows(transpose_attention(q, k, v, 0.8), perm),
                 transpose_attention(qp, kp, vp, 0.8)) <= 1e-12);
  CHECK(max_diff(permute_rows(scca_attention(q, k, v), perm), scca_attention(qp, kp, vp)) <= 1e-12);
}

TEST_CASE("efficient and transpose kernels never allocate n x n") {
  Rng rng(5);
  const std::size_t n = 8192, d = 64;
  Tensor q = oracle::random_tensor(rng, {n, d / 2}), k = oracle::random_tensor(rng, {n, d / 2}),
         v = oracle::random_tensor(rng, {n, d});
  Tensor qt = oracle::random_tensor(rng, {n, d}), kt = oracle::random_tensor(rng, {n, d});
  auto check_shapes = [&](const ShapeRecorder& rec) {
    CHECK(!rec.shapes().empty());
    for (const Shape& s : rec.shapes()) {
      CHECK(shape_numel(s) < n * n / 16);
      CHECK(std::count(s.begin(), s.end(), n) <= 1);
    }
  };
  {
    ShapeRecorder rec;
    efficient_attention(q, k, v);
    check_shapes(rec);
  }
  {
    ShapeRecorder rec;
    transpose_attention(qt, kt, v, 1.0);
    check_shapes(rec);
  }
  {
    ShapeRecorder rec;
    scca_attention(qt, kt, v);
    check_shapes(rec);
  }
  {
    // Positive control: the standard kernel does record the score matrix.
    Tensor qs = oracle::random_tensor(rng, {256, 8}), ks = oracle::random_tensor(rng, {256, 8}),
           vs = oracle::random_tensor(rng, {256, 8});
    ShapeRecorder rec;
    standard_attention(qs, ks, vs);
    CHECK(std::any_of(rec.shapes().begin(), rec.shapes().end(),
                      [](const Shape& s) { return s == Shape{256, 256}; }));
  }
}

TEST_CASE("attention argument errors") {
  Tensor a = Tensor::zeros({4, 3}), b = Tensor::zeros({5, 3}), c = Tensor::zeros({4, 2});
  CHECK_THROWS_AS(standard_attention(a, b, a), DimensionError);
  CHECK_THROWS_AS(efficient_attention(a, c, a), DimensionError);
  CHECK_THROWS_AS(transpose_attention(a, a, a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(transpose_attention(a, a, a, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(transpose_attention(a, a, c, 1.0), DimensionError);
}

TEST_CASE("scca shapes, passthrough and term-by-term oracle") {
  Rng rng(44);
  ParamStore store;
  SccaParams p = make_scca(store, "s", 64, 32, false, rng);
  Tensor x1 = oracle::random_tensor(rng, {16, 64}), x2 = oracle::random_tensor(rng, {16, 32});
  Tensor out = scca(x1, x2, p);
  CHECK(out.shape() == Shape{16, 64});
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 32; ++j) CHECK(out.at(i, 32 + j) == x2.at(i, j));
  CHECK_THROWS_AS(scca(oracle::random_tensor(rng, {15, 64}), x2, p), DimensionError);

  // Identity projections: K = V = X1, Q = X2.
  ParamStore s2;
  SccaParams id = make_scca(s2, "s", 8, 8, false, rng);
  oracle::assign_identity(id.fc.weight);
  oracle::assign(id.fc.bias, 0.0);
  oracle::assign_identity(id.w_q);
  oracle::assign_identity(id.w_k);
  oracle::assign_identity(id.w_v);
  Tensor a = oracle::random_tensor(rng, {12, 8}, -2, 2), b = oracle::random_tensor(rng, {12, 8}, -2, 2);
  Tensor fused = scca(a, b, id);
  const auto A = oracle::to_mat(a);
  const auto ref = oracle::scca_attention(oracle::to_mat(b), A, A);
  double worst = 0.0;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 8; ++j) worst = std::max(worst, std::abs(fused.at(i, j) - ref[i][j]));
  CHECK(worst <= 1e-12);

  // The alternative ordering is a genuinely different map.
  id.eq2_order = true;
  Tensor alt = scca(a, b, id);
  CHECK(max_diff(alt, fused) > 1e-6);
}

TEST_CASE("efficient attention is not standard attention") {
  // Both are row-stochastic mixes of V, but they are different maps.
  Rng rng(3);
  Tensor q = oracle::random_tensor(rng, {32, 8}, -2, 2), k = oracle::random_tensor(rng, {32, 8}, -2, 2),
         v = oracle::random_tensor(rng, {32, 8}, -2, 2);
  const double gap = max_diff(standard_attention(q, k, v), efficient_attention(q, k, v));
  MESSAGE("max |standard - efficient| on a random 32x8 fixture: " << gap);
  CHECK(gap > 1e-3);
}
