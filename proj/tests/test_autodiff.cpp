// SPDX-License-Identifier: Apache-2.0
//
// Per-op reverse-mode checks against central finite differences, plus
// direct-formula oracles for the structured ops.

#include <cmath>

#include "doctest.h"
#include "r2s2/autodiff.hpp"
#include "r2s2/common.hpp"

using namespace r2s2;

namespace {

Tensor rnd(const std::vector<int64_t>& shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return Tensor::random_uniform(shape, lo, hi, rng);
}

// Projects any output to a scalar through a fixed random weighting so every
// component contributes to the checked gradient.
ad::Var scalarize(ad::Graph& g, ad::Var v, uint64_t seed = 5150) {
  Tensor proj = rnd(g.value(v).shape, seed, 0.1, 1.0);
  return ad::sum_all(ad::mul(v, g.constant(std::move(proj))));
}

double check_op(const ad::BuildFn& fn, const std::vector<std::pair<std::string, Tensor>>& inputs,
                double tol) {
  auto res = ad::grad_check(fn, inputs, 1e-4);
  for (const auto& [name, err] : res.per_block) {
    CAPTURE(name);
    CHECK(err < tol);
  }
  return res.max_rel_err;
}

}  // namespace

TEST_CASE("engine: scalar product gradient and usage errors") {
  Tensor x({1}), w({1});
  x[0] = 3.0;
  w[0] = -1.25;
  ad::Graph g;
  ad::Var xv = g.leaf(x), wv = g.leaf(w);
  ad::Var y = ad::mul(xv, wv);
  CHECK_THROWS_AS(g.grad(wv), UsageError);  // before backward
  g.backward(y);
  CHECK(g.grad(wv)[0] == 3.0);
  CHECK(g.grad(xv)[0] == -1.25);
  CHECK_THROWS_AS(g.backward(y), UsageError);  // tape is single-use

  ad::Graph g2;
  ad::Var a = g2.leaf(x);
  ad::Var big = ad::concat_c(a, a);
  CHECK_THROWS_AS(g2.backward(big), UsageError);  // non-scalar loss

  ad::Graph g3;
  ad::Var invalid;
  CHECK_THROWS_AS(g3.backward(invalid), UsageError);  // backward without forward
}

TEST_CASE("engine: sum-loss gradient of identity is ones") {
  Tensor x = rnd({3, 4}, 1);
  ad::Graph g;
  ad::Var xv = g.leaf(x);
  g.backward(ad::sum_all(xv));
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(g.grad(xv)[i] == 1.0);
}

TEST_CASE("engine: repeated build+backward is bit-reproducible") {
  auto run = [] {
    Tensor x = rnd({4, 6, 6}, 9);
    Tensor w = rnd({3, 4, 3, 3}, 10);
    Tensor b = rnd({3}, 11);
    ad::Graph g;
    ad::Var out = ad::conv3x3(g.leaf(x), g.leaf(w), g.leaf(b));
    ad::Var loss = scalarize(g, ad::leaky_relu(out, 0.01));
    g.backward(loss);
    ad::Var wv{&g, 1};
    return g.grad(wv).v;
  };
  CHECK(run() == run());
}

TEST_CASE("gradcheck: elementwise and reduction ops") {
  std::vector<int64_t> s{3, 5};
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::add(in[0], in[1]));
  }, {{"a", rnd(s, 1)}, {"b", rnd(s, 2)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::sub(in[0], in[1]));
  }, {{"a", rnd(s, 3)}, {"b", rnd(s, 4)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::mul(in[0], in[1]));
  }, {{"a", rnd(s, 5)}, {"b", rnd(s, 6)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::scale(in[0], -2.5));
  }, {{"a", rnd(s, 7)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::leaky_relu(in[0], 0.01));
  }, {{"a", rnd(s, 8)}}, 1e-5);
  // |x| and the smooth-l1 knee are non-smooth; keep samples clear of them.
  Tensor away = rnd(s, 9, 0.2, 1.0);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::abs(in[0]));
  }, {{"a", away}}, 1e-6);
  for (bool continuous : {false, true}) {
    check_op([continuous](ad::Graph& g, const std::vector<ad::Var>& in) {
      return scalarize(g, ad::smooth_l1(in[0], 0.5, continuous));
    }, {{"quad", rnd(s, 10, -0.4, 0.4)}}, 1e-6);
    check_op([continuous](ad::Graph& g, const std::vector<ad::Var>& in) {
      return scalarize(g, ad::smooth_l1(in[0], 0.5, continuous));
    }, {{"lin", rnd(s, 11, 0.6, 2.0)}}, 1e-6);
  }
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return ad::mean_all(in[0]);
  }, {{"a", rnd(s, 12)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::mean_per_channel(in[0]));
  }, {{"a", rnd({4, 3, 5}, 13)}}, 1e-6);
}

TEST_CASE("gradcheck: complex magnitude away from the origin") {
  // Magnitudes stay in [0.5, ~2]: the |z| = 0 subgradient point is excluded
  // by construction.
  Tensor planes = rnd({4, 3, 3}, 21, 0.5, 1.5);
  double err = check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::cmagnitude(in[0]));
  }, {{"z", planes}}, 1e-6);
  CHECK(err < 1e-6);
}

TEST_CASE("cmagnitude: zero cell stays zero with zero gradient") {
  Tensor planes({2, 1, 1});
  ad::Graph g;
  ad::Var z = g.leaf(planes);
  ad::Var m = ad::cmagnitude(z);
  CHECK(g.value(m)[0] == 0.0);
  g.backward(ad::sum_all(m));
  CHECK(g.grad(z)[0] == 0.0);
  CHECK(g.grad(z)[1] == 0.0);
}

TEST_CASE("gradcheck: shape ops") {
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::reshape(in[0], {6, 2}));
  }, {{"a", rnd({3, 4}, 31)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::concat_c(in[0], in[1]));
  }, {{"a", rnd({2, 3, 3}, 32)}, {"b", rnd({4, 3, 3}, 33)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::slice_c(in[0], 1, 3));
  }, {{"a", rnd({5, 2, 2}, 34)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::transpose3(in[0], 2, 0, 1));
  }, {{"a", rnd({3, 4, 5}, 35)}}, 1e-6);
}

TEST_CASE("gradcheck: dense ops and softmax") {
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::matmul(in[0], in[1]));
  }, {{"a", rnd({3, 4}, 41)}, {"b", rnd({4, 5}, 42)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::matmul_nt(in[0], in[1]));
  }, {{"a", rnd({3, 4}, 43)}, {"b", rnd({5, 4}, 44)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::add_bias_rows(in[0], in[1]));
  }, {{"a", rnd({3, 4}, 45)}, {"b", rnd({3}, 46)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::softmax_rows(in[0]));
  }, {{"a", rnd({4, 6}, 47, -2.0, 2.0)}}, 1e-5);
}

TEST_CASE("softmax rows sum to one") {
  Tensor x = rnd({8, 16}, 48, -5.0, 5.0);
  ad::Graph g;
  ad::Var y = ad::softmax_rows(g.leaf(x, false));
  const Tensor& yv = g.value(y);
  for (int64_t i = 0; i < 8; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < 16; ++j) s += yv.at(i, j);
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("conv3x3 matches the direct formula and is linear") {
  Tensor x = rnd({3, 5, 4}, 51);
  Tensor w = rnd({2, 3, 3, 3}, 52);
  Tensor b = rnd({2}, 53);
  ad::Graph g;
  ad::Var out = ad::conv3x3(g.leaf(x, false), g.leaf(w, false), g.leaf(b, false));
  const Tensor& y = g.value(out);
  REQUIRE(y.shape == std::vector<int64_t>{2, 5, 4});
  // Direct oracle (explicit 4-d indexing).
  auto wat = [&](int co, int ci, int ky, int kx) {
    return w.v[static_cast<size_t>(((co * 3 + ci) * 3 + ky) * 3 + kx)];
  };
  for (int co = 0; co < 2; ++co)
    for (int oy = 0; oy < 5; ++oy)
      for (int ox = 0; ox < 4; ++ox) {
        double acc = b[co];
        for (int ci = 0; ci < 3; ++ci)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              int iy = oy + ky - 1, ix = ox + kx - 1;
              if (iy < 0 || iy >= 5 || ix < 0 || ix >= 4) continue;
              acc += wat(co, ci, ky, kx) * x.at(ci, iy, ix);
            }
        CHECK(y.at(co, oy, ox) == doctest::Approx(acc).epsilon(1e-12));
      }

  // Linearity with zero bias: conv(2x) = 2 conv(x).
  Tensor zb({2});
  Tensor x2 = x;
  for (auto& v : x2.v) v *= 2.0;
  ad::Graph g2;
  const Tensor& y1 = g2.value(ad::conv3x3(g2.leaf(x, false), g2.leaf(w, false), g2.leaf(zb, false)));
  const Tensor& y2 = g2.value(ad::conv3x3(g2.leaf(x2, false), g2.leaf(w, false), g2.leaf(zb, false)));
  for (int64_t i = 0; i < y1.numel(); ++i) CHECK(y2[i] == doctest::Approx(2.0 * y1[i]).epsilon(1e-12));
}

TEST_CASE("gradcheck: conv3x3") {
  double err = check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::conv3x3(in[0], in[1], in[2]));
  }, {{"x", rnd({3, 5, 4}, 61)}, {"w", rnd({2, 3, 3, 3}, 62)}, {"b", rnd({2}, 63)}}, 1e-6);
  CHECK(err < 1e-6);
}

TEST_CASE("tconv3x3_s2 matches the direct formula; gradcheck") {
  Tensor x = rnd({2, 3, 4}, 71);
  Tensor w = rnd({2, 3, 3, 3}, 72);  // (Cin, Cout, 3, 3)
  Tensor b = rnd({3}, 73);
  ad::Graph g;
  const Tensor& y = g.value(ad::tconv3x3_s2(g.leaf(x, false), g.leaf(w, false), g.leaf(b, false)));
  REQUIRE(y.shape == std::vector<int64_t>{3, 6, 8});
  auto wat = [&](int ci, int co, int ky, int kx) {
    return w.v[static_cast<size_t>(((ci * 3 + co) * 3 + ky) * 3 + kx)];
  };
  for (int co = 0; co < 3; ++co)
    for (int oy = 0; oy < 6; ++oy)
      for (int ox = 0; ox < 8; ++ox) {
        double acc = b[co];
        for (int ci = 0; ci < 2; ++ci)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              int ty = oy - ky + 1, tx = ox - kx + 1;  // oy = 2*iy + ky - 1
              if (ty % 2 != 0 || tx % 2 != 0) continue;
              int iy = ty / 2, ix = tx / 2;
              if (iy < 0 || iy >= 3 || ix < 0 || ix >= 4) continue;
              acc += wat(ci, co, ky, kx) * x.at(ci, iy, ix);
            }
        CHECK(y.at(co, oy, ox) == doctest::Approx(acc).epsilon(1e-12));
      }

  check_op([](ad::Graph& gg, const std::vector<ad::Var>& in) {
    return scalarize(gg, ad::tconv3x3_s2(in[0], in[1], in[2]));
  }, {{"x", x}, {"w", w}, {"b", b}}, 1e-6);
}

TEST_CASE("gradcheck: avg_pool2 and neighbor differences") {
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::avg_pool2(in[0]));
  }, {{"x", rnd({2, 4, 6}, 81)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::diag_diff(in[0]));
  }, {{"x", rnd({2, 4, 5}, 82)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::row_diff(in[0]));
  }, {{"x", rnd({2, 4, 5}, 83)}}, 1e-6);
  check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::col_diff(in[0]));
  }, {{"x", rnd({2, 4, 5}, 84)}}, 1e-6);
}

TEST_CASE("gradcheck: instance_norm (eps 1e-5) under the 1e-5 bar") {
  double err = check_op([](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::instance_norm(in[0], in[1], in[2]));
  }, {{"x", rnd({3, 4, 4}, 91, -2.0, 2.0)},
      {"gamma", rnd({3}, 92, 0.5, 1.5)},
      {"beta", rnd({3}, 93)}}, 1e-5);
  CHECK(err < 1e-5);
}

TEST_CASE("instance_norm: normalized planes have mean 0 and variance 1") {
  // Plane variance is much larger than eps so the eps bias is negligible.
  Tensor x = rnd({2, 16, 16}, 94, -20.0, 20.0);
  Tensor gamma({2}), beta({2});
  gamma.fill(1.0);
  ad::Graph g;
  const Tensor& y = g.value(ad::instance_norm(g.leaf(x, false), g.leaf(gamma, false),
                                              g.leaf(beta, false)));
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0, sq = 0.0;
    const int64_t S = 256;
    for (int64_t i = 0; i < S; ++i) {
      double v = y[c * S + i];
      mean += v;
      sq += v * v;
    }
    mean /= static_cast<double>(S);
    double var = sq / static_cast<double>(S) - mean * mean;
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(std::fabs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("gradcheck: channel_dft and its adjoint") {
  ChannelDftMatrices mats(8, 3);
  check_op([&mats](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::channel_dft(in[0], mats));
  }, {{"x", rnd({6, 3, 2}, 101)}}, 1e-6);

  // Linear-map check: forward of a sum equals sum of forwards.
  Tensor a = rnd({6, 3, 2}, 102), b = rnd({6, 3, 2}, 103);
  Tensor ab = a;
  for (int64_t i = 0; i < ab.numel(); ++i) ab[i] += b[i];
  ad::Graph g;
  const Tensor& fa = g.value(ad::channel_dft(g.leaf(a, false), mats));
  const Tensor& fb = g.value(ad::channel_dft(g.leaf(b, false), mats));
  const Tensor& fab = g.value(ad::channel_dft(g.leaf(ab, false), mats));
  for (int64_t i = 0; i < fab.numel(); ++i)
    CHECK(fab[i] == doctest::Approx(fa[i] + fb[i]).epsilon(1e-11));
}

TEST_CASE("gradcheck: scatter_channels routes gradients to predictions only") {
  ChannelSplit split = make_split(SplitKind::kSuperResolution, 6, 2);
  Tensor input = rnd({4, 3, 2}, 111);  // 2 input channels -> 4 planes
  check_op([&](ad::Graph& g, const std::vector<ad::Var>& in) {
    return scalarize(g, ad::scatter_channels(in[0], input, split));
  }, {{"pred", rnd({8, 3, 2}, 112)}}, 1e-6);
}
