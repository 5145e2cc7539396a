// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>

#include "doctest.h"
#include "r2s2/losses.hpp"

using namespace r2s2;

namespace {

RdCube random_rd(int nc, int nr, int nd, uint64_t seed, double mag_lo = 0.5, double mag_hi = 1.5) {
  Rng rng(seed);
  RdCube rd(nc, nr, nd);
  for (auto& v : rd.v) {
    double m = rng.uniform(mag_lo, mag_hi);
    double a = rng.uniform(0.0, 2.0 * M_PI);
    v = {m * std::cos(a), m * std::sin(a)};
  }
  return rd;
}

}  // namespace

TEST_CASE("smooth_l1: branch values exactly as printed") {
  CHECK(smooth_l1_value(0.0) == 0.0);
  CHECK(smooth_l1_value(0.4) == 0.5 * 0.4 * 0.4);  // 0.08 up to representation
  CHECK(smooth_l1_value(0.4) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(smooth_l1_value(2.0) == 1.5);  // exact in binary
  CHECK(smooth_l1_value(-0.4) == 0.5 * 0.4 * 0.4);
  CHECK(smooth_l1_value(-2.0) == 1.5);
  // The printed form is discontinuous at the knee.
  CHECK(smooth_l1_value(0.5) == 0.0);
  CHECK(smooth_l1_value(0.499999999) == doctest::Approx(0.125).epsilon(1e-6));
  // Continuous variant: matching branches at the knee.
  CHECK(smooth_l1_value(0.4, true) == doctest::Approx(0.16));
  CHECK(smooth_l1_value(2.0, true) == doctest::Approx(1.75));
  CHECK(smooth_l1_value(0.5, true) == doctest::Approx(0.25));
}

TEST_CASE("rd_loss: perfect prediction zeroes rec and energy, TV sees pred") {
  RdCube label = random_rd(4, 6, 5, 1);
  LossOptions opt;
  LossBreakdown b = rd_loss(label, label, opt);
  CHECK(b.rd_rec == 0.0);
  CHECK(b.rd_energy == 0.0);
  CHECK(b.rd_tv > 0.0);
  CHECK(b.total == doctest::Approx(b.rd_tv));
}

TEST_CASE("rd_loss: constant complex offset on one channel") {
  const int NJ = 4;
  RdCube label = random_rd(NJ, 6, 5, 2);
  RdCube pred = label;
  const cdouble c{0.3, -0.2};
  for (int r = 0; r < 6; ++r)
    for (int d = 0; d < 5; ++d) pred.at(2, r, d) += c;
  LossBreakdown b = rd_loss(pred, label, {});
  CHECK(b.rd_rec == doctest::Approx(std::norm(c) / NJ).epsilon(1e-12));
}

TEST_CASE("rd_loss: doubling the prediction turns energy into smooth_l1(E_label)") {
  RdCube label = random_rd(3, 8, 4, 3, 0.2, 0.6);
  RdCube pred = label;
  for (auto& v : pred.v) v *= 2.0;
  // E_pred - E_label = E_label per channel.
  double expect = 0.0;
  for (int c = 0; c < 3; ++c) {
    double e = 0.0;
    for (int r = 0; r < 8; ++r)
      for (int d = 0; d < 4; ++d) e += std::abs(label.at(c, r, d));
    e /= 32.0;
    expect += smooth_l1_value(e);
  }
  expect /= 3.0;
  LossBreakdown b = rd_loss(pred, label, {});
  CHECK(b.rd_energy == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bf_loss: global phase rotation leaves energy at zero") {
  RdCube rd = random_rd(16, 6, 5, 4);
  BeamCube label_bf = beamform(rd, 64);
  BeamCube pred_bf = label_bf;
  const double alpha = 0.7;
  const cdouble rot{std::cos(alpha), std::sin(alpha)};
  for (auto& v : pred_bf.v) v *= rot;
  LossBreakdown b = bf_loss(pred_bf, label_bf, {});
  double mean_sq = 0.0;
  for (const auto& v : label_bf.v) mean_sq += std::norm(v);
  mean_sq /= static_cast<double>(label_bf.v.size());
  CHECK(b.bf_rec == doctest::Approx(mean_sq * std::norm(rot - 1.0)).epsilon(1e-10));
  CHECK(b.bf_energy == doctest::Approx(0.0));
}

TEST_CASE("bf_loss: single-cell discrepancy") {
  RdCube rd = random_rd(16, 6, 5, 5);
  BeamCube label_bf = beamform(rd, 64);
  BeamCube pred_bf = label_bf;
  const cdouble d{0.25, 0.4};
  pred_bf.at(10, 3, 2) += d;
  LossBreakdown b = bf_loss(pred_bf, label_bf, {});
  const double n_cells = 64.0 * 6.0 * 5.0;
  CHECK(b.bf_rec == doctest::Approx(std::norm(d) / n_cells).epsilon(1e-10));

  BeamCube other = beamform(rd, 128);
  CHECK_THROWS_AS(bf_loss(other, label_bf, {}), ConfigError);
}

TEST_CASE("total_loss: perfect prediction leaves only the TV terms") {
  RdCube full = random_rd(16, 8, 6, 6);
  ChannelSplit split = make_split(SplitKind::kSparseArray, 16, 4);
  auto cubes = apply_split(full, split);
  LossOptions opt;
  LossBreakdown b = total_loss(cubes.label, cubes.label, cubes.input, split, opt);
  CHECK(b.rd_rec == 0.0);
  CHECK(b.rd_energy == 0.0);
  CHECK(b.bf_rec < 1e-24);
  CHECK(b.bf_energy < 1e-12);
  CHECK(b.rd_tv > 0.0);
  CHECK(b.bf_tv > 0.0);
  CHECK(b.total == doctest::Approx(b.rd_tv + b.bf_tv).epsilon(1e-9));

  LossOptions zero;
  zero.weights = {0, 0, 0, 0, 0, 0};
  CHECK(total_loss(cubes.label, cubes.label, cubes.input, split, zero).total == 0.0);
}

TEST_CASE("loss terms are non-negative and rec terms are exactly quadratic") {
  RdCube label = random_rd(4, 6, 5, 7);
  RdCube pred = random_rd(4, 6, 5, 8);
  LossBreakdown b1 = rd_loss(pred, label, {});
  CHECK(b1.rd_rec >= 0.0);
  CHECK(b1.rd_energy >= 0.0);
  CHECK(b1.rd_tv >= 0.0);

  // Scale the residual by s: rec scales by s^2.
  const double s = 3.0;
  RdCube pred_s = label;
  for (size_t i = 0; i < pred_s.v.size(); ++i) pred_s.v[i] += s * (pred.v[i] - label.v[i]);
  LossBreakdown b2 = rd_loss(pred_s, label, {});
  CHECK(b2.rd_rec == doctest::Approx(s * s * b1.rd_rec).epsilon(1e-12));
}

TEST_CASE("total_loss gradient wrt predictions passes finite differences") {
  ChannelSplit split = make_split(SplitKind::kSparseArray, 6, 2);
  RdCube full = random_rd(6, 6, 4, 9);
  auto cubes = apply_split(full, split);
  Tensor label_planes = rd_to_planes(cubes.label);
  Tensor input_planes = rd_to_planes(cubes.input);
  Tensor full_planes = rd_to_planes(full);
  ChannelDftMatrices mats(8, 6);
  LossOptions opt;

  Tensor pred0 = rd_to_planes(random_rd(4, 6, 4, 10));
  auto fn = [&](ad::Graph& g, const std::vector<ad::Var>& in) {
    return build_total_loss(g, in[0], label_planes, input_planes, full_planes, split, mats, opt)
        .total;
  };
  auto res = ad::grad_check(fn, {{"pred", pred0}}, 1e-4);
  CHECK(res.max_rel_err < 1e-5);

  // Separable TV and the continuous knee variant stay differentiable too.
  LossOptions alt;
  alt.separable_tv = true;
  alt.continuous_smooth_l1 = true;
  auto fn2 = [&](ad::Graph& g, const std::vector<ad::Var>& in) {
    return build_total_loss(g, in[0], label_planes, input_planes, full_planes, split, mats, alt)
        .total;
  };
  CHECK(ad::grad_check(fn2, {{"pred", pred0}}, 1e-4).max_rel_err < 1e-5);
}

TEST_CASE("build_total_loss: zero weights produce no graph") {
  ChannelSplit split = make_split(SplitKind::kSuperResolution, 6, 2);
  RdCube full = random_rd(6, 4, 4, 11);
  auto cubes = apply_split(full, split);
  ChannelDftMatrices mats(8, 6);
  LossOptions zero;
  zero.weights = {0, 0, 0, 0, 0, 0};
  Tensor pred = rd_to_planes(cubes.label);
  ad::Graph g;
  ad::Var p = g.leaf(pred);
  LossGraph lg = build_total_loss(g, p, rd_to_planes(cubes.label), rd_to_planes(cubes.input),
                                  rd_to_planes(full), split, mats, zero);
  CHECK(!lg.total.valid());
  CHECK(lg.values(g, zero.weights).total == 0.0);
}

TEST_CASE("plane packing round-trips") {
  RdCube rd = random_rd(5, 7, 3, 12);
  RdCube back = planes_to_rd(rd_to_planes(rd));
  CHECK(back.v == rd.v);
  CHECK(back.n_channels == 5);
}
