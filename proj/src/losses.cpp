// SPDX-License-Identifier: Apache-2.0

#include "r2s2/losses.hpp"

#include <cmath>

namespace r2s2 {

void LossWeights::validate() const {
  for (double w : {rd_rec, rd_energy, rd_tv, bf_rec, bf_energy, bf_tv})
    if (w < 0.0 || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
}

Tensor rd_to_planes(const RdCube& rd) {
  Tensor t({2 * static_cast<int64_t>(rd.n_channels), rd.n_range, rd.n_doppler});
  const int64_t cells = rd.cells_per_channel();
  for (int c = 0; c < rd.n_channels; ++c) {
    const cdouble* src = &rd.v[static_cast<size_t>(c) * cells];
    double* re = t.data() + 2 * static_cast<int64_t>(c) * cells;
    double* im = re + cells;
    for (int64_t i = 0; i < cells; ++i) {
      re[i] = src[i].real();
      im[i] = src[i].imag();
    }
  }
  return t;
}

RdCube planes_to_rd(const Tensor& planes) {
  if (planes.rank() != 3 || planes.dim(0) % 2 != 0)
    throw ShapeError("planes_to_rd: (2C, R, D) required");
  RdCube rd(static_cast<int>(planes.dim(0) / 2), static_cast<int>(planes.dim(1)),
            static_cast<int>(planes.dim(2)));
  const int64_t cells = rd.cells_per_channel();
  for (int c = 0; c < rd.n_channels; ++c) {
    const double* re = planes.data() + 2 * static_cast<int64_t>(c) * cells;
    const double* im = re + cells;
    cdouble* dst = &rd.v[static_cast<size_t>(c) * cells];
    for (int64_t i = 0; i < cells; ++i) dst[i] = {re[i], im[i]};
  }
  return rd;
}

Tensor beam_to_planes(const BeamCube& bc) {
  Tensor t({2 * static_cast<int64_t>(bc.n_az), bc.n_range, bc.n_doppler});
  const int64_t cells = static_cast<int64_t>(bc.n_range) * bc.n_doppler;
  for (int a = 0; a < bc.n_az; ++a) {
    const cdouble* src = &bc.v[static_cast<size_t>(a) * cells];
    double* re = t.data() + 2 * static_cast<int64_t>(a) * cells;
    double* im = re + cells;
    for (int64_t i = 0; i < cells; ++i) {
      re[i] = src[i].real();
      im[i] = src[i].imag();
    }
  }
  return t;
}

double smooth_l1_value(double delta, bool continuous) {
  // Scalar convenience mirroring the ad::smooth_l1 elementwise map at
  // threshold 0.5.
  double m = std::fabs(delta);
  if (m < 0.5) return continuous ? delta * delta : 0.5 * delta * delta;
  return continuous ? m - 0.25 : m - 0.5;
}

namespace {

// Mean over cells of squared modulus, one value per complex channel:
// planes (2C, R, D) -> (C). The (C, 2RD) view makes it a plain channel mean
// of squares, times two.
ad::Var per_channel_mean_sq(ad::Graph& g, ad::Var planes) {
  const Tensor& t = g.value(planes);
  ad::Var sq = ad::mul(planes, planes);
  ad::Var grouped = ad::reshape(sq, {t.dim(0) / 2, 2 * t.dim(1), t.dim(2)});
  return ad::scale(ad::mean_per_channel(grouped), 2.0);
}

// Mean over (k>=1, l>=1) of |m(k,l) - m(k-1,l-1)| per leading slot.
ad::Var tv_per_channel(ad::Var mag, bool separable) {
  if (!separable) return ad::mean_per_channel(ad::abs(ad::diag_diff(mag)));
  ad::Var r = ad::mean_per_channel(ad::abs(ad::row_diff(mag)));
  ad::Var c = ad::mean_per_channel(ad::abs(ad::col_diff(mag)));
  return ad::scale(ad::add(r, c), 0.5);
}

struct TermAccum {
  ad::Var total;
  bool any = false;
  void add(ad::Graph& g, ad::Var term, double weight) {
    if (weight == 0.0) return;
    ad::Var w = ad::scale(term, weight);
    total = any ? ad::add(total, w) : w;
    any = true;
  }
};

}  // namespace

LossGraph build_total_loss(ad::Graph& g, ad::Var pred_planes, const Tensor& label_planes,
                           const Tensor& input_planes, const Tensor& full_label_planes,
                           const ChannelSplit& split, const ChannelDftMatrices& mats,
                           const LossOptions& opt) {
  opt.weights.validate();
  const Tensor& pv = g.value(pred_planes);
  if (pv.shape != label_planes.shape) throw ShapeError("loss: pred/label plane shapes differ");
  if (full_label_planes.dim(0) != 2 * split.n_total)
    throw ShapeError("loss: full label planes must cover the whole array");
  const LossWeights& w = opt.weights;

  LossGraph out;
  TermAccum acc;
  ad::Var label_c = g.constant(label_planes);

  const bool need_rd = w.rd_rec > 0 || w.rd_energy > 0 || w.rd_tv > 0;
  if (need_rd) {
    if (w.rd_rec > 0) {
      ad::Var diff = ad::sub(pred_planes, label_c);
      out.rd_rec = ad::mean_all(per_channel_mean_sq(g, diff));
      acc.add(g, out.rd_rec, w.rd_rec);
    }
    if (w.rd_energy > 0 || w.rd_tv > 0) {
      ad::Var mag_pred = ad::cmagnitude(pred_planes);
      if (w.rd_energy > 0) {
        ad::Var e_pred = ad::mean_per_channel(mag_pred);
        ad::Var e_label = ad::mean_per_channel(ad::cmagnitude(label_c));
        out.rd_energy = ad::mean_all(
            ad::smooth_l1(ad::sub(e_pred, e_label), 0.5, opt.continuous_smooth_l1));
        acc.add(g, out.rd_energy, w.rd_energy);
      }
      if (w.rd_tv > 0) {
        out.rd_tv = ad::mean_all(tv_per_channel(mag_pred, opt.separable_tv));
        acc.add(g, out.rd_tv, w.rd_tv);
      }
    }
  }

  const bool need_bf = w.bf_rec > 0 || w.bf_energy > 0 || w.bf_tv > 0;
  if (need_bf) {
    ad::Var full = ad::scatter_channels(pred_planes, input_planes, split);
    ad::Var bf = ad::channel_dft(full, mats);
    ad::Var label_bf = ad::channel_dft(g.constant(full_label_planes), mats);
    if (w.bf_rec > 0) {
      ad::Var diff = ad::sub(bf, label_bf);
      // Global mean over all (az, range, Doppler) cells.
      out.bf_rec = ad::scale(ad::mean_all(ad::mul(diff, diff)), 2.0);
      acc.add(g, out.bf_rec, w.bf_rec);
    }
    if (w.bf_energy > 0 || w.bf_tv > 0) {
      ad::Var mag_bf = ad::cmagnitude(bf);
      if (w.bf_energy > 0) {
        ad::Var e_pred = ad::mean_per_channel(mag_bf);  // per azimuth bin
        ad::Var e_label = ad::mean_per_channel(ad::cmagnitude(label_bf));
        out.bf_energy = ad::mean_all(
            ad::smooth_l1(ad::sub(e_pred, e_label), 0.5, opt.continuous_smooth_l1));
        acc.add(g, out.bf_energy, w.bf_energy);
      }
      if (w.bf_tv > 0) {
        // Differences run over (range, azimuth) for each Doppler bin.
        ad::Var by_doppler = ad::transpose3(mag_bf, 2, 1, 0);  // (D, R, A)
        out.bf_tv = ad::mean_all(tv_per_channel(by_doppler, opt.separable_tv));
        acc.add(g, out.bf_tv, w.bf_tv);
      }
    }
  }

  if (acc.any) out.total = acc.total;
  return out;
}

LossBreakdown LossGraph::values(ad::Graph& g, const LossWeights& w) const {
  LossBreakdown b;
  auto val = [&](ad::Var v) { return v.valid() ? g.value(v)[0] : 0.0; };
  b.rd_rec = val(rd_rec);
  b.rd_energy = val(rd_energy);
  b.rd_tv = val(rd_tv);
  b.bf_rec = val(bf_rec);
  b.bf_energy = val(bf_energy);
  b.bf_tv = val(bf_tv);
  b.total = w.rd_rec * b.rd_rec + w.rd_energy * b.rd_energy + w.rd_tv * b.rd_tv +
            w.bf_rec * b.bf_rec + w.bf_energy * b.bf_energy + w.bf_tv * b.bf_tv;
  return b;
}

namespace {

// Forces every term to be built regardless of weight so cube-side
// evaluations always report all six values.
LossOptions all_terms(const LossOptions& opt) {
  LossOptions o = opt;
  o.weights = LossWeights{};  // all ones
  return o;
}

}  // namespace

LossBreakdown rd_loss(const RdCube& pred, const RdCube& label, const LossOptions& opt) {
  if (pred.n_channels != label.n_channels || pred.n_range != label.n_range ||
      pred.n_doppler != label.n_doppler)
    throw ShapeError("rd_loss: cube shapes differ");
  Tensor pred_planes = rd_to_planes(pred);
  Tensor label_planes = rd_to_planes(label);

  ad::Graph g;
  ad::Var p = g.leaf(pred_planes, false);
  ad::Var l = g.constant(label_planes);
  LossOptions o = all_terms(opt);

  LossBreakdown b;
  b.rd_rec = g.value(ad::mean_all(per_channel_mean_sq(g, ad::sub(p, l))))[0];
  ad::Var mag_pred = ad::cmagnitude(p);
  ad::Var e_diff = ad::sub(ad::mean_per_channel(mag_pred), ad::mean_per_channel(ad::cmagnitude(l)));
  b.rd_energy = g.value(ad::mean_all(ad::smooth_l1(e_diff, 0.5, o.continuous_smooth_l1)))[0];
  b.rd_tv = g.value(ad::mean_all(tv_per_channel(mag_pred, o.separable_tv)))[0];
  const LossWeights& w = opt.weights;
  b.total = w.rd_rec * b.rd_rec + w.rd_energy * b.rd_energy + w.rd_tv * b.rd_tv;
  return b;
}

LossBreakdown bf_loss(const BeamCube& pred_bf, const BeamCube& label_bf, const LossOptions& opt) {
  if (pred_bf.n_az != label_bf.n_az || pred_bf.n_range != label_bf.n_range ||
      pred_bf.n_doppler != label_bf.n_doppler || pred_bf.u_grid != label_bf.u_grid)
    throw ConfigError("bf_loss: beamform settings differ between cubes");
  Tensor pred_planes = beam_to_planes(pred_bf);
  Tensor label_planes = beam_to_planes(label_bf);

  ad::Graph g;
  ad::Var p = g.leaf(pred_planes, false);
  ad::Var l = g.constant(label_planes);
  LossOptions o = all_terms(opt);

  LossBreakdown b;
  ad::Var diff = ad::sub(p, l);
  b.bf_rec = g.value(ad::scale(ad::mean_all(ad::mul(diff, diff)), 2.0))[0];
  ad::Var mag_pred = ad::cmagnitude(p);
  ad::Var e_diff = ad::sub(ad::mean_per_channel(mag_pred), ad::mean_per_channel(ad::cmagnitude(l)));
  b.bf_energy = g.value(ad::mean_all(ad::smooth_l1(e_diff, 0.5, o.continuous_smooth_l1)))[0];
  b.bf_tv =
      g.value(ad::mean_all(tv_per_channel(ad::transpose3(mag_pred, 2, 1, 0), o.separable_tv)))[0];
  const LossWeights& w = opt.weights;
  b.total = w.bf_rec * b.bf_rec + w.bf_energy * b.bf_energy + w.bf_tv * b.bf_tv;
  return b;
}

LossBreakdown total_loss(const RdCube& pred, const RdCube& label, const RdCube& input,
                         const ChannelSplit& split, const LossOptions& opt) {
  Tensor pred_planes = rd_to_planes(pred);
  Tensor label_planes = rd_to_planes(label);
  Tensor input_planes = rd_to_planes(input);
  Tensor full_label_planes = rd_to_planes(reassemble(input, label, split));

  ChannelDftMatrices mats(opt.n_az, split.n_total);
  ad::Graph g;
  ad::Var p = g.leaf(pred_planes, false);
  LossOptions o = all_terms(opt);
  o.n_az = opt.n_az;
  LossGraph lg =
      build_total_loss(g, p, label_planes, input_planes, full_label_planes, split, mats, o);
  return lg.values(g, opt.weights);
}

}  // namespace r2s2
