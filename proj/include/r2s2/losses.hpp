// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "r2s2/autodiff.hpp"
#include "r2s2/beamform.hpp"
#include "r2s2/radar_types.hpp"

namespace r2s2 {

struct LossWeights {
  double rd_rec = 1.0;
  double rd_energy = 1.0;
  double rd_tv = 1.0;
  double bf_rec = 1.0;
  double bf_energy = 1.0;
  double bf_tv = 1.0;
  void validate() const;
};

struct LossOptions {
  LossWeights weights;
  // Energy penalty exactly as printed (0.5*d^2 / |d|-0.5, discontinuous at
  // the 0.5 knee) unless the continuous Huber variant is requested.
  bool continuous_smooth_l1 = false;
  // Diagonal neighbor differences by default; axis-aligned variant optional.
  bool separable_tv = false;
  int n_az = 64;
};

// Six unweighted terms plus the weighted total (total == sum of weight*term).
struct LossBreakdown {
  double rd_rec = 0.0, rd_energy = 0.0, rd_tv = 0.0;
  double bf_rec = 0.0, bf_energy = 0.0, bf_tv = 0.0;
  double total = 0.0;
};

// --- plane packing (re/im interleaved along the leading axis) ---
Tensor rd_to_planes(const RdCube& rd);
RdCube planes_to_rd(const Tensor& planes);
Tensor beam_to_planes(const BeamCube& bc);

// --- graph-side construction (training path) ---
struct LossGraph {
  ad::Var total;  // invalid when every weight is zero
  ad::Var rd_rec, rd_energy, rd_tv, bf_rec, bf_energy, bf_tv;
  LossBreakdown values(ad::Graph& g, const LossWeights& w) const;
};

// pred_planes: (2*n_label, R, D) graph var. label/input/full_label are
// constants for this sample; full_label_planes is the original full array
// (the beamform reference). Terms with zero weight are not built.
LossGraph build_total_loss(ad::Graph& g, ad::Var pred_planes, const Tensor& label_planes,
                           const Tensor& input_planes, const Tensor& full_label_planes,
                           const ChannelSplit& split, const ChannelDftMatrices& mats,
                           const LossOptions& opt);

// --- cube-side evaluation (shares the graph implementation) ---
double smooth_l1_value(double delta, bool continuous = false);
LossBreakdown rd_loss(const RdCube& pred, const RdCube& label, const LossOptions& opt);
LossBreakdown bf_loss(const BeamCube& pred_bf, const BeamCube& label_bf, const LossOptions& opt);
LossBreakdown total_loss(const RdCube& pred, const RdCube& label, const RdCube& input,
                         const ChannelSplit& split, const LossOptions& opt);

}  // namespace r2s2
