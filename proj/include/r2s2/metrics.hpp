// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "r2s2/array_config.hpp"
#include "r2s2/radar_types.hpp"

namespace r2s2 {

enum class MetricSpace { kRangeDoppler, kBeamformer };

// Per-frame metric aggregates. PSNR is averaged over the frames where it is
// finite; an all-exact prediction reports the infinite flag instead.
struct MetricsReport {
  double rd_l1 = 0.0;
  double rd_psnr_db = 0.0;
  double bf_l1 = 0.0;
  double bf_psnr_db = 0.0;
  int n_frames = 0;
  bool rd_psnr_infinite = false;
  bool bf_psnr_infinite = false;
};

// Relative L1 (elementwise |pred-label| / max(|label|, eps) with
// eps = 1e-12 * max |label|). Range-Doppler: per channel, then averaged;
// beamformer: one global mean. Throws on an all-zero label.
double l1_metric(const RdCube& pred, const RdCube& label);
double l1_metric(const BeamCube& pred, const BeamCube& label);

// 10*log10(max|label|^2 / MSE). Returns nullopt for an exact match
// (flagged-infinite). Range-Doppler: per channel then averaged (channels
// with zero MSE are excluded); beamformer: global.
std::optional<double> psnr_db(const RdCube& pred, const RdCube& label);
std::optional<double> psnr_db(const BeamCube& pred, const BeamCube& label);

// Catmull-Rom (a = -0.5) cubic-convolution interpolation along the channel
// axis, real and imaginary parts independently. Channel positions are mapped
// onto the input-sample grid (piecewise-linear between input positions, the
// uniform grid q = (t - s0)/h when input spacing is uniform); the virtual
// edge samples use the quadratic extension g[-1] = 3g[0] - 3g[1] + g[2].
// Throws UnsupportedExtrapolation when any requested label channel lies
// outside [min(input), max(input)] -- notably the whole super-resolution
// split.
RdCube bicubic_channels(const RdCube& input_rd, const ChannelSplit& split);

// Catmull-Rom kernel weights for the four samples around fractional q in
// [0, 1): offsets -1..2 relative to floor(q). Exposed for the oracle tests.
void catmull_rom_weights(double frac, double out[4]);

}  // namespace r2s2
