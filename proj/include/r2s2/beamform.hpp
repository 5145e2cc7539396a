// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "r2s2/radar_types.hpp"
#include "r2s2/tensor.hpp"

namespace r2s2 {

// Channel-axis DFT coefficients shared by the beamformer and the training
// loss so both sides see the identical transform. Entries are
// exp(-2*pi*i*p*n/n_az)/sqrt(n_az) with the output rows center-shifted so
// u = 0 sits at row n_az/2.
struct ChannelDftMatrices {
  int n_az = 0;
  int n_channels = 0;
  Tensor cos_m;  // (n_az, n_channels)
  Tensor sin_m;  // (n_az, n_channels), sign folded in: entry = -sin(theta)

  ChannelDftMatrices() = default;
  ChannelDftMatrices(int n_az, int n_channels);
};

// Zero-padded unitary channel FFT. n_az must be a power of two and at least
// the channel count.
BeamCube beamform(const RdCube& rd, int n_az = 64);

// Non-coherent integration: per-cell sum of |.|^2 over channels.
Tensor nci(const RdCube& rd);  // (n_range, n_doppler)

// Width in u of the contiguous region around the unique pattern maximum that
// stays above max * 10^(level_db/10). `pattern` is a power pattern sampled on
// u_grid; crossings are linearly interpolated.
double beamwidth(const std::vector<double>& pattern, const std::vector<double>& u_grid,
                 double level_db = -3.0);

struct CartesianGrid {
  double x_min = -40.0, x_max = 40.0;
  double y_min = 0.0, y_max = 64.0;
  int nx = 96, ny = 96;
};

// Nearest-neighbor resampling of an (azimuth x range) power slice onto a
// cartesian (x, y) meter grid; cells outside range/FOV are NaN.
// Row i of the result is y (forward), column j is x (cross).
Tensor polar_to_cartesian(const Tensor& slice, const std::vector<double>& u_grid,
                          double range_bin_m, double sin_fov_half, const CartesianGrid& grid);

}  // namespace r2s2
