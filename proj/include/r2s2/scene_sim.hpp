// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "r2s2/radar_types.hpp"

namespace r2s2 {

// Bounds for random scene generation. Ranges are inclusive; defaults keep
// every draw inside the PointTarget invariants for the default radar.
struct SceneSpec {
  int n_targets_min = 1;
  int n_targets_max = 3;
  double amplitude_min = 0.5;
  double amplitude_max = 2.0;
  double noise_sigma_min = 0.0;
  double noise_sigma_max = 0.0;
  double sin_az_min = -1.0;  // -1 means "full FOV", clamped to sin(fov/2)
  double sin_az_max = 1.0;
  double range_bin_min = -1.0;  // negative means the full legal interval
  double range_bin_max = -1.0;
  // When > 0: with this probability the scene is a same-cell pair, two
  // targets sharing one integer range-Doppler cell and separated in u by a
  // draw from [pair_du_min, pair_du_max]. Exercises beamformer resolution.
  double paired_fraction = 0.0;
  double pair_du_min = 0.12;
  double pair_du_max = 0.25;
  // Snap range/Doppler positions to integer bins (in-band energy only).
  bool integer_bins = false;

  void validate(const RadarParams& p) const;
};

DerivedConstants derive_constants(const RadarParams& params, int n_az = 64);

Scene make_scene(const SceneSpec& spec, const RadarParams& params, uint64_t seed);

// x[n,m,k] = sum_t A_t cos(2*pi*(b_r*k/n_samples + b_d*m/n_sweeps)
//                          + pi*n*sin_az + phase) + noise,
// noise i.i.d. real Gaussian(0, noise_sigma^2) drawn from scene.seed.
RawCube synth_raw(const Scene& scene, const RadarParams& params);

void validate_target(const PointTarget& t, const RadarParams& params);

}  // namespace r2s2
