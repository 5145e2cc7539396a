// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "r2s2/common.hpp"
#include "r2s2/fft.hpp"

namespace r2s2 {

// Acquisition geometry and waveform configuration. The simulator works in
// normalized bin units; carrier frequency and sweep bandwidth never enter the
// arithmetic (for the defaults below, a 79 GHz FMCW waveform with ~300 MHz
// bandwidth would produce the same 0.5 m range bins).
struct RadarParams {
  int n_channels = 16;
  int n_sweeps = 48;
  int n_samples = 256;
  double max_range_m = 64.0;
  double max_velocity_mps = 5.8;
  double fov_deg = 100.0;
  double element_spacing_wl = 0.5;  // in wavelengths

  void validate() const {
    if (n_channels < 2) throw ConfigError("radar: n_channels must be >= 2");
    if (n_sweeps < 2) throw ConfigError("radar: n_sweeps must be >= 2");
    if (n_samples < 4 || n_samples % 2 != 0)
      throw ConfigError("radar: n_samples must be even and >= 4");
    if (max_range_m <= 0.0) throw ConfigError("radar: max_range must be positive");
    if (max_velocity_mps <= 0.0) throw ConfigError("radar: max_velocity must be positive");
    if (fov_deg <= 0.0 || fov_deg > 180.0) throw ConfigError("radar: fov out of (0, 180]");
    if (element_spacing_wl != 0.5)
      throw ConfigError("radar: only half-wavelength element spacing is supported");
  }
};

struct DerivedConstants {
  double range_bin_m = 0.0;
  double doppler_bin_mps = 0.0;
  int n_range_bins = 0;
  double sin_fov_half = 0.0;
  std::vector<double> u_grid;  // sine-azimuth per beamformer bin (default length)
};

// One ideal point scatterer, in normalized bin units.
struct PointTarget {
  double range_bin = 0.0;    // fractional, in [2, n_range_bins - 2]
  double doppler_bin = 0.0;  // fractional, in [-n_sweeps/2 + 1, n_sweeps/2 - 1]
  double sin_azimuth = 0.0;  // |.| <= sin(fov/2)
  double amplitude = 1.0;    // linear, > 0
  double phase = 0.0;        // radians
};

struct Scene {
  std::vector<PointTarget> targets;
  double noise_sigma = 0.0;
  uint64_t seed = 0;
};

// Raw real-valued ADC frame, indexed [channel][sweep][sample].
struct RawCube {
  int n_channels = 0, n_sweeps = 0, n_samples = 0;
  std::vector<double> v;

  RawCube() = default;
  RawCube(int nc, int nm, int nk)
      : n_channels(nc),
        n_sweeps(nm),
        n_samples(nk),
        v(static_cast<size_t>(nc) * nm * nk, 0.0) {}

  double& at(int c, int m, int k) {
    return v[(static_cast<size_t>(c) * n_sweeps + m) * n_samples + k];
  }
  const double& at(int c, int m, int k) const {
    return v[(static_cast<size_t>(c) * n_sweeps + m) * n_samples + k];
  }
};

// After the sample-axis FFT: [channel][range][sweep].
struct RangeCube {
  int n_channels = 0, n_range = 0, n_sweeps = 0;
  std::vector<cdouble> v;

  RangeCube() = default;
  RangeCube(int nc, int nr, int nm)
      : n_channels(nc), n_range(nr), n_sweeps(nm), v(static_cast<size_t>(nc) * nr * nm) {}

  cdouble& at(int c, int r, int m) {
    return v[(static_cast<size_t>(c) * n_range + r) * n_sweeps + m];
  }
  const cdouble& at(int c, int r, int m) const {
    return v[(static_cast<size_t>(c) * n_range + r) * n_sweeps + m];
  }
};

// Complex range-Doppler tensor, Doppler axis centered (zero velocity at bin
// n_doppler/2): [channel][range][doppler].
struct RdCube {
  int n_channels = 0, n_range = 0, n_doppler = 0;
  std::vector<cdouble> v;

  RdCube() = default;
  RdCube(int nc, int nr, int nd)
      : n_channels(nc), n_range(nr), n_doppler(nd), v(static_cast<size_t>(nc) * nr * nd) {}

  cdouble& at(int c, int r, int d) {
    return v[(static_cast<size_t>(c) * n_range + r) * n_doppler + d];
  }
  const cdouble& at(int c, int r, int d) const {
    return v[(static_cast<size_t>(c) * n_range + r) * n_doppler + d];
  }
  int64_t cells_per_channel() const { return static_cast<int64_t>(n_range) * n_doppler; }
};

// After the channel-axis FFT: [azimuth][range][doppler], u = sin(azimuth).
struct BeamCube {
  int n_az = 0, n_range = 0, n_doppler = 0;
  std::vector<cdouble> v;
  std::vector<double> u_grid;

  BeamCube() = default;
  BeamCube(int na, int nr, int nd)
      : n_az(na), n_range(nr), n_doppler(nd), v(static_cast<size_t>(na) * nr * nd) {
    u_grid.resize(static_cast<size_t>(na));
    for (int p = 0; p < na; ++p) u_grid[static_cast<size_t>(p)] = 2.0 * (p - na / 2) / na;
  }

  cdouble& at(int a, int r, int d) {
    return v[(static_cast<size_t>(a) * n_range + r) * n_doppler + d];
  }
  const cdouble& at(int a, int r, int d) const {
    return v[(static_cast<size_t>(a) * n_range + r) * n_doppler + d];
  }
};

}  // namespace r2s2
