// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "r2s2/radar_types.hpp"

namespace r2s2 {

enum class WindowKind { kRectangular, kHann, kHamming };
enum class WindowAxis { kSample, kSweep };

struct WindowSpec {
  WindowKind kind = WindowKind::kHann;
  WindowAxis axis = WindowAxis::kSample;
};

// Periodic window coefficients, length n, all positive for the supported kinds.
std::vector<double> window_coefficients(WindowKind kind, int n);

struct PreprocConfig {
  WindowKind sample_window = WindowKind::kHann;
  WindowKind sweep_window = WindowKind::kHann;
};

// Window + real-to-complex DFT over the sample axis; keeps bins
// [0, n_samples/2) with unitary scaling 1/sqrt(n_samples).
RangeCube range_fft(const RawCube& raw, const WindowSpec& w);

// Window + complex DFT over the sweep axis, unitary scaling, then a center
// shift so zero velocity lands on bin n_sweeps/2.
RdCube doppler_fft(const RangeCube& rc, const WindowSpec& w);

RdCube preprocess(const RawCube& raw, const PreprocConfig& cfg = {});

WindowKind window_kind_from_string(const std::string& s);
std::string to_string(WindowKind k);

}  // namespace r2s2
