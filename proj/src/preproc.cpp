// SPDX-License-Identifier: Apache-2.0

#include "r2s2/preproc.hpp"

#include <cmath>

namespace r2s2 {

std::vector<double> window_coefficients(WindowKind kind, int n) {
  if (n < 1) throw ConfigError("window: length must be >= 1");
  std::vector<double> w(static_cast<size_t>(n), 1.0);
  switch (kind) {
    case WindowKind::kRectangular:
      break;
    case WindowKind::kHann:
      // Half-sample-shifted raised cosine: the usual Hann mainlobe without
      // the zero endpoint, so every coefficient is strictly positive.
      for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 0.5) / n);
      break;
    case WindowKind::kHamming:
      for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / n);
      break;
  }
  return w;
}

RangeCube range_fft(const RawCube& raw, const WindowSpec& w) {
  if (w.axis != WindowAxis::kSample) throw ConfigError("range_fft: window axis must be sample");
  if (raw.n_channels < 1 || raw.n_sweeps < 1 || raw.n_samples < 2 ||
      static_cast<int64_t>(raw.v.size()) !=
          static_cast<int64_t>(raw.n_channels) * raw.n_sweeps * raw.n_samples)
    throw ShapeError("range_fft: raw cube dimensions inconsistent");

  const int NK = raw.n_samples, NR = NK / 2;
  const auto win = window_coefficients(w.kind, NK);
  const double scale = 1.0 / std::sqrt(static_cast<double>(NK));
  Dft dft(NK);

  RangeCube rc(raw.n_channels, NR, raw.n_sweeps);
  std::vector<cdouble> line(static_cast<size_t>(NK));
  for (int c = 0; c < raw.n_channels; ++c) {
    for (int m = 0; m < raw.n_sweeps; ++m) {
      const double* src = &raw.at(c, m, 0);
      for (int k = 0; k < NK; ++k)
        line[static_cast<size_t>(k)] = {src[k] * win[static_cast<size_t>(k)], 0.0};
      dft.forward(line.data());
      for (int r = 0; r < NR; ++r) rc.at(c, r, m) = line[static_cast<size_t>(r)] * scale;
    }
  }
  return rc;
}

RdCube doppler_fft(const RangeCube& rc, const WindowSpec& w) {
  if (w.axis != WindowAxis::kSweep) throw ConfigError("doppler_fft: window axis must be sweep");
  if (rc.n_channels < 1 || rc.n_range < 1 || rc.n_sweeps < 2 ||
      static_cast<int64_t>(rc.v.size()) !=
          static_cast<int64_t>(rc.n_channels) * rc.n_range * rc.n_sweeps)
    throw ShapeError("doppler_fft: range cube dimensions inconsistent");

  const int NM = rc.n_sweeps;
  const auto win = window_coefficients(w.kind, NM);
  const double scale = 1.0 / std::sqrt(static_cast<double>(NM));
  Dft dft(NM);

  RdCube rd(rc.n_channels, rc.n_range, NM);
  std::vector<cdouble> line(static_cast<size_t>(NM));
  for (int c = 0; c < rc.n_channels; ++c) {
    for (int r = 0; r < rc.n_range; ++r) {
      for (int m = 0; m < NM; ++m)
        line[static_cast<size_t>(m)] = rc.at(c, r, m) * win[static_cast<size_t>(m)];
      dft.forward(line.data());
      // Center shift: DFT bin p lands on output bin (p + NM/2) mod NM.
      for (int p = 0; p < NM; ++p)
        rd.at(c, r, (p + NM / 2) % NM) = line[static_cast<size_t>(p)] * scale;
    }
  }
  return rd;
}

RdCube preprocess(const RawCube& raw, const PreprocConfig& cfg) {
  RangeCube rc = range_fft(raw, {cfg.sample_window, WindowAxis::kSample});
  return doppler_fft(rc, {cfg.sweep_window, WindowAxis::kSweep});
}

WindowKind window_kind_from_string(const std::string& s) {
  if (s == "rectangular") return WindowKind::kRectangular;
  if (s == "hann") return WindowKind::kHann;
  if (s == "hamming") return WindowKind::kHamming;
  throw ConfigError("unknown window kind '" + s + "'");
}

std::string to_string(WindowKind k) {
  switch (k) {
    case WindowKind::kRectangular: return "rectangular";
    case WindowKind::kHann: return "hann";
    case WindowKind::kHamming: return "hamming";
  }
  return "?";
}

}  // namespace r2s2
