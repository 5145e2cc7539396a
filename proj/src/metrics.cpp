// SPDX-License-Identifier: Apache-2.0

#include "r2s2/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace r2s2 {

namespace {

double max_abs(const std::vector<cdouble>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

// Mean over a channel's cells of |pred-label| / max(|label|, eps).
double l1_channel(const cdouble* pred, const cdouble* label, int64_t n, double eps) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i)
    acc += std::abs(pred[i] - label[i]) / std::max(std::abs(label[i]), eps);
  return acc / static_cast<double>(n);
}

double mse_cells(const cdouble* pred, const cdouble* label, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += std::norm(pred[i] - label[i]);
  return acc / static_cast<double>(n);
}

}  // namespace

double l1_metric(const RdCube& pred, const RdCube& label) {
  if (pred.n_channels != label.n_channels || pred.n_range != label.n_range ||
      pred.n_doppler != label.n_doppler)
    throw ShapeError("l1_metric: cube shapes differ");
  double peak = max_abs(label.v);
  if (peak == 0.0) throw NumericError("l1_metric: all-zero label frame (metric undefined)");
  double eps = 1e-12 * peak;
  int64_t cells = label.cells_per_channel();
  double acc = 0.0;
  for (int c = 0; c < label.n_channels; ++c)
    acc += l1_channel(&pred.v[static_cast<size_t>(c) * cells],
                      &label.v[static_cast<size_t>(c) * cells], cells, eps);
  return acc / label.n_channels;
}

double l1_metric(const BeamCube& pred, const BeamCube& label) {
  if (pred.n_az != label.n_az || pred.n_range != label.n_range ||
      pred.n_doppler != label.n_doppler)
    throw ShapeError("l1_metric: cube shapes differ");
  double peak = max_abs(label.v);
  if (peak == 0.0) throw NumericError("l1_metric: all-zero label frame (metric undefined)");
  // Calculated globally in this space to reward coherence.
  return l1_channel(pred.v.data(), label.v.data(), static_cast<int64_t>(label.v.size()),
                    1e-12 * peak);
}

std::optional<double> psnr_db(const RdCube& pred, const RdCube& label) {
  if (pred.v.size() != label.v.size()) throw ShapeError("psnr: cube shapes differ");
  int64_t cells = label.cells_per_channel();
  double acc = 0.0;
  int n = 0;
  for (int c = 0; c < label.n_channels; ++c) {
    const cdouble* p = &pred.v[static_cast<size_t>(c) * cells];
    const cdouble* l = &label.v[static_cast<size_t>(c) * cells];
    double mse = mse_cells(p, l, cells);
    if (mse == 0.0) continue;  // exact channel: excluded from the average
    double peak = 0.0;
    for (int64_t i = 0; i < cells; ++i) peak = std::max(peak, std::abs(l[i]));
    acc += 10.0 * std::log10(peak * peak / mse);
    ++n;
  }
  if (n == 0) return std::nullopt;  // flagged-infinite
  return acc / n;
}

std::optional<double> psnr_db(const BeamCube& pred, const BeamCube& label) {
  if (pred.v.size() != label.v.size()) throw ShapeError("psnr: cube shapes differ");
  double mse = mse_cells(pred.v.data(), label.v.data(), static_cast<int64_t>(label.v.size()));
  if (mse == 0.0) return std::nullopt;
  double peak = max_abs(label.v);
  return 10.0 * std::log10(peak * peak / mse);
}

void catmull_rom_weights(double frac, double out[4]) {
  // Keys kernel, a = -0.5, evaluated at offsets {1+f, f, 1-f, 2-f}.
  const double a = -0.5;
  auto k = [a](double x) {
    x = std::fabs(x);
    if (x < 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    if (x < 2.0) return a * (x * x * x - 5.0 * x * x + 8.0 * x - 4.0);
    return 0.0;
  };
  out[0] = k(1.0 + frac);
  out[1] = k(frac);
  out[2] = k(1.0 - frac);
  out[3] = k(2.0 - frac);
}

RdCube bicubic_channels(const RdCube& input_rd, const ChannelSplit& split) {
  split.validate();
  if (split.kind == SplitKind::kSuperResolution)
    throw UnsupportedExtrapolation(
        "super_resolution split: every label channel lies outside the input aperture");
  if (input_rd.n_channels != split.n_input())
    throw ShapeError("bicubic_channels: input cube does not match the split");
  const auto& pos = split.input_idx;
  const int P = split.n_input();
  if (P < 2) throw ConfigError("bicubic_channels: need at least two input channels");

  // Interpolation runs on the input-sample grid: channel position ->
  // fractional input index via the piecewise-linear inverse of the
  // position list.
  auto to_grid = [&](double t) {
    int seg = 0;
    while (seg + 2 < P && t > pos[static_cast<size_t>(seg + 1)]) ++seg;
    double s0 = pos[static_cast<size_t>(seg)], s1 = pos[static_cast<size_t>(seg + 1)];
    return seg + (t - s0) / (s1 - s0);
  };

  for (int t : split.label_idx)
    if (t < pos.front() || t > pos.back())
      throw UnsupportedExtrapolation("label channel " + std::to_string(t) +
                                     " is outside the input channel hull [" +
                                     std::to_string(pos.front()) + ", " +
                                     std::to_string(pos.back()) + "]");

  const int64_t cells = input_rd.cells_per_channel();
  RdCube out(split.n_label(), input_rd.n_range, input_rd.n_doppler);

  // Keys' quadratic boundary extension keeps linear sequences exact at the
  // edge intervals.
  auto sample = [&](int q) -> const cdouble* { return &input_rd.v[static_cast<size_t>(q) * cells]; };

  std::vector<cdouble> gm1(static_cast<size_t>(cells)), gp(static_cast<size_t>(cells));
  for (int li = 0; li < split.n_label(); ++li) {
    double q = to_grid(split.label_idx[static_cast<size_t>(li)]);
    int base = static_cast<int>(std::floor(q));
    base = std::clamp(base, 0, P - 2);
    double frac = q - base;
    double w[4];
    catmull_rom_weights(frac, w);

    const cdouble* g[4];
    if (base - 1 >= 0) {
      g[0] = sample(base - 1);
    } else if (P >= 3) {
      for (int64_t i = 0; i < cells; ++i)
        gm1[static_cast<size_t>(i)] = 3.0 * sample(0)[i] - 3.0 * sample(1)[i] + sample(2)[i];
      g[0] = gm1.data();
    } else {  // two samples: linear extension
      for (int64_t i = 0; i < cells; ++i)
        gm1[static_cast<size_t>(i)] = 2.0 * sample(0)[i] - sample(1)[i];
      g[0] = gm1.data();
    }
    g[1] = sample(base);
    g[2] = sample(base + 1);
    if (base + 2 < P) {
      g[3] = sample(base + 2);
    } else if (P >= 3) {
      for (int64_t i = 0; i < cells; ++i)
        gp[static_cast<size_t>(i)] =
            3.0 * sample(P - 1)[i] - 3.0 * sample(P - 2)[i] + sample(P - 3)[i];
      g[3] = gp.data();
    } else {
      for (int64_t i = 0; i < cells; ++i)
        gp[static_cast<size_t>(i)] = 2.0 * sample(P - 1)[i] - sample(P - 2)[i];
      g[3] = gp.data();
    }

    cdouble* dst = &out.v[static_cast<size_t>(li) * cells];
    for (int64_t i = 0; i < cells; ++i)
      dst[i] = w[0] * g[0][i] + w[1] * g[1][i] + w[2] * g[2][i] + w[3] * g[3][i];
  }
  return out;
}

}  // namespace r2s2
