// SPDX-License-Identifier: Apache-2.0

#include "r2s2/beamform.hpp"

#include <cmath>

#include "r2s2/kernels.hpp"

namespace r2s2 {

ChannelDftMatrices::ChannelDftMatrices(int na, int nc) : n_az(na), n_channels(nc) {
  if (na < nc) throw ConfigError("beamform: n_az must be >= n_channels");
  if (na < 1 || (na & (na - 1)) != 0) throw ConfigError("beamform: n_az must be a power of two");
  cos_m = Tensor({na, nc});
  sin_m = Tensor({na, nc});
  double scale = 1.0 / std::sqrt(static_cast<double>(na));
  for (int row = 0; row < na; ++row) {
    // Output row is center-shifted: row na/2 is DFT bin 0 (u = 0).
    int p = (row - na / 2 + na) % na;
    for (int n = 0; n < nc; ++n) {
      double theta = -2.0 * M_PI * static_cast<double>(p) * n / na;
      cos_m.at(row, n) = std::cos(theta) * scale;
      sin_m.at(row, n) = std::sin(theta) * scale;
    }
  }
}

BeamCube beamform(const RdCube& rd, int n_az) {
  ChannelDftMatrices mats(n_az, rd.n_channels);
  const auto& ops = kernels::active();
  const int nc = rd.n_channels;
  const int64_t cells = rd.cells_per_channel();

  // Deinterleave to planar re/im so the transform runs as four GEMMs.
  Tensor re({nc, cells}), im({nc, cells});
  for (int c = 0; c < nc; ++c) {
    const cdouble* src = &rd.v[static_cast<size_t>(c) * cells];
    double* pr = &re.at(c, 0);
    double* pi = &im.at(c, 0);
    for (int64_t i = 0; i < cells; ++i) {
      pr[i] = src[i].real();
      pi[i] = src[i].imag();
    }
  }

  int n = static_cast<int>(cells);
  Tensor out_re({n_az, cells}), out_im({n_az, cells});
  // (cos + i sin)(re + i im): re' = cos*re - sin*im, im' = cos*im + sin*re
  ops.gemm_nn(n_az, n, nc, 1.0, mats.cos_m.data(), nc, re.data(), n, 0.0, out_re.data(), n);
  ops.gemm_nn(n_az, n, nc, -1.0, mats.sin_m.data(), nc, im.data(), n, 1.0, out_re.data(), n);
  ops.gemm_nn(n_az, n, nc, 1.0, mats.cos_m.data(), nc, im.data(), n, 0.0, out_im.data(), n);
  ops.gemm_nn(n_az, n, nc, 1.0, mats.sin_m.data(), nc, re.data(), n, 1.0, out_im.data(), n);

  BeamCube bc(n_az, rd.n_range, rd.n_doppler);
  for (int a = 0; a < n_az; ++a) {
    cdouble* dst = &bc.v[static_cast<size_t>(a) * cells];
    const double* pr = &out_re.at(a, 0);
    const double* pi = &out_im.at(a, 0);
    for (int64_t i = 0; i < cells; ++i) dst[i] = {pr[i], pi[i]};
  }
  return bc;
}

Tensor nci(const RdCube& rd) {
  Tensor map({rd.n_range, rd.n_doppler});
  int64_t cells = rd.cells_per_channel();
  for (int c = 0; c < rd.n_channels; ++c) {
    const cdouble* src = &rd.v[static_cast<size_t>(c) * cells];
    for (int64_t i = 0; i < cells; ++i) map[i] += std::norm(src[i]);
  }
  return map;
}

double beamwidth(const std::vector<double>& pattern, const std::vector<double>& u_grid,
                 double level_db) {
  const size_t n = pattern.size();
  if (n < 3 || u_grid.size() != n) throw ShapeError("beamwidth: bad pattern/grid");
  size_t imax = 0;
  for (size_t i = 1; i < n; ++i)
    if (pattern[i] > pattern[imax]) imax = i;
  double pmax = pattern[imax];
  int ties = 0;
  double pmin = pmax;
  for (size_t i = 0; i < n; ++i) {
    if (pattern[i] == pmax) ++ties;
    pmin = std::min(pmin, pattern[i]);
  }
  if (pmin == pmax) throw MeasurementError("beamwidth: flat pattern");
  if (ties > 1) throw MeasurementError("beamwidth: pattern maximum is not unique");

  double thr = pmax * std::pow(10.0, -std::fabs(level_db) / 10.0);
  auto interp = [&](size_t inside, size_t outside) {
    double p0 = pattern[inside], p1 = pattern[outside];
    double t = (thr - p0) / (p1 - p0);
    return u_grid[inside] + t * (u_grid[outside] - u_grid[inside]);
  };

  double left = 0.0, right = 0.0;
  bool found = false;
  for (size_t i = imax; i-- > 0;) {
    if (pattern[i] < thr) {
      left = interp(i + 1, i);
      found = true;
      break;
    }
  }
  if (!found) throw MeasurementError("beamwidth: no left -3 dB crossing");
  found = false;
  for (size_t i = imax + 1; i < n; ++i) {
    if (pattern[i] < thr) {
      right = interp(i - 1, i);
      found = true;
      break;
    }
  }
  if (!found) throw MeasurementError("beamwidth: no right -3 dB crossing");
  return right - left;
}

Tensor polar_to_cartesian(const Tensor& slice, const std::vector<double>& u_grid,
                          double range_bin_m, double sin_fov_half, const CartesianGrid& grid) {
  if (slice.rank() != 2 || slice.dim(0) != static_cast<int64_t>(u_grid.size()))
    throw ShapeError("polar_to_cartesian: slice must be (n_az, n_range)");
  if (grid.nx < 1 || grid.ny < 1 || grid.x_max <= grid.x_min || grid.y_max <= grid.y_min)
    throw ConfigError("polar_to_cartesian: empty grid");
  const int n_az = static_cast<int>(slice.dim(0));
  const int n_range = static_cast<int>(slice.dim(1));
  const double nan = std::nan("");

  Tensor img({grid.ny, grid.nx});
  double dx = (grid.x_max - grid.x_min) / grid.nx;
  double dy = (grid.y_max - grid.y_min) / grid.ny;
  for (int iy = 0; iy < grid.ny; ++iy) {
    double y = grid.y_min + (iy + 0.5) * dy;
    for (int ix = 0; ix < grid.nx; ++ix) {
      double x = grid.x_min + (ix + 0.5) * dx;
      double r = std::hypot(x, y);
      double out = nan;
      if (r > 0.0 && y >= 0.0) {
        double u = x / r;
        int rb = static_cast<int>(std::lround(r / range_bin_m));
        if (std::fabs(u) <= sin_fov_half && rb >= 0 && rb < n_range) {
          int ab = static_cast<int>(std::lround((u + 1.0) * n_az / 2.0));
          if (ab >= 0 && ab < n_az) out = slice.at(ab, rb);
        }
      }
      img.at(iy, ix) = out;
    }
  }
  return img;
}

}  // namespace r2s2
