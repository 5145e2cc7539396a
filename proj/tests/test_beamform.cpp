// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>

#include "doctest.h"
#include "r2s2/beamform.hpp"
#include "r2s2/common.hpp"

using namespace r2s2;

namespace {

RdCube ones_cube(int nc) {
  RdCube rd(nc, 1, 1);
  for (auto& v : rd.v) v = 1.0;
  return rd;
}

std::vector<double> power_pattern(const BeamCube& bc) {
  std::vector<double> p(static_cast<size_t>(bc.n_az));
  for (int a = 0; a < bc.n_az; ++a) p[static_cast<size_t>(a)] = std::norm(bc.at(a, 0, 0));
  return p;
}

// Closed-form Dirichlet power pattern of an N-element half-wavelength ULA
// and its numeric half-power width (independent of the beamform() path).
double dirichlet_halfpower_width(int n) {
  auto norm_power = [n](double u) {
    double s = std::sin(M_PI * u / 2.0);
    if (std::fabs(s) < 1e-300) return 1.0;
    double t = std::sin(n * M_PI * u / 2.0) / (n * s);
    return t * t;
  };
  double lo = 0.0, hi = 2.0 / n;  // first null is at 2/N in u
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (norm_power(mid) > 0.5)
      lo = mid;
    else
      hi = mid;
  }
  return lo + hi;  // width = 2 * half-width
}

}  // namespace

TEST_CASE("beamform: broadside energy lands on the center bin") {
  BeamCube bc = beamform(ones_cube(16), 64);
  int best = 0;
  auto p = power_pattern(bc);
  for (int a = 1; a < 64; ++a)
    if (p[static_cast<size_t>(a)] > p[static_cast<size_t>(best)]) best = a;
  CHECK(best == 32);
  CHECK(bc.u_grid[32] == 0.0);
}

TEST_CASE("beamform: phase ramp steers to the matching u bin") {
  RdCube rd(16, 1, 1);
  for (int n = 0; n < 16; ++n) {
    double a = M_PI * n * 0.5;
    rd.at(n, 0, 0) = {std::cos(a), std::sin(a)};
  }
  BeamCube bc = beamform(rd, 64);
  auto p = power_pattern(bc);
  int best = 0;
  for (int a = 1; a < 64; ++a)
    if (p[static_cast<size_t>(a)] > p[static_cast<size_t>(best)]) best = a;
  CHECK(best == 48);
  CHECK(bc.u_grid[48] == doctest::Approx(0.5));
}

TEST_CASE("beamform: unitary zero-padded transform preserves energy") {
  Rng rng(31);
  RdCube rd(16, 8, 6);
  for (auto& v : rd.v) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  BeamCube bc = beamform(rd, 64);
  double e_rd = 0.0, e_bc = 0.0;
  for (const auto& v : rd.v) e_rd += std::norm(v);
  for (const auto& v : bc.v) e_bc += std::norm(v);
  CHECK(e_bc == doctest::Approx(e_rd).epsilon(1e-11));
}

TEST_CASE("beamform: integer-bin channel ramp circularly shifts the spectrum") {
  Rng rng(32);
  RdCube rd(16, 2, 3);
  for (auto& v : rd.v) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const int n_az = 64, shift = 5;
  RdCube ramped = rd;
  for (int n = 0; n < 16; ++n) {
    double a = 2.0 * M_PI * shift * n / n_az;
    cdouble w{std::cos(a), std::sin(a)};
    for (int r = 0; r < 2; ++r)
      for (int d = 0; d < 3; ++d) ramped.at(n, r, d) *= w;
  }
  BeamCube base = beamform(rd, n_az), steer = beamform(ramped, n_az);
  for (int a = 0; a < n_az; ++a)
    for (int r = 0; r < 2; ++r)
      for (int d = 0; d < 3; ++d)
        CHECK(std::abs(steer.at((a + shift) % n_az, r, d) - base.at(a, r, d)) < 1e-12);
}

TEST_CASE("beamform: configuration errors") {
  CHECK_THROWS_AS(beamform(ones_cube(16), 8), ConfigError);    // < n_channels
  CHECK_THROWS_AS(beamform(ones_cube(16), 48), ConfigError);   // not a power of two
}

TEST_CASE("nci sums per-channel power") {
  RdCube rd(16, 4, 4);
  rd.at(3, 1, 2) = {1.0, 0.0};
  Tensor m = nci(rd);
  CHECK(m.at(1, 2) == 1.0);
  double total = 0.0;
  for (double x : m.v) total += x;
  CHECK(total == 1.0);

  for (int c = 0; c < 16; ++c) rd.at(c, 2, 3) = {0.0, 2.0};
  m = nci(rd);
  CHECK(m.at(2, 3) == doctest::Approx(16.0 * 4.0));
}

TEST_CASE("beamwidth matches the Dirichlet oracle; 16:4 ratio is ~4") {
  // Fine grid so linear interpolation error is negligible.
  BeamCube b16 = beamform(ones_cube(16), 1024);
  BeamCube b4 = beamform(ones_cube(4), 1024);
  double w16 = beamwidth(power_pattern(b16), b16.u_grid);
  double w4 = beamwidth(power_pattern(b4), b4.u_grid);

  double oracle16 = dirichlet_halfpower_width(16);
  double oracle4 = dirichlet_halfpower_width(4);
  CHECK(w16 == doctest::Approx(oracle16).epsilon(1e-3));
  CHECK(w4 == doctest::Approx(oracle4).epsilon(1e-3));
  CHECK(w16 == doctest::Approx(0.111).epsilon(0.01));
  CHECK(w4 / w16 == doctest::Approx(4.0).epsilon(0.10));
}

TEST_CASE("beamwidth rejects degenerate patterns") {
  std::vector<double> flat(64, 1.0);
  std::vector<double> grid(64);
  for (int i = 0; i < 64; ++i) grid[static_cast<size_t>(i)] = 2.0 * (i - 32) / 64.0;
  CHECK_THROWS_AS(beamwidth(flat, grid), MeasurementError);
}

TEST_CASE("polar_to_cartesian geometry and FOV sentinel") {
  const int n_az = 64, n_range = 128;
  Tensor slice({n_az, n_range});
  // target at u = 0.5 (bin 48), r = 10 m (bin 20 at 0.5 m bins)
  slice.at(48, 20) = 7.0;

  CartesianGrid cell;
  cell.x_min = 4.5;
  cell.x_max = 5.5;
  cell.y_min = 10.0 * std::sqrt(1.0 - 0.25) - 0.5;
  cell.y_max = cell.y_min + 1.0;
  cell.nx = 1;
  cell.ny = 1;
  std::vector<double> grid(n_az);
  for (int i = 0; i < n_az; ++i) grid[static_cast<size_t>(i)] = 2.0 * (i - 32) / 64.0;
  Tensor img = polar_to_cartesian(slice, grid, 0.5, std::sin(50.0 * M_PI / 180.0), cell);
  CHECK(img.at(0, 0) == 7.0);

  // broadside target at r = 20 m maps near (0, 20)
  Tensor slice2({n_az, n_range});
  slice2.at(32, 40) = 3.0;
  CartesianGrid c2;
  c2.x_min = -0.5;
  c2.x_max = 0.5;
  c2.y_min = 19.5;
  c2.y_max = 20.5;
  c2.nx = 1;
  c2.ny = 1;
  CHECK(polar_to_cartesian(slice2, grid, 0.5, std::sin(50.0 * M_PI / 180.0), c2).at(0, 0) == 3.0);

  // outside the +-50 degree FOV everything is NaN
  CartesianGrid wide;
  wide.x_min = -60.0;
  wide.x_max = 60.0;
  wide.y_min = 0.0;
  wide.y_max = 60.0;
  wide.nx = 24;
  wide.ny = 12;
  Tensor img2 = polar_to_cartesian(slice, grid, 0.5, std::sin(50.0 * M_PI / 180.0), wide);
  double sfov = std::sin(50.0 * M_PI / 180.0);
  for (int iy = 0; iy < wide.ny; ++iy) {
    for (int ix = 0; ix < wide.nx; ++ix) {
      double y = wide.y_min + (iy + 0.5) * (wide.y_max - wide.y_min) / wide.ny;
      double x = wide.x_min + (ix + 0.5) * (wide.x_max - wide.x_min) / wide.nx;
      double r = std::hypot(x, y);
      if (r > 0 && std::fabs(x / r) > sfov + 1e-9) CHECK(std::isnan(img2.at(iy, ix)));
    }
  }

  CartesianGrid empty;
  empty.nx = 0;
  CHECK_THROWS_AS(polar_to_cartesian(slice, grid, 0.5, sfov, empty), ConfigError);
}
