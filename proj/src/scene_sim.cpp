// SPDX-License-Identifier: Apache-2.0

#include "r2s2/scene_sim.hpp"

#include <algorithm>
#include <cmath>

namespace r2s2 {

DerivedConstants derive_constants(const RadarParams& params, int n_az) {
  params.validate();
  if (n_az < params.n_channels) throw ConfigError("derive_constants: n_az < n_channels");
  DerivedConstants d;
  d.n_range_bins = params.n_samples / 2;
  d.range_bin_m = params.max_range_m / d.n_range_bins;
  d.doppler_bin_mps = 2.0 * params.max_velocity_mps / params.n_sweeps;
  d.sin_fov_half = std::sin(0.5 * params.fov_deg * M_PI / 180.0);
  d.u_grid.resize(static_cast<size_t>(n_az));
  for (int p = 0; p < n_az; ++p) d.u_grid[static_cast<size_t>(p)] = 2.0 * (p - n_az / 2) / n_az;
  return d;
}

void validate_target(const PointTarget& t, const RadarParams& params) {
  int nr = params.n_samples / 2;
  if (t.range_bin < 2.0 || t.range_bin > nr - 2.0)
    throw ConfigError("target range_bin outside [2, n_range_bins-2]");
  double dmax = params.n_sweeps / 2.0 - 1.0;
  if (t.doppler_bin < -dmax || t.doppler_bin > dmax)
    throw ConfigError("target doppler_bin outside [-n_sweeps/2+1, n_sweeps/2-1]");
  double smax = std::sin(0.5 * params.fov_deg * M_PI / 180.0);
  if (std::fabs(t.sin_azimuth) > smax + 1e-12)
    throw ConfigError("target sin_azimuth outside FOV");
  if (!(t.amplitude > 0.0)) throw ConfigError("target amplitude must be positive");
}

void SceneSpec::validate(const RadarParams& p) const {
  p.validate();
  if (n_targets_min < 0 || n_targets_max < n_targets_min)
    throw ConfigError("scene: bad n_targets interval");
  if (amplitude_min <= 0.0 || amplitude_max < amplitude_min)
    throw ConfigError("scene: bad amplitude interval");
  if (noise_sigma_min < 0.0 || noise_sigma_max < noise_sigma_min)
    throw ConfigError("scene: bad noise_sigma interval");
  double smax = std::sin(0.5 * p.fov_deg * M_PI / 180.0);
  double lo = sin_az_min <= -1.0 ? -smax : sin_az_min;
  double hi = sin_az_max >= 1.0 ? smax : sin_az_max;
  if (lo > hi || lo < -smax - 1e-12 || hi > smax + 1e-12)
    throw ConfigError("scene: bad sin_azimuth interval");
  int nrb = p.n_samples / 2;
  double rlo = range_bin_min < 0.0 ? 2.0 : range_bin_min;
  double rhi = range_bin_max < 0.0 ? nrb - 2.0 : range_bin_max;
  if (rlo > rhi || rlo < 2.0 || rhi > nrb - 2.0) throw ConfigError("scene: bad range interval");
  if (paired_fraction < 0.0 || paired_fraction > 1.0)
    throw ConfigError("scene: paired_fraction outside [0,1]");
  if (paired_fraction > 0.0 && (pair_du_min <= 0.0 || pair_du_max < pair_du_min))
    throw ConfigError("scene: bad pair separation interval");
}

namespace {

double draw_bin(Rng& rng, double lo, double hi, bool integer) {
  if (!integer) return rng.uniform(lo, hi);
  auto ilo = static_cast<int64_t>(std::ceil(lo));
  auto ihi = static_cast<int64_t>(std::floor(hi));
  return static_cast<double>(rng.uniform_int(ilo, ihi));
}

}  // namespace

Scene make_scene(const SceneSpec& spec, const RadarParams& params, uint64_t seed) {
  spec.validate(params);
  Rng rng(seed);
  Scene scene;
  scene.seed = seed;
  scene.noise_sigma = rng.uniform(spec.noise_sigma_min, spec.noise_sigma_max);

  double smax = std::sin(0.5 * params.fov_deg * M_PI / 180.0);
  double az_lo = spec.sin_az_min <= -1.0 ? -smax : spec.sin_az_min;
  double az_hi = spec.sin_az_max >= 1.0 ? smax : spec.sin_az_max;
  int nrb = params.n_samples / 2;
  double r_lo = spec.range_bin_min < 0.0 ? 2.0 : spec.range_bin_min;
  double r_hi = spec.range_bin_max < 0.0 ? nrb - 2.0 : spec.range_bin_max;
  double d_lim = params.n_sweeps / 2.0 - 1.0;

  bool paired = spec.paired_fraction > 0.0 && rng.uniform() < spec.paired_fraction;
  if (paired) {
    double du = rng.uniform(spec.pair_du_min, spec.pair_du_max);
    double c_lo = az_lo + 0.5 * du, c_hi = az_hi - 0.5 * du;
    if (c_lo > c_hi) throw ConfigError("scene: pair separation exceeds azimuth interval");
    double uc = rng.uniform(c_lo, c_hi);
    PointTarget base;
    base.range_bin = draw_bin(rng, r_lo, r_hi, spec.integer_bins);
    base.doppler_bin = draw_bin(rng, -d_lim, d_lim, spec.integer_bins);
    for (int s = 0; s < 2; ++s) {
      PointTarget t = base;
      t.sin_azimuth = uc + (s == 0 ? -0.5 : 0.5) * du;
      t.amplitude = rng.uniform(spec.amplitude_min, spec.amplitude_max);
      t.phase = rng.uniform(0.0, 2.0 * M_PI);
      validate_target(t, params);
      scene.targets.push_back(t);
    }
    return scene;
  }

  int n = static_cast<int>(rng.uniform_int(spec.n_targets_min, spec.n_targets_max));
  scene.targets.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    PointTarget t;
    t.range_bin = draw_bin(rng, r_lo, r_hi, spec.integer_bins);
    t.doppler_bin = draw_bin(rng, -d_lim, d_lim, spec.integer_bins);
    t.sin_azimuth = rng.uniform(az_lo, az_hi);
    t.amplitude = rng.uniform(spec.amplitude_min, spec.amplitude_max);
    t.phase = rng.uniform(0.0, 2.0 * M_PI);
    validate_target(t, params);
    scene.targets.push_back(t);
  }
  return scene;
}

RawCube synth_raw(const Scene& scene, const RadarParams& params) {
  params.validate();
  for (const auto& t : scene.targets) validate_target(t, params);

  const int NC = params.n_channels, NM = params.n_sweeps, NK = params.n_samples;
  RawCube raw(NC, NM, NK);

  // cos(a_k + b_m + c_n) expanded via per-axis phasors; one complex multiply
  // per sample instead of a cos() call.
  std::vector<cdouble> ek(static_cast<size_t>(NK)), em(static_cast<size_t>(NM)),
      en(static_cast<size_t>(NC));
  for (const auto& t : scene.targets) {
    for (int k = 0; k < NK; ++k) {
      double a = 2.0 * M_PI * t.range_bin * k / NK;
      ek[static_cast<size_t>(k)] = {std::cos(a), std::sin(a)};
    }
    for (int m = 0; m < NM; ++m) {
      double a = 2.0 * M_PI * t.doppler_bin * m / NM;
      em[static_cast<size_t>(m)] = {std::cos(a), std::sin(a)};
    }
    for (int n = 0; n < NC; ++n) {
      double a = M_PI * n * t.sin_azimuth + t.phase;
      en[static_cast<size_t>(n)] = {std::cos(a), std::sin(a)};
    }
    for (int n = 0; n < NC; ++n) {
      for (int m = 0; m < NM; ++m) {
        cdouble nm = en[static_cast<size_t>(n)] * em[static_cast<size_t>(m)];
        double* row = &raw.at(n, m, 0);
        const cdouble* e = ek.data();
        for (int k = 0; k < NK; ++k)
          row[k] += t.amplitude * (nm.real() * e[k].real() - nm.imag() * e[k].imag());
      }
    }
  }

  if (scene.noise_sigma > 0.0) {
    Rng rng(scene.seed ^ 0x9e3779b97f4a7c15ull);
    for (auto& x : raw.v) x += scene.noise_sigma * rng.gaussian();
  }
  return raw;
}

}  // namespace r2s2
