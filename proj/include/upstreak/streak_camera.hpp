#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "upstreak/fields.hpp"

namespace upstreak {

/// Photocathode quantum efficiency vs wavelength, piecewise linear between
/// nodes (um, fraction). Evaluation outside the node span is an error.
struct QeTable {
  std::vector<std::pair<double, double>> nodes;  // (lambda_um, qe), sorted by lambda

  double at(double lambda_um) const {
    if (nodes.size() < 2) throw ConfigError("QeTable: need at least two nodes");
    if (lambda_um < nodes.front().first || lambda_um > nodes.back().first)
      throw OutOfRangeError("QeTable: wavelength outside table span");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      if (lambda_um <= nodes[i + 1].first) {
        const double f = (lambda_um - nodes[i].first) / (nodes[i + 1].first - nodes[i].first);
        return nodes[i].second + f * (nodes[i + 1].second - nodes[i].second);
      }
    }
    return nodes.back().second;
  }

  /// Infrared-sensitive cathode: low absolute QE, 1e3 ratio between 550 nm
  /// and 1550 nm.
  static QeTable s1() {
    return {{{0.40, 5e-5}, {0.55, 2e-5}, {0.90, 4e-6}, {1.20, 4e-7}, {1.55, 2e-8}, {1.80, 5e-9}}};
  }

  /// Visible-optimized cathode: two orders of magnitude more efficient at
  /// 550 nm, blind at telecom wavelengths.
  static QeTable green_optimized() {
    return {{{0.40, 4e-3}, {0.55, 2e-3}, {0.90, 2e-4}, {1.20, 0.0}, {1.55, 0.0}, {1.80, 0.0}}};
  }
};

/// Synchroscan streak camera model. The sweep maps [t_origin, t_origin +
/// sweep_window) onto n_rows time pixels; the horizontal axis is purely
/// spatial. Noise terms are per-pixel: Poisson counting on the gain-scaled
/// signal + dark mean, Gaussian readout of sigma readout_noise_sigma per
/// exposure, and a gain-dependent cathode term that turns on above
/// cathode_noise_threshold * mcp_gain_max and dominates at full gain.
struct StreakCameraModel {
  double irf_fwhm_ps = 5.0;
  QeTable qe = QeTable::s1();
  double sweep_window_ps = 160.0;
  double t_origin_ps = -80.0;
  int n_rows = 512;
  int n_cols = 512;
  double spatial_spot_sigma_px = 12.0;
  double mcp_gain = 40.0;
  double mcp_gain_max = 60.0;
  double cathode_noise_sigma = 25.0;
  double cathode_noise_threshold = 2.0 / 3.0;
  double readout_noise_sigma = 2.0;   // counts / pixel / exposure
  double dark_rate_cps = 0.02;        // counts / pixel / s before gain
  double rep_rate_mhz = 80.165;
  double exposure_s = 10.0;
  int n_exposures = 32;

  double time_per_pixel_ps() const { return sweep_window_ps / n_rows; }

  void validate() const {
    if (!(irf_fwhm_ps > 0.0)) throw ConfigError("camera: irf_fwhm must be > 0");
    if (n_rows < 2 || n_cols < 1) throw ConfigError("camera: image dimensions too small");
    if (!(sweep_window_ps > 0.0)) throw ConfigError("camera: sweep window must be > 0");
    if (!(mcp_gain > 0.0) || mcp_gain > mcp_gain_max)
      throw ConfigError("camera: mcp_gain must lie in (0, mcp_gain_max]");
    if (n_exposures < 1 || !(exposure_s > 0.0) || !(rep_rate_mhz > 0.0))
      throw ConfigError("camera: exposure settings must be positive");
    for (const auto& [lam, q] : qe.nodes)
      if (q < 0.0 || q > 1.0) throw ConfigError("camera: QE entries must lie in [0, 1]");
  }
};

/// Calibrated count image. counts(row, col); row r covers
/// [t_origin + r*dt_px, t_origin + (r+1)*dt_px).
struct StreakImage {
  Eigen::ArrayXXd counts;
  double time_per_pixel_ps = 0.0;
  double t_origin_ps = 0.0;
  std::uint64_t seed = 0;

  int rows() const { return static_cast<int>(counts.rows()); }
  int cols() const { return static_cast<int>(counts.cols()); }
};

/// Real, nonnegative temporal intensity samples: the instrument chain's
/// domain (the camera never sees field amplitudes).
struct IntensityProfile {
  double t0_ps = 0.0;
  double dt_ps = 0.0;
  ArrayXd values;

  double time(int i) const { return t0_ps + i * dt_ps; }
  ArrayXd times() const {
    ArrayXd t(values.size());
    for (int i = 0; i < values.size(); ++i) t[i] = time(i);
    return t;
  }
  double integral() const { return values.sum() * dt_ps; }
};

inline IntensityProfile intensity_of(const TemporalProfile& s) {
  return {s.t0_ps, s.dt_ps, s.intensity()};
}

inline double fwhm(const IntensityProfile& s) { return fwhm_of_samples(s.times(), s.values); }

/// Convolve an intensity profile with the unit-area Gaussian instrument
/// response of the given FWHM. Preserves the integrated intensity.
inline IntensityProfile apply_irf(const IntensityProfile& s, double irf_fwhm_ps) {
  if (!(irf_fwhm_ps > 0.0)) throw ConfigError("apply_irf: irf_fwhm must be > 0");
  const double sigma = irf_fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const int half = std::max(1, static_cast<int>(std::ceil(5.0 * sigma / s.dt_ps)));
  ArrayXd kernel(2 * half + 1);
  for (int i = -half; i <= half; ++i)
    kernel[i + half] = std::exp(-0.5 * (i * s.dt_ps) * (i * s.dt_ps) / (sigma * sigma));
  kernel /= kernel.sum();

  const auto n = s.values.size();
  IntensityProfile out;
  out.t0_ps = s.t0_ps;
  out.dt_ps = s.dt_ps;
  out.values = ArrayXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    const int jlo = static_cast<int>(std::max<Eigen::Index>(0, i - half));
    const int jhi = static_cast<int>(std::min<Eigen::Index>(n - 1, i + half));
    for (int j = jlo; j <= jhi; ++j) acc += s.values[j] * kernel[i - j + half];
    out.values[i] = acc;
  }
  return out;
}

/// Expected counts per time pixel for a temporal intensity profile:
/// fraction of photons landing in each pixel times photons_per_pulse, QE,
/// pulse count (rep rate x exposure x n_exposures) and MCP gain.
inline ArrayXd expected_signal(const IntensityProfile& intensity, const StreakCameraModel& m,
                               double lambda_um, double photons_per_pulse) {
  m.validate();
  const double qe = m.qe.at(lambda_um);
  const double pulses = m.rep_rate_mhz * 1e6 * m.exposure_s * m.n_exposures;
  const double scale = photons_per_pulse * qe * pulses * m.mcp_gain;

  const ArrayXd& I = intensity.values;
  const double total = I.sum();
  ArrayXd sig = ArrayXd::Zero(m.n_rows);
  if (!(total > 0.0)) return sig;

  const double dt_px = m.time_per_pixel_ps();
  for (Eigen::Index i = 0; i < I.size(); ++i) {
    const double t = intensity.time(static_cast<int>(i));
    const int r = static_cast<int>(std::floor((t - m.t_origin_ps) / dt_px));
    if (r >= 0 && r < m.n_rows) sig[r] += I[i];
  }
  return sig * (scale / total);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// per-pixel engine derived from (seed, pixel index): parallel generation
// would produce identical images in any schedule
inline std::mt19937_64 pixel_engine(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ (index + 1)));
}

}  // namespace detail

/// Deterministic image synthesis for a per-time-pixel expected signal.
/// The spatial profile is a Gaussian column spread; per-pixel counts are
/// Poisson(signal_px + gain-scaled dark) + readout and cathode Gaussians,
/// clamped at zero (negative values appear only after background subtraction).
inline StreakImage synthesize_image(const ArrayXd& signal, const StreakCameraModel& m,
                                    std::uint64_t seed) {
  m.validate();
  if (signal.size() != m.n_rows)
    throw DimensionMismatchError("synthesize_image: signal length must equal n_rows");

  ArrayXd spatial(m.n_cols);
  const double c0 = 0.5 * (m.n_cols - 1);
  for (int c = 0; c < m.n_cols; ++c) {
    const double d = (c - c0) / m.spatial_spot_sigma_px;
    spatial[c] = std::exp(-0.5 * d * d);
  }
  spatial /= spatial.sum();

  const double dark_mean =
      m.dark_rate_cps * m.exposure_s * m.n_exposures * m.mcp_gain;
  const double readout_sigma = m.readout_noise_sigma * std::sqrt(double(m.n_exposures));
  const double gain_excess =
      std::max(0.0, m.mcp_gain - m.cathode_noise_threshold * m.mcp_gain_max);
  const double cathode_sigma =
      m.mcp_gain_max > 0.0
          ? m.cathode_noise_sigma * std::sqrt(double(m.n_exposures)) * gain_excess /
                std::max(1e-12, m.mcp_gain_max * (1.0 - m.cathode_noise_threshold))
          : 0.0;
  const double gauss_sigma = std::hypot(readout_sigma, cathode_sigma);

  StreakImage img;
  img.counts.resize(m.n_rows, m.n_cols);
  img.time_per_pixel_ps = m.time_per_pixel_ps();
  img.t_origin_ps = m.t_origin_ps;
  img.seed = seed;

  for (int r = 0; r < m.n_rows; ++r) {
    for (int c = 0; c < m.n_cols; ++c) {
      auto eng = detail::pixel_engine(seed, std::uint64_t(r) * m.n_cols + c);
      const double mean = signal[r] * spatial[c] + dark_mean;
      double v = 0.0;
      if (mean > 0.0) {
        std::poisson_distribution<long> pois(mean);
        v = static_cast<double>(pois(eng));
      }
      if (gauss_sigma > 0.0) {
        std::normal_distribution<double> norm(0.0, gauss_sigma);
        v += norm(eng);
      }
      img.counts(r, c) = std::max(0.0, v);
    }
  }
  return img;
}

/// Background frame: same pipeline with the signal path blocked.
inline StreakImage synthesize_background(const StreakCameraModel& m, std::uint64_t seed) {
  return synthesize_image(ArrayXd::Zero(m.n_rows), m, seed);
}

}  // namespace upstreak
