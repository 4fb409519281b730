#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <sstream>

#include "upstreak/common.hpp"

namespace upstreak {

using Eigen::ArrayXcd;
using Eigen::ArrayXd;
using std::complex;

/// Uniform angular-frequency grid: omega_i = center + (i - count/2) * spacing.
/// count must be a power of two so the transforms stay radix friendly.
/// Implied time window T = 2*pi/spacing, time step dt = 2*pi/(spacing*count).
struct FrequencyGrid {
  double center_rad_ps = 0.0;
  double spacing_rad_ps = 0.0;
  int count = 0;

  FrequencyGrid() = default;
  FrequencyGrid(double center, double spacing, int n)
      : center_rad_ps(center), spacing_rad_ps(spacing), count(n) {
    if (!(spacing > 0.0)) throw ConfigError("FrequencyGrid: spacing must be > 0");
    if (n < 2 || (n & (n - 1)) != 0)
      throw ConfigError("FrequencyGrid: count must be a power of two >= 2");
  }

  double omega(int i) const { return center_rad_ps + (i - count / 2) * spacing_rad_ps; }
  double min_omega() const { return omega(0); }
  double max_omega() const { return omega(count - 1); }
  double time_window_ps() const { return 2.0 * kPi / spacing_rad_ps; }
  double time_step_ps() const { return 2.0 * kPi / (spacing_rad_ps * count); }

  bool commensurate_with(const FrequencyGrid& o) const {
    return std::abs(spacing_rad_ps - o.spacing_rad_ps) <=
           1e-12 * std::max(spacing_rad_ps, o.spacing_rad_ps);
  }
  ArrayXd omegas() const {
    ArrayXd w(count);
    for (int i = 0; i < count; ++i) w[i] = omega(i);
    return w;
  }
};

/// Complex spectral amplitude sampled on a FrequencyGrid.
/// Energy is the rectangle-rule integral of |F|^2 d omega.
struct SpectralAmplitude {
  FrequencyGrid grid;
  ArrayXcd values;

  double energy() const { return values.abs2().sum() * grid.spacing_rad_ps; }
  SpectralAmplitude& normalize() {
    const double e = energy();
    if (!(e > 0.0)) throw UnphysicalError("SpectralAmplitude: cannot normalize zero field");
    values /= std::sqrt(e);
    return *this;
  }
};

/// Complex temporal envelope relative to the grid's center frequency.
/// Samples at t_i = t0 + i*dt; energy is the rectangle-rule integral of |s|^2 dt.
struct TemporalProfile {
  double t0_ps = 0.0;
  double dt_ps = 0.0;
  ArrayXcd values;

  double time(int i) const { return t0_ps + i * dt_ps; }
  ArrayXd times() const {
    ArrayXd t(values.size());
    for (int i = 0; i < values.size(); ++i) t[i] = time(i);
    return t;
  }
  double energy() const { return values.abs2().sum() * dt_ps; }
  TemporalProfile& normalize() {
    const double e = energy();
    if (!(e > 0.0)) throw UnphysicalError("TemporalProfile: cannot normalize zero field");
    values /= std::sqrt(e);
    return *this;
  }
  ArrayXd intensity() const { return values.abs2(); }
};

namespace detail {

// swap halves; for even n fftshift and ifftshift coincide
inline ArrayXcd fftshift(const ArrayXcd& v) {
  const auto n = v.size();
  ArrayXcd out(n);
  out.head(n / 2) = v.tail(n / 2);
  out.tail(n / 2) = v.head(n / 2);
  return out;
}

inline Eigen::VectorXcd fft_forward(const Eigen::VectorXcd& in) {
  Eigen::FFT<double> fft;
  Eigen::VectorXcd out;
  fft.fwd(out, in);
  return out;  // sum_n x_n e^{-2pi i k n / N}
}

inline Eigen::VectorXcd fft_inverse_unscaled(const Eigen::VectorXcd& in) {
  Eigen::FFT<double> fft;
  Eigen::VectorXcd out;
  fft.inv(out, in);
  return out * static_cast<double>(in.size());  // sum_k X_k e^{+2pi i k n / N}
}

}  // namespace detail

/// Frequency -> time with the e^{+j omega t} convention:
///   s(t_n) = sqrt(d omega / (2 pi)) * sum_m F(omega_m) e^{+j (omega_m - center) t_n}
/// The scaling makes the transform pair preserve the measure-weighted energy
/// (sum |F|^2 d omega == sum |s|^2 dt) and round-trip exactly.
inline TemporalProfile to_time_domain(const SpectralAmplitude& f) {
  const int n = f.grid.count;
  if (f.values.size() != n) throw GridMismatchError("to_time_domain: value/grid size mismatch");
  const double dt = f.grid.time_step_ps();
  const double scale = std::sqrt(f.grid.spacing_rad_ps / dt) / std::sqrt(double(n));

  const ArrayXcd shifted = detail::fftshift(f.values);
  Eigen::VectorXcd tmp = detail::fft_inverse_unscaled(shifted.matrix());
  TemporalProfile s;
  s.dt_ps = dt;
  s.t0_ps = -(n / 2) * dt;
  s.values = detail::fftshift(tmp.array()) * scale;
  return s;
}

/// Inverse of to_time_domain onto the given grid (same count, matching dt).
inline SpectralAmplitude to_frequency_domain(const TemporalProfile& s, const FrequencyGrid& grid) {
  const int n = grid.count;
  if (s.values.size() != n) throw GridMismatchError("to_frequency_domain: size mismatch");
  if (std::abs(s.dt_ps - grid.time_step_ps()) > 1e-12 * grid.time_step_ps())
    throw GridMismatchError("to_frequency_domain: dt does not match grid");
  const double scale = std::sqrt(s.dt_ps / grid.spacing_rad_ps) / std::sqrt(double(n));

  const ArrayXcd shifted = detail::fftshift(s.values);
  Eigen::VectorXcd tmp = detail::fft_forward(shifted.matrix());
  SpectralAmplitude f;
  f.grid = grid;
  f.values = detail::fftshift(tmp.array()) * scale;
  return f;
}

/// Unit-energy Gaussian amplitude whose *intensity* FWHM in wavelength is
/// fwhm_um (converted at lambda0 via d omega = 2 pi c dlambda / lambda0^2).
/// Throws GridTooNarrowError when the +-3 sigma intensity support leaves the grid.
inline SpectralAmplitude gaussian_spectrum(const FrequencyGrid& grid, double lambda0_um,
                                           double fwhm_um) {
  if (!(fwhm_um > 0.0)) throw ConfigError("gaussian_spectrum: fwhm must be > 0");
  const double w0 = angular_frequency(lambda0_um);
  const double dw_fwhm = bandwidth_to_angular(lambda0_um, fwhm_um);
  const double sigma = dw_fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));  // intensity sigma
  if (w0 - 3.0 * sigma < grid.min_omega() || w0 + 3.0 * sigma > grid.max_omega()) {
    std::ostringstream os;
    os << "gaussian_spectrum: +-3 sigma support [" << w0 - 3 * sigma << ", " << w0 + 3 * sigma
       << "] rad/ps exceeds grid span [" << grid.min_omega() << ", " << grid.max_omega() << "]";
    throw GridTooNarrowError(os.str());
  }
  SpectralAmplitude f;
  f.grid = grid;
  f.values.resize(grid.count);
  for (int i = 0; i < grid.count; ++i) {
    const double d = grid.omega(i) - w0;
    f.values[i] = std::exp(-d * d / (4.0 * sigma * sigma));
  }
  f.normalize();
  return f;
}

/// Heralded-photon marginal of a spectrally decorrelated down-conversion
/// source: a transform-limited Gaussian at lambda0 with the signal bandwidth.
/// The pump bandwidth is carried as metadata; `decorrelated` records whether
/// it equals the decorrelation design value.
struct PdcMarginal {
  SpectralAmplitude amplitude;
  double signal_bandwidth_um = 0.0;
  double pump_bandwidth_um = 0.0;
  bool decorrelated = false;
};

inline PdcMarginal pdc_heralded_marginal(const FrequencyGrid& grid, double lambda0_um,
                                         double signal_fwhm_um, double pump_fwhm_um,
                                         double decorrelation_fwhm_um = 0.003) {
  PdcMarginal m;
  m.amplitude = gaussian_spectrum(grid, lambda0_um, signal_fwhm_um);
  m.signal_bandwidth_um = signal_fwhm_um;
  m.pump_bandwidth_um = pump_fwhm_um;
  m.decorrelated = std::abs(pump_fwhm_um - decorrelation_fwhm_um) <=
                   1e-9 * std::max(pump_fwhm_um, decorrelation_fwhm_um);
  return m;
}

/// Width between the outermost crossings of fraction * max, linear
/// interpolation between samples. x must be uniformly increasing.
/// Throws NoPeakError when the data is constant and AmbiguousPeakError when
/// the data never falls below the threshold inside the window.
inline double width_at_fraction(const ArrayXd& x, const ArrayXd& y, double fraction) {
  const auto n = y.size();
  if (n < 3 || x.size() != n) throw DimensionMismatchError("width: need >= 3 matched samples");
  Eigen::Index imax = 0;
  const double ymax = y.maxCoeff(&imax);
  const double ymin = y.minCoeff();
  if (!(ymax > ymin)) throw NoPeakError("width: constant data has no peak");
  const double level = fraction * ymax;
  if (y[0] >= level || y[n - 1] >= level)
    throw AmbiguousPeakError("width: data never falls below the threshold inside the window");

  Eigen::Index lo = 0;
  while (y[lo] < level) ++lo;  // first sample at/above the level
  Eigen::Index hi = n - 1;
  while (y[hi] < level) --hi;  // last sample at/above the level

  const double xl =
      x[lo - 1] + (level - y[lo - 1]) * (x[lo] - x[lo - 1]) / (y[lo] - y[lo - 1]);
  const double xr =
      x[hi] + (level - y[hi]) * (x[hi + 1] - x[hi]) / (y[hi + 1] - y[hi]);
  return xr - xl;
}

/// Full width at half maximum of sampled intensity data, outermost crossings.
inline double fwhm_of_samples(const ArrayXd& x, const ArrayXd& y) {
  return width_at_fraction(x, y, 0.5);
}

/// FWHM of |s(t)|^2 in ps.
inline double fwhm(const TemporalProfile& s) { return fwhm_of_samples(s.times(), s.intensity()); }

/// FWHM of |F(omega)|^2 in rad/ps.
inline double fwhm(const SpectralAmplitude& f) {
  return fwhm_of_samples(f.grid.omegas(), f.values.abs2());
}

/// Edge-to-edge duration of a top-hat-like envelope: the distance between
/// the edge-transition centers. For an erf-edged rect (coherent amplitude
/// smoothing) the amplitude half-maximum, i.e. the intensity quarter-maximum,
/// marks the edge centers, so this measures |alpha| L where the intensity
/// FWHM reads slightly short.
inline double tophat_edge_to_edge(const TemporalProfile& s) {
  return width_at_fraction(s.times(), s.intensity(), 0.25);
}

}  // namespace upstreak
