#pragma once

#include <cmath>
#include <complex>

#include "upstreak/fields.hpp"
#include "upstreak/phasematching.hpp"

namespace upstreak {

/// Conversion/detection bookkeeping. internal/external are fractions of
/// converted light (external folds in linear losses, so external <= internal);
/// qe_ratio_out_vs_in is the photocathode QE ratio between the output and
/// input wavelengths.
struct EfficiencyBudget {
  double internal_conversion = 0.615;
  double external_conversion = 0.271;
  double qe_ratio_out_vs_in = 1000.0;

  void validate() const {
    if (internal_conversion < 0.0 || internal_conversion > 1.0 || external_conversion < 0.0 ||
        external_conversion > 1.0)
      throw UnphysicalError("EfficiencyBudget: conversion fractions must lie in [0, 1]");
    if (external_conversion > internal_conversion + 1e-12)
      throw UnphysicalError("EfficiencyBudget: external conversion cannot exceed internal");
    if (!(qe_ratio_out_vs_in > 0.0))
      throw UnphysicalError("EfficiencyBudget: QE ratio must be > 0");
  }
};

/// Detection-efficiency gain of converting before the camera:
/// external conversion times the QE ratio between output and input wavelengths.
inline double detection_improvement(const EfficiencyBudget& b) {
  b.validate();
  return b.external_conversion * b.qe_ratio_out_vs_in;
}

namespace detail {

// zero-padded FFT linear convolution, output length na + nb - 1
inline ArrayXcd linear_convolve(const ArrayXcd& a, const ArrayXcd& b) {
  const auto na = a.size();
  const auto nb = b.size();
  long m = 1;
  while (m < na + nb - 1) m <<= 1;
  Eigen::VectorXcd pa = Eigen::VectorXcd::Zero(m);
  Eigen::VectorXcd pb = Eigen::VectorXcd::Zero(m);
  pa.head(na) = a.matrix();
  pb.head(nb) = b.matrix();
  Eigen::FFT<double> fft;
  Eigen::VectorXcd fa, fb, prod, conv;
  fft.fwd(fa, pa);
  fft.fwd(fb, pb);
  prod = fa.cwiseProduct(fb);
  fft.inv(conv, prod);
  return conv.head(na + nb - 1).array();
}

struct ConvolvedSpectra {
  ArrayXcd overlap;   // spectral convolution of F1 and the delayed pump, on grid_out
  ArrayXcd pm_factor; // phase-matching factor sampled over grid_out
};

inline ConvolvedSpectra eq_factors(const Process& p, const SpectralAmplitude& f1,
                                   const SpectralAmplitude& f2, const FrequencyGrid& grid_out) {
  if (!f1.grid.commensurate_with(f2.grid) || !f1.grid.commensurate_with(grid_out))
    throw GridMismatchError("upconversion: input, pump and output grids must share one spacing");
  if (f1.grid.count != f2.grid.count || f1.grid.count != grid_out.count)
    throw GridMismatchError("upconversion: grids must share one sample count");
  const int n = grid_out.count;
  const double dw = grid_out.spacing_rad_ps;

  // alignment of the output grid with the set of sum frequencies
  const double shift_f =
      (grid_out.center_rad_ps - f1.grid.center_rad_ps - f2.grid.center_rad_ps) / dw;
  const long shift = std::lround(shift_f);
  if (std::abs(shift_f - shift) > 1e-6)
    throw GridMismatchError("upconversion: output grid center does not land on sum-frequency samples");

  ArrayXcd pump_delayed(n);
  for (int i = 0; i < n; ++i) {
    const double w2 = f2.grid.omega(i);
    pump_delayed[i] = f2.values[i] * std::exp(std::complex<double>(0.0, -w2 * p.delay_ps));
  }
  const ArrayXcd conv = linear_convolve(f1.values, pump_delayed) * dw;

  ConvolvedSpectra out;
  out.overlap = ArrayXcd::Zero(n);
  for (int j = 0; j < n; ++j) {
    const long s = j + n / 2 + shift;
    if (s >= 0 && s < conv.size()) out.overlap[j] = conv[s];
  }

  const double dk0 = phase_mismatch(p, angular_frequency(p.input_wavelength_um),
                                    angular_frequency(p.pump_wavelength_um));
  const double alpha_ps_um = gv_mismatch_alpha(p) / 1000.0;
  const double w_out0 = angular_frequency(p.output_wavelength_um);
  out.pm_factor.resize(n);
  for (int j = 0; j < n; ++j) {
    const double detune = grid_out.omega(j) - w_out0;
    out.pm_factor[j] =
        phasematching_from_profile(p.profile, p.length_mm, dk0 + alpha_ps_um * detune);
  }
  return out;
}

}  // namespace detail

/// Output spectral amplitude
///   A(omega) = [conv of F1 and e^{-j omega2 tau} F2](omega)
///              * Phi(dk0 + alpha * (omega - omega_out0)),
/// normalized to unit energy. raw_scale (optional out) carries the physical
/// L^2-weighted energy of the unnormalized amplitude.
inline SpectralAmplitude output_spectral_amplitude(const Process& p, const SpectralAmplitude& f1,
                                                   const SpectralAmplitude& f2,
                                                   const FrequencyGrid& grid_out,
                                                   double* raw_scale = nullptr) {
  const auto factors = detail::eq_factors(p, f1, f2, grid_out);
  SpectralAmplitude a;
  a.grid = grid_out;
  a.values = factors.overlap * factors.pm_factor;
  if (raw_scale) {
    const double l_um = p.length_mm * 1000.0;
    *raw_scale = l_um * l_um * a.values.abs2().sum() * grid_out.spacing_rad_ps;
  }
  a.normalize();
  return a;
}

/// Direct evaluation: transform of the output spectral amplitude, unit energy.
inline TemporalProfile temporal_envelope_direct(const Process& p, const SpectralAmplitude& f1,
                                                const SpectralAmplitude& f2,
                                                const FrequencyGrid& grid_out) {
  TemporalProfile s = to_time_domain(output_spectral_amplitude(p, f1, f2, grid_out));
  s.normalize();
  return s;
}

/// Convolution-theorem evaluation: the spectral-overlap factor and the
/// phase-matching factor are transformed separately and convolved in time
/// (zero padded, so the convolution is linear). Must agree with the direct
/// path up to discretization error.
inline TemporalProfile temporal_envelope_convolution(const Process& p, const SpectralAmplitude& f1,
                                                     const SpectralAmplitude& f2,
                                                     const FrequencyGrid& grid_out) {
  const auto factors = detail::eq_factors(p, f1, f2, grid_out);
  const int n = grid_out.count;

  SpectralAmplitude overlap{grid_out, factors.overlap};
  SpectralAmplitude pm{grid_out, factors.pm_factor};
  const TemporalProfile c = to_time_domain(overlap);
  const TemporalProfile phi = to_time_domain(pm);

  const ArrayXcd conv = detail::linear_convolve(c.values, phi.values);
  TemporalProfile s;
  s.dt_ps = c.dt_ps;
  s.t0_ps = c.t0_ps;
  s.values.resize(n);
  // times add under convolution: sample s_idx = i + j corresponds to
  // t = (i + j - n) dt, so the centered window starts at s_idx = n/2
  for (int j = 0; j < n; ++j) s.values[j] = conv[j + n / 2];
  s.values *= c.dt_ps / std::sqrt(2.0 * kPi);
  s.normalize();
  return s;
}

/// Bundled conversion output with the headline numbers recomputable from the
/// stored arrays.
struct ConversionResult {
  SpectralAmplitude output_spectrum;
  TemporalProfile output_time;
  double fwhm_time_ps = 0.0;
  double tophat_edge_to_edge_ps = 0.0;
  double fwhm_spectrum_nm = 0.0;
  double compression_achieved = 0.0;
  double raw_scale = 0.0;
};

inline ConversionResult simulate_conversion(const Process& p, const SpectralAmplitude& f1,
                                            const SpectralAmplitude& f2,
                                            const FrequencyGrid& grid_out) {
  ConversionResult r;
  r.output_spectrum = output_spectral_amplitude(p, f1, f2, grid_out, &r.raw_scale);
  r.output_time = to_time_domain(r.output_spectrum);
  r.output_time.normalize();
  r.fwhm_time_ps = fwhm(r.output_time);
  r.tophat_edge_to_edge_ps = tophat_edge_to_edge(r.output_time);
  const double dw_out = fwhm(r.output_spectrum);
  r.fwhm_spectrum_nm = 1000.0 * bandwidth_to_wavelength(p.output_wavelength_um, dw_out);
  r.compression_achieved = fwhm(f1) / dw_out;
  return r;
}

}  // namespace upstreak
