#pragma once

// Shared scenario builders for the test suites: the group-velocity-matched
// (flat) process on the shipped coefficient sets and the angled stand-in.

#include "upstreak/upstreak.hpp"

namespace testutil {

using namespace upstreak;

inline const char* data_file() { return UPSTREAK_DATA_DIR "/lithium_niobate.dsp"; }

inline Process flat_process(double length_mm = 27.0, double offset_e = 0.015248410917) {
  const DispersionLibrary lib = load_dispersion_file(data_file());
  Process p;
  p.input_wavelength_um = 1.545;
  p.input_axis = Axis::ordinary;
  p.pump_wavelength_um = 0.854;
  p.pump_axis = Axis::extraordinary;
  p.output_axis = Axis::ordinary;
  p.model_ordinary = lib.at("lithium_niobate_o");
  p.model_extraordinary = lib.at("lithium_niobate_e");
  p.model_extraordinary.index_offset = offset_e;
  p.length_mm = length_mm;
  p.finalize();
  const PolingSolution sol = solve_poling_period(p);
  p.poling_period_um = sol.period_um;
  p.grating_sign = sol.grating_sign;
  return p;
}

inline Process angled_process(double length_mm = 27.0) {
  const DispersionLibrary lib = load_dispersion_file(data_file());
  Process p;
  p.input_wavelength_um = 1.545;
  p.input_axis = Axis::extraordinary;
  p.pump_wavelength_um = 0.854;
  p.pump_axis = Axis::extraordinary;
  p.output_axis = Axis::extraordinary;
  p.model_ordinary = lib.at("angled_standin");
  p.model_extraordinary = lib.at("angled_standin");
  p.length_mm = length_mm;
  p.finalize();
  const PolingSolution sol = solve_poling_period(p);
  p.poling_period_um = sol.period_um;
  p.grating_sign = sol.grating_sign;
  return p;
}

struct FieldSet {
  FrequencyGrid grid_in, grid_pump, grid_out;
  SpectralAmplitude f1, f2;
};

/// Input photon + frequency-matched pump on commensurate grids.
inline FieldSet make_fields(const Process& p, int count = 16384, double window_ps = 256.0,
                            double input_bw_um = 0.006) {
  FieldSet fs;
  const double dw = 2.0 * kPi / window_ps;
  fs.grid_in = FrequencyGrid(angular_frequency(p.input_wavelength_um), dw, count);
  fs.grid_pump = FrequencyGrid(angular_frequency(p.pump_wavelength_um), dw, count);
  fs.grid_out =
      FrequencyGrid(fs.grid_in.center_rad_ps + fs.grid_pump.center_rad_ps, dw, count);
  fs.f1 = gaussian_spectrum(fs.grid_in, p.input_wavelength_um, input_bw_um);
  const double pump_bw =
      bandwidth_to_wavelength(p.pump_wavelength_um,
                              bandwidth_to_angular(p.input_wavelength_um, input_bw_um));
  fs.f2 = gaussian_spectrum(fs.grid_pump, p.pump_wavelength_um, pump_bw);
  return fs;
}

inline double rel_l2(const TemporalProfile& a, const TemporalProfile& b) {
  return std::sqrt((a.values - b.values).abs2().sum() * a.dt_ps);
}

}  // namespace testutil
