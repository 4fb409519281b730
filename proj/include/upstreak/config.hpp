#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "upstreak/io.hpp"
#include "upstreak/upconversion.hpp"

namespace upstreak {

/// One simulation scenario: source, process, camera, analysis and budget
/// blocks, each key addressed as "section.key" in the config file.
struct ScenarioConfig {
  // source
  double source_center_um = 1.545;
  double source_bandwidth_um = 0.006;
  double pdc_pump_bandwidth_um = 0.003;
  double pdc_decorrelation_bandwidth_um = 0.003;
  double mean_photon_number = 0.2;
  double heralding_efficiency = 0.13;

  // grid
  int grid_count = 16384;
  double grid_time_window_ps = 256.0;

  // process
  std::string dispersion_file;  // resolved against the config file location
  std::string model_ordinary = "lithium_niobate_o";
  std::string model_extraordinary = "lithium_niobate_e";
  double index_offset_ordinary = 0.0;
  double index_offset_extraordinary = 0.0;
  double input_wavelength_um = 1.545;
  Axis input_axis = Axis::ordinary;
  double pump_wavelength_um = 0.854;
  Axis pump_axis = Axis::extraordinary;
  Axis output_axis = Axis::ordinary;
  double length_mm = 27.0;
  double delay_ps = 0.0;
  std::optional<double> poling_period_um;
  std::string profile_spec = "uniform";     // uniform | truncated:<mm> | steps:<z0,g0,z1,g1,...,zn>
  std::string pump_bandwidth_spec = "match";  // match | <um>

  // budget
  EfficiencyBudget budget;

  // camera
  StreakCameraModel camera;
  std::string qe_preset = "s1";  // s1 | green

  // analysis
  int roi_col_lo = 208;
  int roi_col_hi = 304;
  double bin_width_ps = 5.0;

  std::uint64_t seed = 12345;

  /// 'match' copies the input's angular-frequency bandwidth onto the pump
  /// (an overlap-maximizing shaper setting), converted to wavelength at the
  /// pump carrier.
  double pump_bandwidth_um() const {
    if (pump_bandwidth_spec == "match") {
      const double dw = bandwidth_to_angular(source_center_um, source_bandwidth_um);
      return bandwidth_to_wavelength(pump_wavelength_um, dw);
    }
    try {
      return std::stod(pump_bandwidth_spec);
    } catch (const std::exception&) {
      throw ConfigError("process.pump_bandwidth_um: expected 'match' or a number, got '" +
                        pump_bandwidth_spec + "'");
    }
  }
};

struct ConfigKeyDoc {
  const char* key;
  const char* units;
  const char* doc;
};

/// Documentation table behind `--help` and the README; one row per config key.
inline const std::vector<ConfigKeyDoc>& config_key_docs() {
  static const std::vector<ConfigKeyDoc> docs = {
      {"source.center_um", "um", "input photon central wavelength"},
      {"source.bandwidth_um", "um", "input photon intensity-FWHM bandwidth"},
      {"source.pdc_pump_bandwidth_um", "um", "down-conversion pump bandwidth (metadata)"},
      {"source.decorrelation_bandwidth_um", "um", "pump bandwidth giving a decorrelated pair state"},
      {"source.mean_photon_number", "1", "mean photons per pulse emitted by the source"},
      {"source.heralding_efficiency", "1", "probability a herald marks a usable photon"},
      {"grid.count", "1", "frequency samples, power of two"},
      {"grid.time_window_ps", "ps", "implied time window; spacing = 2*pi/window"},
      {"process.dispersion_file", "path", "dispersion coefficient file (relative to config)"},
      {"process.model_ordinary", "name", "dispersion model bound to the ordinary axis"},
      {"process.model_extraordinary", "name", "dispersion model bound to the extraordinary axis"},
      {"process.index_offset_ordinary", "1", "additive index offset, ordinary axis"},
      {"process.index_offset_extraordinary", "1", "additive index offset, extraordinary axis"},
      {"process.input_wavelength_um", "um", "input carrier wavelength"},
      {"process.input_axis", "enum", "ordinary | extraordinary"},
      {"process.pump_wavelength_um", "um", "pump carrier wavelength"},
      {"process.pump_axis", "enum", "ordinary | extraordinary"},
      {"process.output_axis", "enum", "ordinary | extraordinary"},
      {"process.length_mm", "mm", "crystal length"},
      {"process.delay_ps", "ps", "input-pump arrival-time delay tau"},
      {"process.poling_period_um", "um", "poling period; omit to solve for it"},
      {"process.profile", "spec", "uniform | truncated:<mm> | steps:<z0,g0,z1,g1,...,zn> (z mm)"},
      {"process.pump_bandwidth_um", "um|match",
       "sum-frequency pump bandwidth; 'match' copies the input's frequency bandwidth"},
      {"budget.internal_conversion", "1", "internal conversion efficiency"},
      {"budget.external_conversion", "1", "external conversion efficiency (with linear loss)"},
      {"budget.qe_ratio_out_vs_in", "1", "cathode QE ratio, output vs input wavelength"},
      {"camera.irf_fwhm_ps", "ps", "temporal instrument response FWHM"},
      {"camera.qe_preset", "enum", "s1 | green"},
      {"camera.sweep_window_ps", "ps", "time span mapped onto the row axis"},
      {"camera.t_origin_ps", "ps", "time of the first row edge"},
      {"camera.n_rows", "px", "time pixels"},
      {"camera.n_cols", "px", "spatial pixels"},
      {"camera.spatial_spot_sigma_px", "px", "Gaussian spot sigma on the spatial axis"},
      {"camera.mcp_gain", "1", "multi-channel-plate gain"},
      {"camera.mcp_gain_max", "1", "maximum MCP gain"},
      {"camera.cathode_noise_sigma", "counts", "cathode noise at full gain, per pixel per exposure"},
      {"camera.cathode_noise_threshold", "1", "gain fraction where cathode noise turns on"},
      {"camera.readout_noise_sigma", "counts", "readout noise per pixel per exposure"},
      {"camera.dark_rate_cps", "counts/s", "dark counts per pixel per second (before gain)"},
      {"camera.rep_rate_mhz", "MHz", "synchroscan repetition rate"},
      {"camera.exposure_s", "s", "single exposure time"},
      {"camera.n_exposures", "1", "analog-integrated exposures"},
      {"analysis.roi_col_lo", "px", "first ROI column (inclusive)"},
      {"analysis.roi_col_hi", "px", "last ROI column (exclusive)"},
      {"analysis.bin_width_ps", "ps", "error-bar bin width"},
      {"seed", "1", "pseudo-random seed for image synthesis"},
  };
  return docs;
}

namespace detail {

inline Axis parse_axis(const std::string& v, const std::string& key) {
  if (v == "ordinary") return Axis::ordinary;
  if (v == "extraordinary") return Axis::extraordinary;
  throw ConfigError(key + ": expected 'ordinary' or 'extraordinary', got '" + v + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long l = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return l;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

}  // namespace detail

/// Apply one "section.key = value" assignment. Unknown keys are errors.
inline void apply_config_entry(ScenarioConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::parse_axis;
  using detail::parse_double;
  using detail::parse_long;
  if (key == "source.center_um") cfg.source_center_um = parse_double(value, key);
  else if (key == "source.bandwidth_um") cfg.source_bandwidth_um = parse_double(value, key);
  else if (key == "source.pdc_pump_bandwidth_um") cfg.pdc_pump_bandwidth_um = parse_double(value, key);
  else if (key == "source.decorrelation_bandwidth_um")
    cfg.pdc_decorrelation_bandwidth_um = parse_double(value, key);
  else if (key == "source.mean_photon_number") cfg.mean_photon_number = parse_double(value, key);
  else if (key == "source.heralding_efficiency") cfg.heralding_efficiency = parse_double(value, key);
  else if (key == "grid.count") cfg.grid_count = static_cast<int>(parse_long(value, key));
  else if (key == "grid.time_window_ps") cfg.grid_time_window_ps = parse_double(value, key);
  else if (key == "process.dispersion_file") cfg.dispersion_file = value;
  else if (key == "process.model_ordinary") cfg.model_ordinary = value;
  else if (key == "process.model_extraordinary") cfg.model_extraordinary = value;
  else if (key == "process.index_offset_ordinary") cfg.index_offset_ordinary = parse_double(value, key);
  else if (key == "process.index_offset_extraordinary")
    cfg.index_offset_extraordinary = parse_double(value, key);
  else if (key == "process.input_wavelength_um") cfg.input_wavelength_um = parse_double(value, key);
  else if (key == "process.input_axis") cfg.input_axis = parse_axis(value, key);
  else if (key == "process.pump_wavelength_um") cfg.pump_wavelength_um = parse_double(value, key);
  else if (key == "process.pump_axis") cfg.pump_axis = parse_axis(value, key);
  else if (key == "process.output_axis") cfg.output_axis = parse_axis(value, key);
  else if (key == "process.length_mm") cfg.length_mm = parse_double(value, key);
  else if (key == "process.delay_ps") cfg.delay_ps = parse_double(value, key);
  else if (key == "process.poling_period_um") cfg.poling_period_um = parse_double(value, key);
  else if (key == "process.profile") cfg.profile_spec = value;
  else if (key == "process.pump_bandwidth_um") cfg.pump_bandwidth_spec = value;
  else if (key == "budget.internal_conversion") cfg.budget.internal_conversion = parse_double(value, key);
  else if (key == "budget.external_conversion") cfg.budget.external_conversion = parse_double(value, key);
  else if (key == "budget.qe_ratio_out_vs_in") cfg.budget.qe_ratio_out_vs_in = parse_double(value, key);
  else if (key == "camera.irf_fwhm_ps") cfg.camera.irf_fwhm_ps = parse_double(value, key);
  else if (key == "camera.qe_preset") {
    if (value == "s1") cfg.camera.qe = QeTable::s1();
    else if (value == "green") cfg.camera.qe = QeTable::green_optimized();
    else throw ConfigError("camera.qe_preset: expected 's1' or 'green', got '" + value + "'");
    cfg.qe_preset = value;
  } else if (key == "camera.sweep_window_ps") cfg.camera.sweep_window_ps = parse_double(value, key);
  else if (key == "camera.t_origin_ps") cfg.camera.t_origin_ps = parse_double(value, key);
  else if (key == "camera.n_rows") cfg.camera.n_rows = static_cast<int>(parse_long(value, key));
  else if (key == "camera.n_cols") cfg.camera.n_cols = static_cast<int>(parse_long(value, key));
  else if (key == "camera.spatial_spot_sigma_px")
    cfg.camera.spatial_spot_sigma_px = parse_double(value, key);
  else if (key == "camera.mcp_gain") cfg.camera.mcp_gain = parse_double(value, key);
  else if (key == "camera.mcp_gain_max") cfg.camera.mcp_gain_max = parse_double(value, key);
  else if (key == "camera.cathode_noise_sigma")
    cfg.camera.cathode_noise_sigma = parse_double(value, key);
  else if (key == "camera.cathode_noise_threshold")
    cfg.camera.cathode_noise_threshold = parse_double(value, key);
  else if (key == "camera.readout_noise_sigma")
    cfg.camera.readout_noise_sigma = parse_double(value, key);
  else if (key == "camera.dark_rate_cps") cfg.camera.dark_rate_cps = parse_double(value, key);
  else if (key == "camera.rep_rate_mhz") cfg.camera.rep_rate_mhz = parse_double(value, key);
  else if (key == "camera.exposure_s") cfg.camera.exposure_s = parse_double(value, key);
  else if (key == "camera.n_exposures") cfg.camera.n_exposures = static_cast<int>(parse_long(value, key));
  else if (key == "analysis.roi_col_lo") cfg.roi_col_lo = static_cast<int>(parse_long(value, key));
  else if (key == "analysis.roi_col_hi") cfg.roi_col_hi = static_cast<int>(parse_long(value, key));
  else if (key == "analysis.bin_width_ps") cfg.bin_width_ps = parse_double(value, key);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Parse a config file. Relative process.dispersion_file entries are resolved
/// against the config file's directory. Parse errors carry line numbers.
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (!trim(line).empty())
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    try {
      apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!cfg.dispersion_file.empty()) {
    std::filesystem::path p(cfg.dispersion_file);
    if (p.is_relative()) cfg.dispersion_file = (std::filesystem::path(path).parent_path() / p).string();
  }
  return cfg;
}

inline NonlinearityProfile parse_profile_spec(const std::string& spec, double length_mm) {
  if (spec == "uniform") return NonlinearityProfile::uniform();
  if (spec.rfind("truncated:", 0) == 0) {
    std::string v = spec.substr(10);
    if (!v.empty() && v.size() > 2 && v.substr(v.size() - 2) == "mm") v.resize(v.size() - 2);
    const double l = detail::parse_double(v, "process.profile truncated length");
    if (!(l > 0.0) || l > length_mm)
      throw ConfigError("process.profile: truncated length must lie in (0, L]");
    return NonlinearityProfile::truncated(l);
  }
  if (spec.rfind("steps:", 0) == 0) {
    // alternating break,amplitude list: z0,g0,z1,g1,...,zn  (n breaks bound n-1 segments)
    std::vector<double> vals;
    std::stringstream ss(spec.substr(6));
    std::string tok;
    while (std::getline(ss, tok, ','))
      vals.push_back(detail::parse_double(tok, "process.profile steps"));
    if (vals.size() < 3 || vals.size() % 2 == 0)
      throw ConfigError("process.profile: steps need z0,g0,z1,g1,...,zn");
    std::vector<double> z, g;
    for (std::size_t i = 0; i < vals.size(); ++i)
      (i % 2 == 0 ? z : g).push_back(vals[i]);
    return NonlinearityProfile::piecewise(std::move(z), std::move(g));
  }
  throw ConfigError("process.profile: unknown spec '" + spec + "'");
}

/// Assemble the physical Process from a scenario: bind dispersion models,
/// apply index offsets, parse the profile, and solve the poling period when
/// it is not pinned in the config.
inline Process build_process(const ScenarioConfig& cfg, const DispersionLibrary& lib) {
  Process p;
  p.input_wavelength_um = cfg.input_wavelength_um;
  p.input_axis = cfg.input_axis;
  p.pump_wavelength_um = cfg.pump_wavelength_um;
  p.pump_axis = cfg.pump_axis;
  p.output_axis = cfg.output_axis;
  p.model_ordinary = lib.at(cfg.model_ordinary);
  p.model_ordinary.index_offset = cfg.index_offset_ordinary;
  p.model_extraordinary = lib.at(cfg.model_extraordinary);
  p.model_extraordinary.index_offset = cfg.index_offset_extraordinary;
  p.length_mm = cfg.length_mm;
  p.delay_ps = cfg.delay_ps;
  p.profile = parse_profile_spec(cfg.profile_spec, cfg.length_mm);
  p.finalize();
  if (cfg.poling_period_um) {
    p.poling_period_um = cfg.poling_period_um;
  } else {
    const PolingSolution sol = solve_poling_period(p);
    p.poling_period_um = sol.period_um;
    p.grating_sign = sol.grating_sign;
  }
  return p;
}

/// Photons per pulse arriving at the cathode in the converted arm:
/// source mean photon number x heralding efficiency x external conversion.
inline double photons_per_pulse_at_camera(const ScenarioConfig& cfg) {
  return cfg.mean_photon_number * cfg.heralding_efficiency * cfg.budget.external_conversion;
}

}  // namespace upstreak
