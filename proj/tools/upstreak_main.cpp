// Command-line front end: process design, conversion simulation, streak-image
// synthesis, image analysis, and the detection-efficiency budget.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "upstreak/upstreak.hpp"

namespace fs = std::filesystem;
using namespace upstreak;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required = true) {
  auto* c = cmd->add_option("--config", o.config_path, "scenario config file");
  if (config_required) c->required();
  cmd->add_option("--out", o.out_dir, "output directory (created if missing)");
  cmd->add_option("--set", o.overrides, "override a config key, e.g. --set process.length_mm=54")
      ->take_all();
  cmd->add_option("--seed", o.seed, "override the scenario seed");
}

ScenarioConfig load_scenario(const CommonOpts& o) {
  ScenarioConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  for (const auto& ov : o.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + ov + "'");
    apply_config_entry(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (cfg.dispersion_file.empty())
    throw ConfigError("process.dispersion_file is required (set it in the config)");
  fs::create_directories(o.out_dir);
  return cfg;
}

std::string out_path(const CommonOpts& o, const std::string& name) {
  return (fs::path(o.out_dir) / name).string();
}

std::string config_key_table() {
  std::string s = "Config keys (units in brackets):\n";
  for (const auto& d : config_key_docs()) {
    s += "  ";
    s += d.key;
    s += " [";
    s += d.units;
    s += "]  ";
    s += d.doc;
    s += "\n";
  }
  return s;
}

struct Scenario {
  ScenarioConfig cfg;
  DispersionLibrary lib;
  Process process;
  FrequencyGrid grid_in, grid_pump, grid_out;
  SpectralAmplitude f1, f2;
};

Scenario make_scenario(const CommonOpts& o) {
  Scenario s;
  s.cfg = load_scenario(o);
  s.lib = load_dispersion_file(s.cfg.dispersion_file);
  s.process = build_process(s.cfg, s.lib);
  const double dw = 2.0 * kPi / s.cfg.grid_time_window_ps;
  s.grid_in = FrequencyGrid(angular_frequency(s.cfg.input_wavelength_um), dw, s.cfg.grid_count);
  s.grid_pump = FrequencyGrid(angular_frequency(s.cfg.pump_wavelength_um), dw, s.cfg.grid_count);
  s.grid_out = FrequencyGrid(s.grid_in.center_rad_ps + s.grid_pump.center_rad_ps, dw,
                             s.cfg.grid_count);
  const PdcMarginal m =
      pdc_heralded_marginal(s.grid_in, s.cfg.source_center_um, s.cfg.source_bandwidth_um,
                            s.cfg.pdc_pump_bandwidth_um, s.cfg.pdc_decorrelation_bandwidth_um);
  s.f1 = m.amplitude;
  s.f2 = gaussian_spectrum(s.grid_pump, s.cfg.pump_wavelength_um, s.cfg.pump_bandwidth_um());
  return s;
}

int run_design(const CommonOpts& o) {
  Scenario s = make_scenario(o);
  const Process& p = s.process;

  const double residual = phase_mismatch(p, angular_frequency(p.input_wavelength_um),
                                         angular_frequency(p.pump_wavelength_um));
  const double alpha = gv_mismatch_alpha(p);
  const double angle = phasematching_angle_deg(p);
  const double comp = compression_factor(angle);
  const bool flat = std::abs(angle) < 0.05;
  const double improvement = detection_improvement(s.cfg.budget);

  // compact transfer map around the carriers for rendering
  const double span_in = 8.0 * bandwidth_to_angular(s.cfg.input_wavelength_um,
                                                    s.cfg.source_bandwidth_um);
  const int n_map = 256;
  const double dwm = span_in / n_map;
  FrequencyGrid gin(angular_frequency(p.input_wavelength_um), dwm, n_map);
  FrequencyGrid gout(angular_frequency(p.output_wavelength_um), dwm, n_map);
  FrequencyGrid gpump(angular_frequency(p.pump_wavelength_um), dwm, 1024);
  SpectralAmplitude pump = gaussian_spectrum(gpump, p.pump_wavelength_um, s.cfg.pump_bandwidth_um());
  const TransferMap map = joint_transfer_function(p, pump, gin, gout);
  write_map_csv(out_path(o, "transfer_map.csv"), map);
  save_transfer_map_image(out_path(o, "transfer_map.pgm"), map);

  KeyValueList kv{
      {"input_wavelength_um", detail::fmt_g9(p.input_wavelength_um)},
      {"input_axis", to_string(p.input_axis)},
      {"pump_wavelength_um", detail::fmt_g9(p.pump_wavelength_um)},
      {"pump_axis", to_string(p.pump_axis)},
      {"output_wavelength_um", detail::fmt_g9(p.output_wavelength_um)},
      {"output_axis", to_string(p.output_axis)},
      {"length_mm", detail::fmt_g9(p.length_mm)},
      {"poling_period_um", detail::fmt_g9(*p.poling_period_um)},
      {"grating_sign", std::to_string(p.grating_sign)},
      {"carrier_mismatch_rad_um", detail::fmt_g9(residual)},
      {"alpha_ps_mm", detail::fmt_g9(alpha)},
      {"expected_tophat_ps", detail::fmt_g9(std::abs(alpha) * p.length_mm)},
      {"phasematching_angle_deg", detail::fmt_g9(angle)},
      {"compression_factor", std::isinf(comp) ? "inf" : detail::fmt_g9(comp)},
      {"flat_phasematching", flat ? "true" : "false"},
      {"note", flat ? "flat contour: output decoupled from input (reshaping, not one-to-one mapping)"
                    : "angled contour: one-to-one input-output mapping"},
      {"detection_improvement", detail::fmt_g9(improvement)},
  };
  write_key_value(out_path(o, "design.report.txt"), kv, "process design");
  for (const auto& [k, v] : kv) std::cout << k << " = " << v << "\n";
  return 0;
}

int run_simulate(const CommonOpts& o) {
  Scenario s = make_scenario(o);
  const ConversionResult r = simulate_conversion(s.process, s.f1, s.f2, s.grid_out);
  const TemporalProfile s_conv = temporal_envelope_convolution(s.process, s.f1, s.f2, s.grid_out);

  const double rel_l2 =
      std::sqrt(((r.output_time.values - s_conv.values).abs2().sum() * r.output_time.dt_ps));
  const double alpha = gv_mismatch_alpha(s.process);

  write_spectrum_csv(out_path(o, "input_spectrum.csv"), s.f1);
  write_spectrum_csv(out_path(o, "pump_spectrum.csv"), s.f2);
  write_spectrum_csv(out_path(o, "output_spectrum.csv"), r.output_spectrum);
  write_profile_csv(out_path(o, "output_time.csv"), r.output_time);
  write_profile_csv(out_path(o, "output_time_convolution.csv"), s_conv);

  KeyValueList kv{
      {"fwhm_time_ps", detail::fmt_g9(r.fwhm_time_ps)},
      {"tophat_edge_to_edge_ps", detail::fmt_g9(r.tophat_edge_to_edge_ps)},
      {"fwhm_spectrum_nm", detail::fmt_g9(r.fwhm_spectrum_nm)},
      {"compression_achieved", detail::fmt_g9(r.compression_achieved)},
      {"raw_scale", detail::fmt_g9(r.raw_scale)},
      {"alpha_ps_mm", detail::fmt_g9(alpha)},
      {"expected_tophat_ps", detail::fmt_g9(std::abs(alpha) * s.process.length_mm)},
      {"path_equivalence_rel_l2", detail::fmt_g9(rel_l2)},
      {"detection_improvement", detail::fmt_g9(detection_improvement(s.cfg.budget))},
  };
  write_key_value(out_path(o, "simulate.report.txt"), kv, "conversion simulation");
  for (const auto& [k, v] : kv) std::cout << k << " = " << v << "\n";

  if (!(rel_l2 < 1e-6)) {
    std::cerr << "error: direct/convolution path equivalence failed (rel L2 = " << rel_l2
              << ")\n";
    return 3;
  }
  return 0;
}

int run_streak(const CommonOpts& o) {
  Scenario s = make_scenario(o);
  s.cfg.camera.validate();
  const TemporalProfile env = temporal_envelope_direct(s.process, s.f1, s.f2, s.grid_out);
  const IntensityProfile blurred = apply_irf(intensity_of(env), s.cfg.camera.irf_fwhm_ps);

  const double photons = photons_per_pulse_at_camera(s.cfg);
  const ArrayXd signal =
      expected_signal(blurred, s.cfg.camera, s.process.output_wavelength_um, photons);
  const StreakImage img = synthesize_image(signal, s.cfg.camera, s.cfg.seed);
  const StreakImage bg = synthesize_background(s.cfg.camera, s.cfg.seed + 1);

  save_streak_image(out_path(o, "streak_image.pgm"), img,
                    {{"kind", "signal"}, {"wavelength_um", detail::fmt_g9(s.process.output_wavelength_um)}});
  save_streak_image(out_path(o, "background.pgm"), bg, {{"kind", "background"}});

  KeyValueList kv{
      {"photons_per_pulse_at_camera", detail::fmt_g9(photons)},
      {"qe_at_output", detail::fmt_g9(s.cfg.camera.qe.at(s.process.output_wavelength_um))},
      {"expected_total_counts", detail::fmt_g9(signal.sum())},
      {"peak_expected_counts_per_row", detail::fmt_g9(signal.maxCoeff())},
      {"seed", std::to_string(s.cfg.seed)},
  };
  write_key_value(out_path(o, "streak.report.txt"), kv, "streak synthesis");
  for (const auto& [k, v] : kv) std::cout << k << " = " << v << "\n";
  return 0;
}

int run_analyze(const CommonOpts& o, const std::string& image_path, const std::string& bg_path) {
  Scenario s = make_scenario(o);
  const StreakImage img = load_streak_image(image_path);
  const StreakImage bg = load_streak_image(bg_path);
  const StreakImage diff = subtract_background(img, bg);
  TemporalTrace trace = integrate_roi(diff, s.cfg.roi_col_lo, s.cfg.roi_col_hi);
  trace = binned_errors(trace, s.cfg.bin_width_ps, diff.t_origin_ps);
  write_trace_csv(out_path(o, "trace.csv"), trace);

  const PulseFitResult gf = fit_gaussian(trace);
  const RectFitResult rf = fit_rect_gaussian(trace, s.cfg.camera.irf_fwhm_ps);
  const double alpha = std::abs(gv_mismatch_alpha(s.process));

  KeyValueList kv{
      {"gaussian_fit_fwhm_ps", detail::fmt_g9(gf.fwhm)},
      {"gaussian_fit_fwhm_uncertainty_ps", detail::fmt_g9(gf.fwhm_uncertainty)},
      {"gaussian_fit_center_ps", detail::fmt_g9(gf.center)},
      {"gaussian_fit_converged", gf.converged ? "true" : "false"},
      {"rect_fit_width_ps", detail::fmt_g9(rf.width)},
      {"rect_fit_width_uncertainty_ps", detail::fmt_g9(rf.width_uncertainty)},
      {"rect_fit_center_ps", detail::fmt_g9(rf.center)},
      {"rect_fit_converged", rf.converged ? "true" : "false"},
      {"alpha_ps_mm", detail::fmt_g9(alpha)},
  };

  // Gaussian-fit width inverted both raw and IRF-deconvolved; rect-fit width
  // is already an instrument-free duration.
  if (gf.fwhm > s.cfg.camera.irf_fwhm_ps) {
    const EffectiveLength el = effective_length(gf.fwhm, s.cfg.camera.irf_fwhm_ps, alpha);
    kv.emplace_back("effective_length_gaussian_raw_mm", detail::fmt_g9(el.raw_mm));
    kv.emplace_back("effective_length_gaussian_quadrature_mm", detail::fmt_g9(el.quadrature_mm));
  } else {
    kv.emplace_back("effective_length_gaussian_raw_mm", "unphysical");
    kv.emplace_back("effective_length_gaussian_quadrature_mm", "unphysical");
  }
  kv.emplace_back("effective_length_rect_fit_mm", detail::fmt_g9(rf.width / alpha));

  write_key_value(out_path(o, "analyze.report.txt"), kv, "trace analysis");
  for (const auto& [k, v] : kv) std::cout << k << " = " << v << "\n";
  return 0;
}

int run_budget(const CommonOpts& o) {
  ScenarioConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  for (const auto& ov : o.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + ov + "'");
    apply_config_entry(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  fs::create_directories(o.out_dir);

  const EfficiencyBudget& b = cfg.budget;
  const double improvement = detection_improvement(b);
  EfficiencyBudget green = b;
  green.qe_ratio_out_vs_in = b.qe_ratio_out_vs_in * 100.0;  // visible-optimized cathode
  const double improvement_green = detection_improvement(green);

  KeyValueList kv{
      {"internal_conversion", detail::fmt_g9(b.internal_conversion)},
      {"external_conversion", detail::fmt_g9(b.external_conversion)},
      {"qe_ratio_out_vs_in", detail::fmt_g9(b.qe_ratio_out_vs_in)},
      {"detection_improvement", detail::fmt_g9(improvement)},
      {"detection_improvement_rounded", "≈ " + std::to_string(std::lround(improvement / 10.0) * 10)},
      {"qe_ratio_green_optimized", detail::fmt_g9(green.qe_ratio_out_vs_in)},
      {"detection_improvement_green_optimized", detail::fmt_g9(improvement_green)},
  };
  write_key_value(out_path(o, "budget.report.txt"), kv, "detection-efficiency budget");
  for (const auto& [k, v] : kv) std::cout << k << " = " << v << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"upstreak: quasi-phase-matched up-conversion + streak-camera measurement toolkit"};
  app.require_subcommand(1);
  app.footer(config_key_table());

  CommonOpts design_o, sim_o, streak_o, analyze_o, budget_o;
  std::string image_path, bg_path;

  auto* design = app.add_subcommand("design",
                                    "solve the poling period and report the process geometry");
  add_common(design, design_o);
  auto* simulate = app.add_subcommand("simulate", "run both conversion paths, write spectra and profiles");
  add_common(simulate, sim_o);
  auto* streak = app.add_subcommand("streak", "synthesize streak-camera signal and background images");
  add_common(streak, streak_o);
  auto* analyze = app.add_subcommand("analyze", "background-subtract, integrate, fit, invert");
  add_common(analyze, analyze_o);
  analyze->add_option("image", image_path, "signal image (.pgm with .meta sidecar)")->required();
  analyze->add_option("background", bg_path, "background image")->required();
  auto* budget = app.add_subcommand("budget", "print the detection-efficiency arithmetic");
  add_common(budget, budget_o, /*config_required=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed()) return run_design(design_o);
    if (simulate->parsed()) return run_simulate(sim_o);
    if (streak->parsed()) return run_streak(streak_o);
    if (analyze->parsed()) return run_analyze(analyze_o, image_path, bg_path);
    if (budget->parsed()) return run_budget(budget_o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return 4;
  } catch (const PhysicsError& e) {
    std::cerr << "physics error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
