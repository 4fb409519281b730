#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "upstreak/dispersion.hpp"
#include "upstreak/fields.hpp"

namespace upstreak {

/// Normalized nonlinearity profile g(z) along the crystal, z in mm.
/// uniform            : g = 1 on [0, L]
/// piecewise_constant : z_mm holds m+1 breakpoints, g holds m segment values
/// tabulated          : g linear between (z_mm[i], g[i]) nodes, zero outside
struct NonlinearityProfile {
  enum class Kind { uniform, piecewise_constant, tabulated };
  Kind kind = Kind::uniform;
  std::vector<double> z_mm;
  std::vector<double> g;

  static NonlinearityProfile uniform() { return {}; }

  /// g = 1 on [0, l_eff], 0 on (l_eff, L]
  static NonlinearityProfile truncated(double l_eff_mm) {
    NonlinearityProfile p;
    p.kind = Kind::piecewise_constant;
    p.z_mm = {0.0, l_eff_mm};
    p.g = {1.0};
    return p;
  }

  static NonlinearityProfile piecewise(std::vector<double> breaks_mm,
                                       std::vector<double> amplitudes) {
    NonlinearityProfile p;
    p.kind = Kind::piecewise_constant;
    p.z_mm = std::move(breaks_mm);
    p.g = std::move(amplitudes);
    return p;
  }

  static NonlinearityProfile tabulated(std::vector<double> z_mm, std::vector<double> g) {
    NonlinearityProfile p;
    p.kind = Kind::tabulated;
    p.z_mm = std::move(z_mm);
    p.g = std::move(g);
    return p;
  }

  void validate(double length_mm) const {
    if (kind == Kind::uniform) return;
    if (z_mm.size() < 2) throw ConfigError("profile: need at least two breakpoints");
    if (!std::is_sorted(z_mm.begin(), z_mm.end()))
      throw ConfigError("profile: breakpoints must be increasing");
    if (z_mm.front() < -1e-12 || z_mm.back() > length_mm * (1.0 + 1e-12))
      throw ConfigError("profile: support must lie within [0, L]");
    const std::size_t want = kind == Kind::piecewise_constant ? z_mm.size() - 1 : z_mm.size();
    if (g.size() != want) throw ConfigError("profile: amplitude count does not match breakpoints");
    for (double v : g)
      if (!std::isfinite(v)) throw ConfigError("profile: amplitudes must be finite");
  }
};

/// Sum-frequency process description. Wavelengths in um, length in mm,
/// delay_ps is the input-pump arrival-time delay entering as e^{-j omega2 tau}.
/// The dispersion models are bound per polarization axis; `grating_sign`
/// selects the sign of the 2 pi / Lambda quasi-phase-matching term.
struct Process {
  double input_wavelength_um = 0.0;
  Axis input_axis = Axis::ordinary;
  double pump_wavelength_um = 0.0;
  Axis pump_axis = Axis::extraordinary;
  double output_wavelength_um = 0.0;  // 0 -> filled by finalize()
  Axis output_axis = Axis::ordinary;
  DispersionModel model_ordinary;
  DispersionModel model_extraordinary;
  double length_mm = 0.0;
  std::optional<double> poling_period_um;
  int grating_sign = +1;
  double delay_ps = 0.0;
  NonlinearityProfile profile;

  const DispersionModel& model_for(Axis a) const {
    switch (a) {
      case Axis::ordinary: return model_ordinary;
      case Axis::extraordinary: return model_extraordinary;
      default: throw ConfigError("process fields must be on the ordinary or extraordinary axis");
    }
  }

  void finalize() {
    if (!(input_wavelength_um > 0.0) || !(pump_wavelength_um > 0.0))
      throw ConfigError("process: input and pump wavelengths must be > 0");
    const double lam_out = 1.0 / (1.0 / input_wavelength_um + 1.0 / pump_wavelength_um);
    if (output_wavelength_um == 0.0) {
      output_wavelength_um = lam_out;
    } else if (std::abs(1.0 / output_wavelength_um -
                        (1.0 / input_wavelength_um + 1.0 / pump_wavelength_um)) *
                   output_wavelength_um > 1e-9) {
      throw ConfigError("process: output wavelength violates energy conservation");
    }
    if (!(length_mm > 0.0)) throw ConfigError("process: length must be > 0");
    if (poling_period_um && !(*poling_period_um > 0.0))
      throw ConfigError("process: poling period must be > 0");
    profile.validate(length_mm);
  }
};

/// Sum-frequency output wavelength from energy conservation, um.
inline double output_wavelength(double lambda_in_um, double lambda_pump_um) {
  return 1.0 / (1.0 / lambda_in_um + 1.0 / lambda_pump_um);
}

/// Inverse-group-velocity mismatch kdot_out - kdot_in, ps/mm.
inline double gv_mismatch_alpha(const Process& p) {
  return inverse_group_velocity(p.model_for(p.output_axis), p.output_wavelength_um) -
         inverse_group_velocity(p.model_for(p.input_axis), p.input_wavelength_um);
}

/// Delta k = k_pump + k_input - k_output + sign * 2 pi / Lambda at the given
/// absolute frequencies, rad/um. The output frequency is omega_in + omega_pump.
inline double phase_mismatch(const Process& p, double omega_in_rad_ps, double omega_pump_rad_ps) {
  if (!p.poling_period_um)
    throw MissingPolingPeriodError("phase_mismatch: poling period not set; solve it first");
  const double lam_in = wavelength_um(omega_in_rad_ps);
  const double lam_pump = wavelength_um(omega_pump_rad_ps);
  const double lam_out = wavelength_um(omega_in_rad_ps + omega_pump_rad_ps);
  const double k_in = wavenumber(p.model_for(p.input_axis), lam_in);
  const double k_pump = wavenumber(p.model_for(p.pump_axis), lam_pump);
  const double k_out = wavenumber(p.model_for(p.output_axis), lam_out);
  return k_pump + k_in - k_out + p.grating_sign * 2.0 * kPi / *p.poling_period_um;
}

struct PolingSolution {
  double period_um = 0.0;
  int grating_sign = +1;  // -1 means first-order QPM with a negative grating vector
};

/// First-order poling period cancelling the carrier mismatch:
/// 2 pi / Lambda = k_out - k_in - k_pump. Throws NoSolutionError when the
/// carrier mismatch already vanishes.
inline PolingSolution solve_poling_period(const Process& p) {
  const double k_in = wavenumber(p.model_for(p.input_axis), p.input_wavelength_um);
  const double k_pump = wavenumber(p.model_for(p.pump_axis), p.pump_wavelength_um);
  const double k_out = wavenumber(p.model_for(p.output_axis), p.output_wavelength_um);
  const double d = k_out - k_in - k_pump;
  if (std::abs(d) < 1e-12)
    throw NoSolutionError("solve_poling_period: k_out - k_in - k_pump vanishes; no grating needed");
  return {2.0 * kPi / std::abs(d), d > 0.0 ? +1 : -1};
}

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// exact integral of (a + b u) e^{i k u} du over u in [-h/2, h/2]
inline std::complex<double> linear_segment_integral(double a, double b, double k, double h) {
  const double x = 0.5 * k * h;
  const double even = h * sinc(x);  // integral of e^{iku}
  double odd;                       // integral of u e^{iku} / i = 2 (sin x - x cos x)/k^2
  if (std::abs(x) < 0.03) {
    // sin x - x cos x = (x^3/3)(1 - x^2/10 + x^4/280 - ...)
    const double x2 = x * x;
    odd = (k * h * h * h / 12.0) * (1.0 - x2 / 10.0 + x2 * x2 / 280.0);
  } else {
    odd = 2.0 * (std::sin(x) - x * std::cos(x)) / (k * k);
  }
  return {a * even, b * odd};
}

}  // namespace detail

/// Uniform-crystal phase-matching amplitude sinc(dk L/2) e^{j dk L/2},
/// normalized to 1 at dk = 0. dk in rad/um, L in mm.
inline std::complex<double> phasematching_amplitude(const Process& p, double dk_rad_um) {
  const double x = 0.5 * dk_rad_um * p.length_mm * 1000.0;
  return detail::sinc(x) * std::exp(std::complex<double>(0.0, x));
}

/// (1/L) integral of g(z) e^{j dk z} dz over [0, L], with g taken piecewise
/// (constant or linear between nodes) and each segment integrated in closed
/// form, so the result is exact to rounding for the declared profile.
inline std::complex<double> phasematching_from_profile(const NonlinearityProfile& profile,
                                                       double length_mm, double dk_rad_um) {
  const double L_um = length_mm * 1000.0;
  const double k = dk_rad_um;
  std::complex<double> acc{0.0, 0.0};

  auto add_segment = [&](double z1_um, double z2_um, double g1, double g2) {
    const double h = z2_um - z1_um;
    if (!(h > 0.0)) return;
    const double zm = 0.5 * (z1_um + z2_um);
    const double a = 0.5 * (g1 + g2);
    const double b = (g2 - g1) / h;
    acc += std::exp(std::complex<double>(0.0, k * zm)) *
           detail::linear_segment_integral(a, b, k, h);
  };

  switch (profile.kind) {
    case NonlinearityProfile::Kind::uniform:
      add_segment(0.0, L_um, 1.0, 1.0);
      break;
    case NonlinearityProfile::Kind::piecewise_constant:
      for (std::size_t i = 0; i + 1 < profile.z_mm.size(); ++i)
        add_segment(profile.z_mm[i] * 1000.0, profile.z_mm[i + 1] * 1000.0, profile.g[i],
                    profile.g[i]);
      break;
    case NonlinearityProfile::Kind::tabulated:
      for (std::size_t i = 0; i + 1 < profile.z_mm.size(); ++i)
        add_segment(profile.z_mm[i] * 1000.0, profile.z_mm[i + 1] * 1000.0, profile.g[i],
                    profile.g[i + 1]);
      break;
  }
  return acc / L_um;
}

/// Composite-trapezoid evaluation of the same integral, refined by panel
/// doubling until the phase advance per step is below max_phase_per_step and
/// successive refinements agree to rel_tol. Cross-check path; throws
/// QuadratureUnderResolvedError when the panel budget cannot satisfy the
/// phase criterion.
inline std::complex<double> phasematching_from_profile_quadrature(
    const NonlinearityProfile& profile, double length_mm, double dk_rad_um,
    double rel_tol = 1e-10, double max_phase_per_step = kPi / 4.0, int max_panels = 1 << 21) {
  const double L_um = length_mm * 1000.0;

  auto g_at = [&](double z_um) -> double {
    const double z_mm = z_um / 1000.0;
    switch (profile.kind) {
      case NonlinearityProfile::Kind::uniform:
        return 1.0;
      case NonlinearityProfile::Kind::piecewise_constant: {
        for (std::size_t i = 0; i + 1 < profile.z_mm.size(); ++i)
          if (z_mm >= profile.z_mm[i] && z_mm < profile.z_mm[i + 1]) return profile.g[i];
        return z_mm == profile.z_mm.back() && !profile.g.empty() ? profile.g.back() : 0.0;
      }
      case NonlinearityProfile::Kind::tabulated: {
        if (z_mm < profile.z_mm.front() || z_mm > profile.z_mm.back()) return 0.0;
        auto it = std::upper_bound(profile.z_mm.begin(), profile.z_mm.end(), z_mm);
        std::size_t i = std::min<std::size_t>(profile.z_mm.size() - 2,
                                              it == profile.z_mm.begin() ? 0 : it - profile.z_mm.begin() - 1);
        const double f = (z_mm - profile.z_mm[i]) / (profile.z_mm[i + 1] - profile.z_mm[i]);
        return profile.g[i] + f * (profile.g[i + 1] - profile.g[i]);
      }
    }
    return 0.0;
  };

  auto trapezoid = [&](int n) {
    const double h = L_um / n;
    std::complex<double> s = 0.5 * (g_at(0.0) + g_at(L_um) * std::exp(std::complex<double>(0.0, dk_rad_um * L_um)));
    for (int i = 1; i < n; ++i) {
      const double z = i * h;
      s += g_at(z) * std::exp(std::complex<double>(0.0, dk_rad_um * z));
    }
    return s * h / L_um;
  };

  int n = 64;
  while (std::abs(dk_rad_um) * (L_um / n) > max_phase_per_step) {
    n *= 2;
    if (n > max_panels)
      throw QuadratureUnderResolvedError(
          "phasematching quadrature: phase advance per step exceeds pi/4 at the panel budget");
  }
  std::complex<double> prev = trapezoid(n);
  while (true) {
    n *= 2;
    if (n > max_panels)
      throw QuadratureUnderResolvedError("phasematching quadrature: did not converge within budget");
    const std::complex<double> curr = trapezoid(n);
    // one Richardson step on the h^2 error term
    const std::complex<double> extrap = curr + (curr - prev) / 3.0;
    if (std::abs(curr - prev) <= rel_tol * std::max(1.0, std::abs(curr))) return extrap;
    prev = curr;
  }
}

/// Angle of the Delta k = 0 contour in the (omega_in, omega_out) plane,
/// measured from the omega_in axis, degrees:
///   slope = (kdot_pump - kdot_in) / (kdot_pump - kdot_out).
inline double phasematching_angle_deg(const Process& p) {
  const double kd_in = inverse_group_velocity(p.model_for(p.input_axis), p.input_wavelength_um);
  const double kd_pump = inverse_group_velocity(p.model_for(p.pump_axis), p.pump_wavelength_um);
  const double kd_out = inverse_group_velocity(p.model_for(p.output_axis), p.output_wavelength_um);
  const double den = kd_pump - kd_out;
  if (std::abs(den) < 1e-9 * std::max({std::abs(kd_pump), std::abs(kd_out), 1.0}))
    throw DegenerateSlopeError("phasematching_angle: pump and output group velocities coincide");
  return std::atan((kd_pump - kd_in) / den) * 180.0 / kPi;
}

/// Bandwidth compression factor 1/tan(theta) for the contour angle theta in
/// degrees; +infinity for the flat (theta = 0) case. The sign of theta is an
/// axis-orientation convention, so |theta| is used.
inline double compression_factor(double theta_deg) {
  const double t = std::abs(theta_deg);
  if (t >= 90.0) throw UnphysicalError("compression_factor: angle must satisfy |theta| < 90 deg");
  if (t == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::tan(t * kPi / 180.0);
}

/// Joint transfer map G(omega_in, omega_out) = F2(omega_out - omega_in) *
/// Phi(Delta k(omega_in, omega_out - omega_in)). values(r, c) is sampled at
/// (grid_in.omega(c), grid_out.omega(r)); the pump grid must share the
/// spacing of grid_in/grid_out so the difference lands on pump samples.
struct TransferMap {
  FrequencyGrid grid_in;
  FrequencyGrid grid_out;
  Eigen::ArrayXXcd values;  // n_out rows x n_in cols
};

inline TransferMap joint_transfer_function(const Process& p, const SpectralAmplitude& pump,
                                           const FrequencyGrid& grid_in,
                                           const FrequencyGrid& grid_out) {
  if (!grid_in.commensurate_with(grid_out) || !grid_in.commensurate_with(pump.grid))
    throw GridMismatchError("joint_transfer_function: grids must share one spacing");
  TransferMap map;
  map.grid_in = grid_in;
  map.grid_out = grid_out;
  map.values.resize(grid_out.count, grid_in.count);
  const double dw = grid_in.spacing_rad_ps;
  for (int r = 0; r < grid_out.count; ++r) {
    const double w_out = grid_out.omega(r);
    for (int c = 0; c < grid_in.count; ++c) {
      const double w_in = grid_in.omega(c);
      const double w_pump = w_out - w_in;
      const double idx_f = (w_pump - pump.grid.center_rad_ps) / dw + pump.grid.count / 2;
      const long idx = std::lround(idx_f);
      if (std::abs(idx_f - idx) > 1e-6)
        throw GridMismatchError("joint_transfer_function: pump grid not aligned with in/out grids");
      if (idx < 0 || idx >= pump.grid.count) {
        map.values(r, c) = 0.0;
        continue;
      }
      const double dk = phase_mismatch(p, w_in, w_pump);
      map.values(r, c) =
          pump.values[idx] * phasematching_from_profile(p.profile, p.length_mm, dk);
    }
  }
  return map;
}

}  // namespace upstreak
