#pragma once

#include <stdexcept>
#include <string>

// Unit system used throughout: wavelengths in um, time in ps, crystal
// coordinates in mm (um where noted), angular frequency in rad/ps,
// wavenumber in rad/um, inverse group velocity in ps/mm.

namespace upstreak {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSpeedOfLightUmPs = 299.792458;   // um/ps
inline constexpr double kSpeedOfLightMmPs = 0.299792458;  // mm/ps

/// 2*pi*c / lambda, rad/ps for lambda in um.
inline double angular_frequency(double lambda_um) {
  return 2.0 * kPi * kSpeedOfLightUmPs / lambda_um;
}

/// Inverse of angular_frequency.
inline double wavelength_um(double omega_rad_ps) {
  return 2.0 * kPi * kSpeedOfLightUmPs / omega_rad_ps;
}

/// |d omega| corresponding to a wavelength interval at lambda0: 2*pi*c*dl/l0^2.
inline double bandwidth_to_angular(double lambda0_um, double dlambda_um) {
  return 2.0 * kPi * kSpeedOfLightUmPs * dlambda_um / (lambda0_um * lambda0_um);
}

/// |d lambda| in um corresponding to an angular-frequency interval at lambda0.
inline double bandwidth_to_wavelength(double lambda0_um, double domega_rad_ps) {
  return lambda0_um * lambda0_um * domega_rad_ps / (2.0 * kPi * kSpeedOfLightUmPs);
}

// Error hierarchy. The three bases map onto CLI exit codes
// (config -> 2, physics -> 3, analysis -> 4).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct PhysicsError : Error {
  using Error::Error;
};
struct AnalysisError : Error {
  using Error::Error;
};

struct OutOfRangeError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct GridTooNarrowError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct GridMismatchError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct NoSolutionError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct MissingPolingPeriodError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct DegenerateSlopeError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct QuadratureUnderResolvedError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct UnphysicalError : PhysicsError {
  using PhysicsError::PhysicsError;
};
struct DimensionMismatchError : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct CalibrationMismatchError : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct BadRoiError : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct BinTooSmallError : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct NoPeakError : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct AmbiguousPeakError : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct FileFormatError : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace upstreak
