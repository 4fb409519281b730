#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "upstreak/common.hpp"

namespace upstreak {

enum class Axis { ordinary, extraordinary, constant_index };

inline const char* to_string(Axis a) {
  switch (a) {
    case Axis::ordinary: return "ordinary";
    case Axis::extraordinary: return "extraordinary";
    default: return "constant";
  }
}

/// Refractive-index model for one polarization axis.
///
/// Two functional forms, selected by coefficient count:
///   1 coefficient  : n(lambda) = c0 (constant index)
///   6 coefficients : n^2(lambda) = 1 + sum_i A_i lambda^2 / (lambda^2 - B_i)
///                    with (A1,B1,A2,B2,A3,B3), lambda in um, B_i in um^2.
/// `index_offset` is an additive correction to n (e.g. a waveguide
/// contribution on top of a bulk coefficient set); it shifts the group
/// index by the same amount.
struct DispersionModel {
  std::string name;
  Axis axis = Axis::constant_index;
  std::vector<double> coefficients;
  double lambda_min_um = 0.0;
  double lambda_max_um = 0.0;
  double index_offset = 0.0;

  static DispersionModel constant(double n0, double lam_min = 0.1, double lam_max = 100.0,
                                  std::string name = "constant") {
    DispersionModel m;
    m.name = std::move(name);
    m.axis = Axis::constant_index;
    m.coefficients = {n0};
    m.lambda_min_um = lam_min;
    m.lambda_max_um = lam_max;
    return m;
  }

  bool is_constant() const { return coefficients.size() == 1; }
};

namespace detail {

inline void check_range(const DispersionModel& m, double lambda_um, bool open_interval) {
  const bool inside = open_interval
                          ? (lambda_um > m.lambda_min_um && lambda_um < m.lambda_max_um)
                          : (lambda_um >= m.lambda_min_um && lambda_um <= m.lambda_max_um);
  if (!inside) {
    std::ostringstream os;
    os << "wavelength " << lambda_um << " um outside validity range [" << m.lambda_min_um
       << ", " << m.lambda_max_um << "] of dispersion model '" << m.name << "'";
    throw OutOfRangeError(os.str());
  }
}

inline double sellmeier_n(const std::vector<double>& c, double lambda_um) {
  const double l2 = lambda_um * lambda_um;
  double n2 = 1.0;
  for (std::size_t i = 0; i + 1 < c.size(); i += 2) n2 += c[i] * l2 / (l2 - c[i + 1]);
  return std::sqrt(n2);
}

inline double sellmeier_dndl(const std::vector<double>& c, double lambda_um) {
  const double l2 = lambda_um * lambda_um;
  double dn2 = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); i += 2) {
    const double d = l2 - c[i + 1];
    dn2 += -2.0 * c[i] * c[i + 1] * lambda_um / (d * d);
  }
  return dn2 / (2.0 * sellmeier_n(c, lambda_um));
}

}  // namespace detail

/// n(lambda), dimensionless. Throws OutOfRangeError outside the validity range.
inline double refractive_index(const DispersionModel& m, double lambda_um) {
  detail::check_range(m, lambda_um, /*open_interval=*/false);
  if (m.is_constant()) return m.coefficients[0] + m.index_offset;
  if (m.coefficients.size() != 6)
    throw ConfigError("dispersion model '" + m.name + "' must have 1 or 6 coefficients");
  return detail::sellmeier_n(m.coefficients, lambda_um) + m.index_offset;
}

/// k = 2*pi*n(lambda)/lambda, rad/um.
inline double wavenumber(const DispersionModel& m, double lambda_um) {
  return 2.0 * kPi * refractive_index(m, lambda_um) / lambda_um;
}

/// Group index n_g = n - lambda dn/dlambda (analytic for both shipped forms).
inline double group_index(const DispersionModel& m, double lambda_um) {
  detail::check_range(m, lambda_um, /*open_interval=*/true);
  if (m.is_constant()) return m.coefficients[0] + m.index_offset;
  return detail::sellmeier_n(m.coefficients, lambda_um) + m.index_offset -
         lambda_um * detail::sellmeier_dndl(m.coefficients, lambda_um);
}

/// dk/domega at the carrier corresponding to lambda, in ps/mm.
/// Evaluated analytically (both shipped forms have closed-form derivatives);
/// see inverse_group_velocity_fd for the finite-difference alternative.
inline double inverse_group_velocity(const DispersionModel& m, double lambda_um) {
  return group_index(m, lambda_um) / kSpeedOfLightMmPs;
}

/// Central-difference dk/domega with step dlambda (default 1e-4 um), ps/mm.
/// Kept as a cross-check for models without analytic derivatives.
inline double inverse_group_velocity_fd(const DispersionModel& m, double lambda_um,
                                        double step_um = 1e-4) {
  const double lp = lambda_um + step_um;
  const double lm = lambda_um - step_um;
  detail::check_range(m, lp, false);
  detail::check_range(m, lm, false);
  const double wp = angular_frequency(lp);
  const double wm = angular_frequency(lm);
  const double kp = wavenumber(m, lp);
  const double km = wavenumber(m, lm);
  return 1000.0 * (kp - km) / (wp - wm);  // rad/um / (rad/ps) = ps/um -> ps/mm
}

/// Named collection of dispersion models parsed from a coefficient file.
struct DispersionLibrary {
  std::map<std::string, DispersionModel> models;

  const DispersionModel& at(const std::string& name) const {
    auto it = models.find(name);
    if (it == models.end())
      throw ConfigError("dispersion model '" + name + "' not found in library");
    return it->second;
  }
};

// File grammar (one model per block, keys in any order inside a block):
//   model        = <name>
//   axis         = ordinary | extraordinary | constant
//   coefficients = <comma-separated decimals>   (1 or 6 values)
//   range_um     = <lambda_min>, <lambda_max>
// '#' starts a comment; blank lines are ignored.
inline DispersionLibrary load_dispersion_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open dispersion file '" + path + "'");

  DispersionLibrary lib;
  DispersionModel cur;
  bool have_model = false;
  int line_no = 0;

  auto fail = [&](const std::string& msg) {
    throw FileFormatError(path + ":" + std::to_string(line_no) + ": " + msg);
  };
  auto finish = [&]() {
    if (!have_model) return;
    if (cur.coefficients.empty()) fail("model '" + cur.name + "' has no coefficients");
    if (cur.coefficients.size() != 1 && cur.coefficients.size() != 6)
      fail("model '" + cur.name + "' must have 1 or 6 coefficients");
    if (!(cur.lambda_max_um > cur.lambda_min_um) || cur.lambda_min_um <= 0.0)
      fail("model '" + cur.name + "' has an invalid range_um");
    // physical sanity: n > 1 across the validity range
    for (int i = 0; i <= 64; ++i) {
      const double lam =
          cur.lambda_min_um + (cur.lambda_max_um - cur.lambda_min_um) * i / 64.0;
      const double n = cur.is_constant() ? cur.coefficients[0]
                                         : detail::sellmeier_n(cur.coefficients, lam);
      if (!(n > 1.0) || !std::isfinite(n))
        fail("model '" + cur.name + "' has n <= 1 at " + std::to_string(lam) + " um");
    }
    lib.models[cur.name] = cur;
    cur = DispersionModel{};
    have_model = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::string key, value;
    {
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos)
          fail("expected 'key = value'");
        continue;
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      key = trim(line.substr(0, eq));
      value = trim(line.substr(eq + 1));
    }
    if (key == "model") {
      finish();
      if (value.empty()) fail("empty model name");
      cur.name = value;
      have_model = true;
    } else if (!have_model) {
      fail("key '" + key + "' before any 'model ='");
    } else if (key == "axis") {
      if (value == "ordinary") cur.axis = Axis::ordinary;
      else if (value == "extraordinary") cur.axis = Axis::extraordinary;
      else if (value == "constant") cur.axis = Axis::constant_index;
      else fail("unknown axis '" + value + "'");
    } else if (key == "coefficients") {
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        try {
          std::size_t used = 0;
          cur.coefficients.push_back(std::stod(tok, &used));
        } catch (const std::exception&) {
          fail("bad coefficient '" + tok + "'");
        }
      }
    } else if (key == "range_um") {
      std::stringstream ss(value);
      char comma = 0;
      if (!(ss >> cur.lambda_min_um >> comma >> cur.lambda_max_um) || comma != ',')
        fail("range_um must be '<min>, <max>'");
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  finish();
  if (lib.models.empty()) throw FileFormatError(path + ": no models defined");
  return lib;
}

}  // namespace upstreak
