#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "upstreak/analysis.hpp"
#include "upstreak/phasematching.hpp"

// File formats.
//  * CSV: header row, comma separators, LF endings, 17 significant digits.
//  * Images: binary PGM (magic "P5", maxval 65535, big-endian rows) with a
//    key-value sidecar "<image>.meta" carrying the calibration.
//  * Reports/sidecars: flat "key = value" text, '#' comments.

namespace upstreak {

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw FileFormatError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

inline void write_spectrum_csv(const std::string& path, const SpectralAmplitude& f) {
  auto out = detail::open_out(path);
  out << "index,omega_rad_ps,re,im\n";
  for (int i = 0; i < f.grid.count; ++i)
    out << i << ',' << detail::fmt_g17(f.grid.omega(i)) << ','
        << detail::fmt_g17(f.values[i].real()) << ',' << detail::fmt_g17(f.values[i].imag())
        << '\n';
}

inline void write_profile_csv(const std::string& path, const TemporalProfile& s) {
  auto out = detail::open_out(path);
  out << "index,t_ps,re,im\n";
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    out << i << ',' << detail::fmt_g17(s.time(static_cast<int>(i))) << ','
        << detail::fmt_g17(s.values[i].real()) << ',' << detail::fmt_g17(s.values[i].imag())
        << '\n';
}

inline void write_trace_csv(const std::string& path, const TemporalTrace& tr) {
  auto out = detail::open_out(path);
  out << "t_ps,counts,error\n";
  for (Eigen::Index i = 0; i < tr.t.size(); ++i)
    out << detail::fmt_g17(tr.t[i]) << ',' << detail::fmt_g17(tr.counts[i]) << ','
        << detail::fmt_g17(tr.errors.size() == tr.t.size() ? tr.errors[i] : 0.0) << '\n';
}

inline void write_map_csv(const std::string& path, const TransferMap& map) {
  auto out = detail::open_out(path);
  out << "omega_in_rad_ps,omega_out_rad_ps,re,im\n";
  for (int r = 0; r < map.grid_out.count; ++r)
    for (int c = 0; c < map.grid_in.count; ++c)
      out << detail::fmt_g17(map.grid_in.omega(c)) << ',' << detail::fmt_g17(map.grid_out.omega(r))
          << ',' << detail::fmt_g17(map.values(r, c).real()) << ','
          << detail::fmt_g17(map.values(r, c).imag()) << '\n';
}

// ---- key-value sidecars and reports ----

using KeyValueList = std::vector<std::pair<std::string, std::string>>;

inline void write_key_value(const std::string& path, const KeyValueList& kv,
                            const std::string& header = {}) {
  auto out = detail::open_out(path);
  if (!header.empty()) out << "# " << header << '\n';
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

inline KeyValueList read_key_value(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open '" + path + "'");
  KeyValueList kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (eq == std::string::npos) {
      if (!trim(line).empty())
        throw FileFormatError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw FileFormatError(path + ":" + std::to_string(line_no) + ": empty key");
    kv.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

inline const std::string& kv_get(const KeyValueList& kv, const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  throw FileFormatError("missing key '" + key + "'");
}

// ---- 16-bit portable graymap ----

/// Write a 2D array as binary PGM, maxval 65535, most significant byte first,
/// values scaled by 65535/peak (scale recorded in the sidecar by callers).
/// Returns the scale counts-per-ADU used.
inline double write_pgm16(const std::string& path, const Eigen::ArrayXXd& data) {
  const double peak = data.maxCoeff();
  const double scale = peak > 0.0 ? peak / 65535.0 : 1.0;
  auto out = detail::open_out(path, /*binary=*/true);
  out << "P5\n" << data.cols() << ' ' << data.rows() << "\n65535\n";
  std::vector<unsigned char> row(2 * data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      double v = data(r, c) / scale;
      v = std::min(65535.0, std::max(0.0, v));
      const auto q = static_cast<std::uint16_t>(std::lround(v));
      row[2 * c] = static_cast<unsigned char>(q >> 8);
      row[2 * c + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  return scale;
}

inline Eigen::ArrayXXd read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError("cannot open image '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FileFormatError(path + ": bad magic '" + magic + "' (want P5)");
  long cols = 0, rows = 0, maxval = 0;
  in >> cols >> rows >> maxval;
  if (!in || cols <= 0 || rows <= 0)
    throw FileFormatError(path + ": bad image dimensions");
  if (maxval != 65535) throw FileFormatError(path + ": expected 16-bit maxval 65535");
  in.get();  // single whitespace after header
  Eigen::ArrayXXd data(rows, cols);
  std::vector<unsigned char> row(2 * cols);
  for (long r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!in) throw FileFormatError(path + ": truncated pixel data");
    for (long c = 0; c < cols; ++c)
      data(r, c) = double((unsigned(row[2 * c]) << 8) | unsigned(row[2 * c + 1]));
  }
  return data;
}

/// StreakImage persistence: PGM plus "<path>.meta" sidecar carrying the
/// calibration and the quantization scale.
inline void save_streak_image(const std::string& path, const StreakImage& img,
                              const KeyValueList& extra_meta = {}) {
  const double scale = write_pgm16(path, img.counts);
  KeyValueList kv{
      {"rows", std::to_string(img.rows())},
      {"cols", std::to_string(img.cols())},
      {"time_per_pixel_ps", detail::fmt_g17(img.time_per_pixel_ps)},
      {"t_origin_ps", detail::fmt_g17(img.t_origin_ps)},
      {"counts_per_adu", detail::fmt_g17(scale)},
      {"seed", std::to_string(img.seed)},
  };
  kv.insert(kv.end(), extra_meta.begin(), extra_meta.end());
  write_key_value(path + ".meta", kv, "streak image calibration");
}

inline StreakImage load_streak_image(const std::string& path) {
  StreakImage img;
  img.counts = read_pgm16(path);
  const KeyValueList kv = read_key_value(path + ".meta");
  const long rows = std::stol(kv_get(kv, "rows"));
  const long cols = std::stol(kv_get(kv, "cols"));
  if (rows != img.counts.rows() || cols != img.counts.cols())
    throw FileFormatError(path + ": sidecar dimensions disagree with the image");
  img.time_per_pixel_ps = std::stod(kv_get(kv, "time_per_pixel_ps"));
  img.t_origin_ps = std::stod(kv_get(kv, "t_origin_ps"));
  img.counts *= std::stod(kv_get(kv, "counts_per_adu"));
  img.seed = std::stoull(kv_get(kv, "seed"));
  return img;
}

inline void write_image_csv(const std::string& path, const StreakImage& img) {
  auto out = detail::open_out(path);
  out << "row,col,t_ps,counts\n";
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c)
      out << r << ',' << c << ','
          << detail::fmt_g17(img.t_origin_ps + (r + 0.5) * img.time_per_pixel_ps) << ','
          << detail::fmt_g17(img.counts(r, c)) << '\n';
}

/// Transfer-map image: |G| normalized to peak, with an axes-calibration sidecar.
inline void save_transfer_map_image(const std::string& path, const TransferMap& map) {
  Eigen::ArrayXXd mag = map.values.abs();
  const double peak = mag.maxCoeff();
  if (peak > 0.0) mag /= peak;
  write_pgm16(path, mag);
  write_key_value(path + ".meta",
                  {
                      {"rows", std::to_string(map.grid_out.count)},
                      {"cols", std::to_string(map.grid_in.count)},
                      {"omega_in_center_rad_ps", detail::fmt_g17(map.grid_in.center_rad_ps)},
                      {"omega_in_spacing_rad_ps", detail::fmt_g17(map.grid_in.spacing_rad_ps)},
                      {"omega_out_center_rad_ps", detail::fmt_g17(map.grid_out.center_rad_ps)},
                      {"omega_out_spacing_rad_ps", detail::fmt_g17(map.grid_out.spacing_rad_ps)},
                      {"normalization", "magnitude/peak"},
                  },
                  "transfer map axes calibration");
}

}  // namespace upstreak
