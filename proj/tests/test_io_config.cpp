#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "upstreak/upstreak.hpp"

using namespace upstreak;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("upstreak_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("streak image round trip through pgm + sidecar") {
  TempDir tmp;
  StreakCameraModel m;
  m.n_rows = 64;
  m.n_cols = 48;
  m.exposure_s = 1.0;
  m.n_exposures = 4;
  m.mcp_gain = 3.0;
  m.mcp_gain_max = 6.0;
  m.dark_rate_cps = 5.0;
  ArrayXd sig = ArrayXd::Zero(64);
  sig.segment(20, 12).setConstant(700.0);
  const StreakImage img = synthesize_image(sig, m, 77);

  const std::string path = tmp.file("img.pgm");
  save_streak_image(path, img);
  const StreakImage back = load_streak_image(path);

  REQUIRE(back.rows() == img.rows());
  REQUIRE(back.cols() == img.cols());
  CHECK(back.seed == 77);
  CHECK_THAT(back.time_per_pixel_ps, Catch::Matchers::WithinRel(img.time_per_pixel_ps, 1e-12));
  // 16-bit quantization: worst-case error is half a step of peak/65535
  const double step = img.counts.maxCoeff() / 65535.0;
  CHECK((back.counts - img.counts).abs().maxCoeff() <= 0.5 * step * (1.0 + 1e-12));
}

TEST_CASE("pgm loader rejects malformed files") {
  TempDir tmp;
  const std::string path = tmp.file("bad.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P2\n4 4\n65535\n";
  }
  CHECK_THROWS_AS(read_pgm16(path), FileFormatError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n4 4\n255\n";
  }
  CHECK_THROWS_AS(read_pgm16(path), FileFormatError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n4 4\n65535\n";
    out.put(0);  // truncated body
  }
  CHECK_THROWS_AS(read_pgm16(path), FileFormatError);
  CHECK_THROWS_AS(load_streak_image(tmp.file("missing.pgm")), FileFormatError);
}

TEST_CASE("key-value files: round trip and line-numbered errors") {
  TempDir tmp;
  const std::string path = tmp.file("report.txt");
  write_key_value(path, {{"alpha", "0.97"}, {"note", "flat"}}, "header");
  const KeyValueList kv = read_key_value(path);
  CHECK(kv_get(kv, "alpha") == "0.97");
  CHECK(kv_get(kv, "note") == "flat");
  CHECK_THROWS_AS(kv_get(kv, "absent"), FileFormatError);

  {
    std::ofstream out(path);
    out << "fine = 1\n";
    out << "this line has no equals sign\n";
  }
  try {
    read_key_value(path);
    FAIL("expected FileFormatError");
  } catch (const FileFormatError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("csv writers produce full-precision parseable output") {
  TempDir tmp;
  const FrequencyGrid g(1219.0, 0.1, 16);
  SpectralAmplitude f;
  f.grid = g;
  f.values.resize(16);
  std::mt19937 eng(5);
  std::normal_distribution<double> d;
  for (int i = 0; i < 16; ++i) f.values[i] = std::complex<double>(d(eng), d(eng));

  const std::string path = tmp.file("spec.csv");
  write_spectrum_csv(path, f);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,omega_rad_ps,re,im");
  int idx;
  char c1, c2, c3;
  double w, re, im;
  int rows = 0;
  while (in >> idx >> c1 >> w >> c2 >> re >> c3 >> im) {
    CHECK_THAT(w, Catch::Matchers::WithinRel(g.omega(idx), 1e-15));
    CHECK_THAT(re, Catch::Matchers::WithinRel(f.values[idx].real(), 1e-15));
    CHECK_THAT(im, Catch::Matchers::WithinRel(f.values[idx].imag(), 1e-15));
    ++rows;
  }
  CHECK(rows == 16);
}

TEST_CASE("config parsing") {
  TempDir tmp;
  const std::string path = tmp.file("scenario.cfg");
  {
    std::ofstream out(path);
    out << "# comment\n";
    out << "source.bandwidth_um = 0.004\n";
    out << "process.length_mm = 31.5\n";
    out << "process.dispersion_file = models.dsp\n";
    out << "camera.n_exposures = 16\n";
    out << "seed = 99\n";
  }
  const ScenarioConfig cfg = load_config(path);
  CHECK(cfg.source_bandwidth_um == 0.004);
  CHECK(cfg.length_mm == 31.5);
  CHECK(cfg.camera.n_exposures == 16);
  CHECK(cfg.seed == 99);
  // relative dispersion paths resolve against the config location
  CHECK(fs::path(cfg.dispersion_file).parent_path() == tmp.path);

  SECTION("unknown keys and bad values carry line numbers") {
    {
      std::ofstream out(path);
      out << "source.bandwidth_um = 0.004\n";
      out << "process.lenght_mm = 31.5\n";  // typo
    }
    try {
      load_config(path);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(":2:") != std::string::npos);
      CHECK(msg.find("lenght") != std::string::npos);
    }
    {
      std::ofstream out(path);
      out << "process.length_mm = long\n";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);
  }
}

TEST_CASE("profile specs") {
  CHECK(parse_profile_spec("uniform", 27.0).kind == NonlinearityProfile::Kind::uniform);

  const auto trunc = parse_profile_spec("truncated:23mm", 27.0);
  CHECK(trunc.kind == NonlinearityProfile::Kind::piecewise_constant);
  CHECK(trunc.z_mm == std::vector<double>{0.0, 23.0});

  const auto steps = parse_profile_spec("steps:0,0.4,9,1.0,18,0.4,27", 27.0);
  CHECK(steps.z_mm.size() == 4);
  CHECK(steps.g.size() == 3);

  CHECK_THROWS_AS(parse_profile_spec("truncated:30mm", 27.0), ConfigError);
  CHECK_THROWS_AS(parse_profile_spec("steps:0,1.0", 27.0), ConfigError);
  CHECK_THROWS_AS(parse_profile_spec("wedge", 27.0), ConfigError);
}

TEST_CASE("shipped presets build into solvable processes") {
  for (const char* name : {"qpg_flat.cfg", "sfg_angled.cfg"}) {
    const ScenarioConfig cfg = load_config(std::string(UPSTREAK_CONFIG_DIR) + "/" + name);
    const DispersionLibrary lib = load_dispersion_file(cfg.dispersion_file);
    const Process p = build_process(cfg, lib);
    REQUIRE(p.poling_period_um.has_value());
    CHECK(*p.poling_period_um > 1.0);
    CHECK(*p.poling_period_um < 10.0);
    CHECK_THAT(p.output_wavelength_um, Catch::Matchers::WithinAbs(0.55, 1e-4));
    cfg.camera.validate();
    cfg.budget.validate();
  }

  const ScenarioConfig flat = load_config(std::string(UPSTREAK_CONFIG_DIR) + "/qpg_flat.cfg");
  CHECK_THAT(photons_per_pulse_at_camera(flat),
             Catch::Matchers::WithinRel(0.2 * 0.13 * 0.271, 1e-12));
  // 'match' copies the input's frequency bandwidth to the pump carrier
  const double dw = bandwidth_to_angular(1.545, 0.006);
  CHECK_THAT(flat.pump_bandwidth_um(),
             Catch::Matchers::WithinRel(bandwidth_to_wavelength(0.854, dw), 1e-12));
}

TEST_CASE("config overrides") {
  ScenarioConfig cfg;
  apply_config_entry(cfg, "process.length_mm", "54");
  CHECK(cfg.length_mm == 54.0);
  apply_config_entry(cfg, "camera.qe_preset", "green");
  CHECK(cfg.camera.qe.at(1.55) == 0.0);
  CHECK_THROWS_AS(apply_config_entry(cfg, "camera.qe_preset", "purple"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "nope", "1"), ConfigError);
}
