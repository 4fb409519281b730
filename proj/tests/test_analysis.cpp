#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "upstreak/analysis.hpp"
#include "upstreak/io.hpp"

using namespace upstreak;

namespace {

constexpr double kFourLn2 = 2.772588722239781;

TemporalTrace make_trace(const ArrayXd& t, const ArrayXd& counts) {
  TemporalTrace tr;
  tr.t = t;
  tr.counts = counts;
  return tr;
}

ArrayXd linspace(double lo, double hi, int n) {
  ArrayXd t(n);
  for (int i = 0; i < n; ++i) t[i] = lo + (hi - lo) * i / (n - 1);
  return t;
}

double rect_conv_gauss(double t, double width, double irf_fwhm) {
  const double s = irf_fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  return 0.5 * (std::erf((t + 0.5 * width) / (std::sqrt(2.0) * s)) -
                std::erf((t - 0.5 * width) / (std::sqrt(2.0) * s)));
}

// Independent Gaussian-fit oracle: for fixed (center, fwhm) the optimal
// (amplitude, offset) follow from linear least squares; the outer 2D search
// runs a coarse grid then coordinate golden sections. No shared code with
// the library's Levenberg-Marquardt path.
struct OracleFit {
  double fwhm, center, sse;
};

OracleFit oracle_gaussian_fit(const ArrayXd& t, const ArrayXd& y, double f_lo, double f_hi) {
  auto sse_at = [&](double c, double f) {
    const ArrayXd g = (-kFourLn2 * (t - c).square() / (f * f)).exp();
    const double n = double(t.size());
    const double sg = g.sum(), sgg = g.square().sum();
    const double sy = y.sum(), sgy = (g * y).sum();
    const double det = sgg * n - sg * sg;
    const double amp = (sgy * n - sg * sy) / det;
    const double off = (sy - amp * sg) / n;
    return (y - amp * g - off).square().sum();
  };
  double best_f = 0, best_c = 0, best = 1e300;
  for (double f = f_lo; f <= f_hi; f += (f_hi - f_lo) / 80.0)
    for (double c = -3.0; c <= 3.0; c += 0.25) {
      const double s = sse_at(c, f);
      if (s < best) best = s, best_f = f, best_c = c;
    }
  const double gr = 0.6180339887498949;
  for (int pass = 0; pass < 4; ++pass) {
    double a = best_f - (f_hi - f_lo) / 40.0, b = best_f + (f_hi - f_lo) / 40.0;
    for (int i = 0; i < 60; ++i) {
      const double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      (sse_at(best_c, x1) < sse_at(best_c, x2) ? b : a) = (sse_at(best_c, x1) < sse_at(best_c, x2) ? x2 : x1);
    }
    best_f = 0.5 * (a + b);
    double ca = best_c - 0.3, cb = best_c + 0.3;
    for (int i = 0; i < 60; ++i) {
      const double x1 = cb - gr * (cb - ca), x2 = ca + gr * (cb - ca);
      (sse_at(x1, best_f) < sse_at(x2, best_f) ? cb : ca) = (sse_at(x1, best_f) < sse_at(x2, best_f) ? x2 : x1);
    }
    best_c = 0.5 * (ca + cb);
  }
  return {best_f, best_c, sse_at(best_c, best_f)};
}

}  // namespace

TEST_CASE("background subtraction") {
  StreakImage a;
  a.counts = Eigen::ArrayXXd::Random(32, 16).abs() * 50.0;
  a.time_per_pixel_ps = 0.5;
  a.t_origin_ps = -8.0;
  StreakImage b = a;

  SECTION("image minus itself is zero") {
    const StreakImage d = subtract_background(a, b);
    CHECK(d.counts.abs().maxCoeff() == 0.0);
  }
  SECTION("zero background leaves the image unchanged") {
    b.counts.setZero();
    const StreakImage d = subtract_background(a, b);
    CHECK((d.counts == a.counts).all());
  }
  SECTION("negative values are preserved") {
    b.counts.setConstant(1000.0);
    const StreakImage d = subtract_background(a, b);
    CHECK(d.counts.maxCoeff() < 0.0);
  }
  SECTION("dimension and calibration mismatches are rejected") {
    StreakImage c = a;
    c.counts.resize(32, 15);
    CHECK_THROWS_AS(subtract_background(a, c), DimensionMismatchError);
    StreakImage e = a;
    e.t_origin_ps += 0.25;
    CHECK_THROWS_AS(subtract_background(a, e), CalibrationMismatchError);
  }
  SECTION("noise minus independent noise averages to zero") {
    StreakCameraModel m;
    m.n_rows = 64;
    m.n_cols = 64;
    m.dark_rate_cps = 1.0;
    m.exposure_s = 1.0;
    m.n_exposures = 4;
    m.mcp_gain = 2.0;
    m.mcp_gain_max = 6.0;
    m.readout_noise_sigma = 1.0;
    m.cathode_noise_sigma = 0.0;
    const StreakImage img = synthesize_background(m, 11);
    const StreakImage bg = synthesize_background(m, 22);
    const StreakImage d = subtract_background(img, bg);
    const double n_px = double(m.n_rows) * m.n_cols;
    const double var = (d.counts - d.counts.mean()).square().mean();
    CHECK(std::abs(d.counts.mean()) < 3.0 * std::sqrt(var / n_px));
  }
}

TEST_CASE("ROI integration") {
  StreakImage img;
  img.counts = Eigen::ArrayXXd::Constant(16, 8, 2.5);
  img.time_per_pixel_ps = 1.0;
  img.t_origin_ps = 0.0;

  SECTION("constant image sums to value times width") {
    const TemporalTrace tr = integrate_roi(img, 0, 8);
    CHECK(tr.t.size() == 16);
    CHECK_THAT(tr.t[0], Catch::Matchers::WithinAbs(0.5, 1e-15));  // row centers
    for (int r = 0; r < 16; ++r)
      CHECK_THAT(tr.counts[r], Catch::Matchers::WithinRel(2.5 * 8, 1e-15));
  }
  SECTION("splitting the ROI in halves is additive") {
    img.counts = Eigen::ArrayXXd::Random(16, 8);
    const TemporalTrace full = integrate_roi(img, 0, 8);
    const TemporalTrace lo = integrate_roi(img, 0, 4);
    const TemporalTrace hi = integrate_roi(img, 4, 8);
    CHECK_THAT((lo.counts + hi.counts - full.counts).abs().maxCoeff(),
               Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("bad bounds are rejected") {
    CHECK_THROWS_AS(integrate_roi(img, -1, 8), BadRoiError);
    CHECK_THROWS_AS(integrate_roi(img, 5, 5), BadRoiError);
    CHECK_THROWS_AS(integrate_roi(img, 0, 9), BadRoiError);
  }
  SECTION("ROI away from the signal is consistent with zero") {
    StreakCameraModel m;
    m.n_rows = 64;
    m.n_cols = 64;
    m.spatial_spot_sigma_px = 3.0;  // signal confined to the center columns
    m.dark_rate_cps = 1.0;
    m.exposure_s = 1.0;
    m.n_exposures = 8;
    m.mcp_gain = 2.0;
    m.mcp_gain_max = 6.0;
    m.readout_noise_sigma = 1.0;
    m.cathode_noise_sigma = 0.0;
    ArrayXd sig = ArrayXd::Zero(64);
    sig.segment(20, 10).setConstant(300.0);
    const StreakImage img2 = synthesize_image(sig, m, 5);
    const StreakImage bg2 = synthesize_background(m, 6);
    const TemporalTrace off = integrate_roi(subtract_background(img2, bg2), 52, 62);
    const double se = std::sqrt((off.counts - off.counts.mean()).square().mean() /
                                double(off.counts.size()));
    CHECK(std::abs(off.counts.mean()) < 3.0 * se);
  }
}

TEST_CASE("binned errors") {
  const ArrayXd t = linspace(0.25, 15.75, 32);  // dt = 0.5

  SECTION("constant trace has zero errors") {
    TemporalTrace tr = make_trace(t, ArrayXd::Constant(32, 7.0));
    tr = binned_errors(tr, 2.0, 0.0);
    CHECK(tr.errors.abs().maxCoeff() == 0.0);
  }
  SECTION("two-point bin carries the sample standard deviation") {
    ArrayXd tt = linspace(0.5, 7.5, 8);  // dt = 1
    ArrayXd c(8);
    c << 1, 3, 5, 5, 2, 2, 9, 9;
    TemporalTrace tr = make_trace(tt, c);
    tr = binned_errors(tr, 2.0, 0.0);  // bins {0,2),{2,4),...
    CHECK_THAT(tr.errors[0], Catch::Matchers::WithinRel(std::sqrt(2.0), 1e-12));
    CHECK_THAT(tr.errors[1], Catch::Matchers::WithinRel(std::sqrt(2.0), 1e-12));
    CHECK(tr.errors[2] == 0.0);
    CHECK(tr.errors[3] == 0.0);
  }
  SECTION("bin below the time step is rejected") {
    TemporalTrace tr = make_trace(t, ArrayXd::Constant(32, 1.0));
    CHECK_THROWS_AS(binned_errors(tr, 0.2, 0.0), BinTooSmallError);
  }
  SECTION("flat-noise trace recovers the generator sigma") {
    std::mt19937 eng(2024);
    std::normal_distribution<double> noise(100.0, 4.0);
    const ArrayXd tt = linspace(0.05, 99.95, 1000);
    ArrayXd c(1000);
    for (int i = 0; i < 1000; ++i) c[i] = noise(eng);
    TemporalTrace tr = binned_errors(make_trace(tt, c), 5.0, 0.0);
    CHECK_THAT(tr.errors.mean(), Catch::Matchers::WithinRel(4.0, 0.10));
  }
}

TEST_CASE("gaussian fit") {
  const ArrayXd t = linspace(-80.0, 80.0, 512);

  SECTION("recovers a noiseless gaussian") {
    const ArrayXd y = 40.0 * (-kFourLn2 * (t - 3.0).square() / (23.0 * 23.0)).exp() + 5.0;
    const PulseFitResult r = fit_gaussian(make_trace(t, y));
    CHECK(r.converged);
    CHECK_THAT(r.fwhm, Catch::Matchers::WithinAbs(23.0, 0.1));
    CHECK_THAT(r.center, Catch::Matchers::WithinAbs(3.0, 0.05));
    CHECK_THAT(r.amplitude, Catch::Matchers::WithinRel(40.0, 1e-6));
    CHECK_THAT(r.offset, Catch::Matchers::WithinAbs(5.0, 1e-4));
  }

  SECTION("translation and scale invariance") {
    std::mt19937 eng(7);
    std::normal_distribution<double> noise(0.0, 0.6);
    ArrayXd y = 40.0 * (-kFourLn2 * t.square() / (23.0 * 23.0)).exp() + 5.0;
    for (int i = 0; i < y.size(); ++i) y[i] += noise(eng);

    const PulseFitResult base = fit_gaussian(make_trace(t, y));
    const PulseFitResult shifted = fit_gaussian(make_trace(t + 11.0, y));
    CHECK_THAT(shifted.fwhm, Catch::Matchers::WithinRel(base.fwhm, 1e-9));
    CHECK_THAT(shifted.center - base.center, Catch::Matchers::WithinAbs(11.0, 1e-6));

    const PulseFitResult scaled = fit_gaussian(make_trace(t, 137.5 * y));
    CHECK_THAT(scaled.fwhm, Catch::Matchers::WithinRel(base.fwhm, 1e-9));
    CHECK_THAT(scaled.center, Catch::Matchers::WithinAbs(base.center, 1e-6));
    CHECK_THAT(scaled.amplitude, Catch::Matchers::WithinRel(137.5 * base.amplitude, 1e-9));
  }

  SECTION("no detectable peak") {
    CHECK_THROWS_AS(fit_gaussian(make_trace(t, ArrayXd::Zero(512))), NoPeakError);
    CHECK_THROWS_AS(fit_gaussian(make_trace(linspace(0, 1, 4), ArrayXd::Ones(4))), NoPeakError);
  }

  SECTION("top-hat through the instrument: fit narrows to ~23 ps, cross-checked") {
    // 27 ps rect (x) 5 ps IRF. The least-squares Gaussian reads ~23.2 ps,
    // well below both the direct width (27.0) and the quadrature sum (27.46):
    // the fit trades the flat top against the steep edges.
    ArrayXd y(512);
    for (int i = 0; i < 512; ++i) y[i] = rect_conv_gauss(t[i], 27.0, 5.0);
    const PulseFitResult lm = fit_gaussian(make_trace(t, y));
    const OracleFit oracle = oracle_gaussian_fit(t, y, 15.0, 35.0);
    CHECK_THAT(lm.fwhm, Catch::Matchers::WithinAbs(oracle.fwhm, 0.05));
    CHECK_THAT(lm.fwhm, Catch::Matchers::WithinAbs(23.1935, 0.15));
    CHECK(lm.residual_norm * lm.residual_norm <= oracle.sse * (1.0 + 1e-6));
  }
}

TEST_CASE("rect-gaussian (erf-difference) fit") {
  const ArrayXd t = linspace(-80.0, 80.0, 512);

  SECTION("recovers the rect width exactly on noiseless data") {
    for (double T : {27.0, 22.3148, 19.4041}) {
      ArrayXd y(512);
      for (int i = 0; i < 512; ++i) y[i] = 80.0 * rect_conv_gauss(t[i] - 2.0, T, 5.0) + 3.0;
      const RectFitResult r = fit_rect_gaussian(make_trace(t, y), 5.0);
      CHECK(r.converged);
      CHECK_THAT(r.width, Catch::Matchers::WithinAbs(T, 0.02));
      CHECK_THAT(r.center, Catch::Matchers::WithinAbs(2.0, 0.02));
    }
  }

  SECTION("tolerates noise at the few-percent level") {
    std::mt19937 eng(99);
    std::normal_distribution<double> noise(0.0, 2.0);
    ArrayXd y(512);
    for (int i = 0; i < 512; ++i) y[i] = 80.0 * rect_conv_gauss(t[i], 22.3148, 5.0) + noise(eng);
    const RectFitResult r = fit_rect_gaussian(make_trace(t, y), 5.0);
    CHECK_THAT(r.width, Catch::Matchers::WithinAbs(22.3148, 0.5));
  }
}

TEST_CASE("effective length inversion") {
  SECTION("no instrument correction at zero IRF... uses raw estimate") {
    const EffectiveLength el = effective_length(27.0, 0.0, 1.0);
    CHECK_THAT(el.raw_mm, Catch::Matchers::WithinRel(27.0, 1e-15));
    CHECK_THAT(el.quadrature_mm, Catch::Matchers::WithinRel(27.0, 1e-15));
  }
  SECTION("quadrature deconvolution of the instrument width") {
    const EffectiveLength el = effective_length(23.0, 5.0, 1.0);
    CHECK_THAT(el.quadrature_mm, Catch::Matchers::WithinAbs(22.4499, 1e-3));
    CHECK_THAT(el.raw_mm, Catch::Matchers::WithinRel(23.0, 1e-12));
  }
  SECTION("unphysical when the IRF dominates") {
    CHECK_THROWS_AS(effective_length(4.9, 5.0, 1.0), UnphysicalError);
    CHECK_THROWS_AS(effective_length(23.0, 5.0, 0.0), UnphysicalError);
  }
  SECTION("monotone in the measured width, antitone in the IRF") {
    double prev = 0.0;
    for (double meas = 6.0; meas < 40.0; meas += 1.0) {
      const double cur = effective_length(meas, 5.0, 0.97).quadrature_mm;
      CHECK(cur > prev);
      prev = cur;
    }
    prev = 1e9;
    for (double irf = 0.5; irf < 20.0; irf += 0.5) {
      const double cur = effective_length(23.0, irf, 0.97).quadrature_mm;
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("row-sum linearity: subtract then integrate equals integrate then subtract") {
  StreakCameraModel m;
  m.n_rows = 32;
  m.n_cols = 32;
  m.exposure_s = 1.0;
  m.n_exposures = 2;
  m.mcp_gain = 2.0;
  m.mcp_gain_max = 6.0;
  ArrayXd sig = ArrayXd::Zero(32);
  sig.segment(10, 8).setConstant(120.0);
  const StreakImage img = synthesize_image(sig, m, 1);
  const StreakImage bg = synthesize_background(m, 2);

  const TemporalTrace a = integrate_roi(subtract_background(img, bg), 4, 28);
  const TemporalTrace ta = integrate_roi(img, 4, 28);
  const TemporalTrace tb = integrate_roi(bg, 4, 28);
  CHECK_THAT((a.counts - (ta.counts - tb.counts)).abs().maxCoeff(),
             Catch::Matchers::WithinAbs(0.0, 1e-12));
}
