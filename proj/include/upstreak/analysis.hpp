#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "upstreak/streak_camera.hpp"

namespace upstreak {

/// Horizontally integrated image trace with per-point error bars.
struct TemporalTrace {
  ArrayXd t;       // ps, strictly increasing
  ArrayXd counts;
  ArrayXd errors;  // empty until binned_errors fills it
};

struct PulseFitResult {
  double fwhm = 0.0;
  double center = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double fwhm_uncertainty = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Result of the rect (x) Gaussian (erf-difference) fit; width is the
/// edge-to-edge top-hat width before instrument blurring.
struct RectFitResult {
  double width = 0.0;
  double center = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double width_uncertainty = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Elementwise difference; negative values preserved.
inline StreakImage subtract_background(const StreakImage& img, const StreakImage& bg) {
  if (img.rows() != bg.rows() || img.cols() != bg.cols())
    throw DimensionMismatchError("subtract_background: image dimensions differ");
  if (std::abs(img.time_per_pixel_ps - bg.time_per_pixel_ps) > 1e-12 ||
      std::abs(img.t_origin_ps - bg.t_origin_ps) > 1e-12)
    throw CalibrationMismatchError("subtract_background: calibrations differ");
  StreakImage out = img;
  out.counts = img.counts - bg.counts;
  return out;
}

/// Per-row sum over columns [col_lo, col_hi). Errors left empty.
inline TemporalTrace integrate_roi(const StreakImage& img, int col_lo, int col_hi) {
  if (col_lo < 0 || col_hi <= col_lo || col_hi > img.cols())
    throw BadRoiError("integrate_roi: need 0 <= col_lo < col_hi <= n_cols");
  TemporalTrace tr;
  tr.t.resize(img.rows());
  tr.counts.resize(img.rows());
  for (int r = 0; r < img.rows(); ++r) {
    tr.t[r] = img.t_origin_ps + (r + 0.5) * img.time_per_pixel_ps;
    tr.counts[r] = img.counts.row(r).segment(col_lo, col_hi - col_lo).sum();
  }
  return tr;
}

/// Attach error bars: each point gets the sample standard deviation of the
/// counts inside its enclosing bin; bins of the given width tile the axis
/// starting at t_origin. Single-member bins get zero.
inline TemporalTrace binned_errors(const TemporalTrace& trace, double bin_width_ps,
                                   double t_origin_ps) {
  const auto n = trace.t.size();
  if (n < 2) throw BinTooSmallError("binned_errors: trace too short");
  const double dt = trace.t[1] - trace.t[0];
  if (bin_width_ps < dt * (1.0 - 1e-9))
    throw BinTooSmallError("binned_errors: bin width below the trace time step");

  std::vector<std::vector<Eigen::Index>> bins;
  std::vector<long> index_of(n);
  long min_bin = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    index_of[i] = static_cast<long>(std::floor((trace.t[i] - t_origin_ps) / bin_width_ps));
  min_bin = *std::min_element(index_of.begin(), index_of.end());
  const long max_bin = *std::max_element(index_of.begin(), index_of.end());
  bins.resize(max_bin - min_bin + 1);
  for (Eigen::Index i = 0; i < n; ++i) bins[index_of[i] - min_bin].push_back(i);

  TemporalTrace out = trace;
  out.errors = ArrayXd::Zero(n);
  for (const auto& members : bins) {
    if (members.size() < 2) continue;
    double mean = 0.0;
    for (auto i : members) mean += trace.counts[i];
    mean /= members.size();
    double ss = 0.0;
    for (auto i : members) ss += (trace.counts[i] - mean) * (trace.counts[i] - mean);
    const double sd = std::sqrt(ss / (members.size() - 1));
    for (auto i : members) out.errors[i] = sd;
  }
  return out;
}

namespace detail {

// Levenberg-Marquardt for a 4-parameter model with analytic Jacobian.
// Model supplies value and gradient at (t, params).
template <typename Model>
struct LmFit {
  Eigen::Vector4d params;
  Eigen::Vector4d uncertainty = Eigen::Vector4d::Zero();
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

template <typename Model>
LmFit<Model> levenberg_marquardt(const Model& model, const ArrayXd& t, const ArrayXd& y,
                                 Eigen::Vector4d p0, int max_iter = 200,
                                 double step_tol = 1e-9) {
  const auto n = t.size();
  auto residuals = [&](const Eigen::Vector4d& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(n);
    if (J) J->resize(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Vector4d g;
      const double f = model(t[i], p, J ? &g : nullptr);
      r[i] = y[i] - f;
      if (J) J->row(i) = -g.transpose();
    }
  };

  LmFit<Model> out;
  Eigen::Vector4d p = p0;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residuals(p, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::Matrix4d jtj = J.transpose() * J;
    const Eigen::Vector4d jtr = J.transpose() * r;
    Eigen::Matrix4d a = jtj;
    a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Vector4d step = a.ldlt().solve(-jtr);
    const Eigen::Vector4d p_try = p + step;

    Eigen::VectorXd r_try;
    residuals(p_try, r_try, nullptr);
    const double cost_try = r_try.squaredNorm();
    if (cost_try < cost) {
      const double rel_step = step.norm() / std::max(1e-30, p.norm());
      p = p_try;
      cost = cost_try;
      lambda = std::max(lambda * 0.3, 1e-12);
      residuals(p, r, &J);
      if (rel_step < step_tol) {
        out.converged = true;
        ++it;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  out.params = p;
  out.iterations = it;
  out.residual_norm = std::sqrt(cost);
  if (n > 4) {
    const Eigen::Matrix4d jtj = J.transpose() * J;
    const double s2 = cost / double(n - 4);
    const Eigen::Matrix4d cov = jtj.ldlt().solve(Eigen::Matrix4d::Identity()) * s2;
    for (int k = 0; k < 4; ++k) out.uncertainty[k] = std::sqrt(std::max(0.0, cov(k, k)));
  }
  return out;
}

inline void check_fit_preconditions(const TemporalTrace& trace) {
  if (trace.t.size() < 8) throw NoPeakError("fit: need at least 8 points");
  if (trace.counts.size() != trace.t.size())
    throw DimensionMismatchError("fit: t/counts size mismatch");
  std::vector<double> sorted(trace.counts.data(), trace.counts.data() + trace.counts.size());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double offset_est = sorted[sorted.size() / 2];
  double med_err = 0.0;
  if (trace.errors.size() == trace.t.size()) {
    std::vector<double> es(trace.errors.data(), trace.errors.data() + trace.errors.size());
    std::nth_element(es.begin(), es.begin() + es.size() / 2, es.end());
    med_err = es[es.size() / 2];
  }
  if (!(trace.counts.maxCoeff() > offset_est + 3.0 * med_err))
    throw NoPeakError("fit: no detectable peak above the baseline");
}

struct MomentGuess {
  double offset, center, width, amplitude;
};

inline MomentGuess moment_guess(const TemporalTrace& trace) {
  std::vector<double> sorted(trace.counts.data(), trace.counts.data() + trace.counts.size());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  MomentGuess g;
  g.offset = sorted[sorted.size() / 2];
  const ArrayXd w = (trace.counts - g.offset).cwiseMax(0.0);
  const double wsum = w.sum();
  if (wsum > 0.0) {
    g.center = (w * trace.t).sum() / wsum;
    const double var = (w * (trace.t - g.center).square()).sum() / wsum;
    g.width = 2.3548200450309493 * std::sqrt(std::max(var, 1e-12));
  } else {
    g.center = trace.t[trace.t.size() / 2];
    g.width = (trace.t[trace.t.size() - 1] - trace.t[0]) / 4.0;
  }
  g.amplitude = trace.counts.maxCoeff() - g.offset;
  return g;
}

}  // namespace detail

/// Least-squares fit of amplitude * exp(-4 ln2 (t-center)^2 / fwhm^2) + offset.
/// Initial guesses from moments; convergence when the relative parameter step
/// drops below 1e-9 or after 200 iterations (best iterate returned, flagged).
inline PulseFitResult fit_gaussian(const TemporalTrace& trace) {
  detail::check_fit_preconditions(trace);
  const auto g = detail::moment_guess(trace);

  constexpr double four_ln2 = 2.772588722239781;
  auto model = [](double t, const Eigen::Vector4d& p, Eigen::Vector4d* grad) {
    const double a = p[0], c = p[1], f = p[2], o = p[3];
    const double u = (t - c) / f;
    const double e = std::exp(-four_ln2 * u * u);
    if (grad) {
      (*grad)[0] = e;
      (*grad)[1] = a * e * 2.0 * four_ln2 * u / f;
      (*grad)[2] = a * e * 2.0 * four_ln2 * u * u / f;
      (*grad)[3] = 1.0;
    }
    return a * e + o;
  };

  const auto lm = detail::levenberg_marquardt(
      model, trace.t, trace.counts, Eigen::Vector4d(g.amplitude, g.center, g.width, g.offset));
  PulseFitResult r;
  r.amplitude = lm.params[0];
  r.center = lm.params[1];
  r.fwhm = std::abs(lm.params[2]);
  r.offset = lm.params[3];
  r.fwhm_uncertainty = lm.uncertainty[2];
  r.residual_norm = lm.residual_norm;
  r.converged = lm.converged;
  r.iterations = lm.iterations;
  if (!(r.fwhm > 0.0)) throw NoPeakError("fit_gaussian: degenerate width");
  return r;
}

/// Erf-difference fit (rect of width T convolved with the known Gaussian IRF):
///   amplitude/2 * [erf((t-c+T/2)/(sqrt2 s)) - erf((t-c-T/2)/(sqrt2 s))] + offset
/// with s fixed by irf_fwhm. Model-matched estimator for top-hat profiles;
/// `width` is the recovered edge-to-edge duration.
inline RectFitResult fit_rect_gaussian(const TemporalTrace& trace, double irf_fwhm_ps) {
  detail::check_fit_preconditions(trace);
  if (!(irf_fwhm_ps > 0.0)) throw ConfigError("fit_rect_gaussian: irf_fwhm must be > 0");
  const auto g = detail::moment_guess(trace);
  const double s = irf_fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double inv = 1.0 / (std::sqrt(2.0) * s);
  constexpr double two_over_sqrt_pi = 1.1283791670955126;

  auto model = [=](double t, const Eigen::Vector4d& p, Eigen::Vector4d* grad) {
    const double a = p[0], c = p[1], T = std::abs(p[2]), o = p[3];
    const double up = (t - c + 0.5 * T) * inv;
    const double um = (t - c - 0.5 * T) * inv;
    const double ep = std::exp(-up * up);
    const double em = std::exp(-um * um);
    if (grad) {
      (*grad)[0] = 0.5 * (std::erf(up) - std::erf(um));
      (*grad)[1] = -0.5 * a * two_over_sqrt_pi * inv * (ep - em);
      (*grad)[2] = 0.25 * a * two_over_sqrt_pi * inv * (ep + em);
      (*grad)[3] = 1.0;
    }
    return 0.5 * a * (std::erf(up) - std::erf(um)) + o;
  };

  const auto lm = detail::levenberg_marquardt(
      model, trace.t, trace.counts, Eigen::Vector4d(g.amplitude, g.center, g.width, g.offset));
  RectFitResult r;
  r.amplitude = lm.params[0];
  r.center = lm.params[1];
  r.width = std::abs(lm.params[2]);
  r.offset = lm.params[3];
  r.width_uncertainty = lm.uncertainty[2];
  r.residual_norm = lm.residual_norm;
  r.converged = lm.converged;
  r.iterations = lm.iterations;
  if (!(r.width > 0.0)) throw NoPeakError("fit_rect_gaussian: degenerate width");
  return r;
}

/// Interaction-length estimates from a measured duration: the quadrature
/// estimate deconvolves the IRF as T = sqrt(measured^2 - irf^2) (exact only
/// for Gaussian (x) Gaussian), the raw estimate uses T = measured directly.
struct EffectiveLength {
  double quadrature_mm = 0.0;
  double raw_mm = 0.0;
};

inline EffectiveLength effective_length(double measured_fwhm_ps, double irf_fwhm_ps,
                                        double alpha_ps_mm) {
  if (!(alpha_ps_mm > 0.0)) throw UnphysicalError("effective_length: alpha must be > 0");
  if (irf_fwhm_ps < 0.0) throw UnphysicalError("effective_length: irf_fwhm must be >= 0");
  if (!(measured_fwhm_ps > irf_fwhm_ps))
    throw UnphysicalError("effective_length: measured duration does not exceed the IRF");
  EffectiveLength out;
  out.raw_mm = measured_fwhm_ps / alpha_ps_mm;
  out.quadrature_mm =
      std::sqrt(measured_fwhm_ps * measured_fwhm_ps - irf_fwhm_ps * irf_fwhm_ps) / alpha_ps_mm;
  return out;
}

}  // namespace upstreak
