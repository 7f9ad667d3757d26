// fit.hpp - damped-cosine and power-law fits of simulated fluorescence

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "ionraman/integrator.hpp"

namespace ionraman {

class FitError : public Error {
 public:
  using Error::Error;
};

/// P(t) ~ 1/2 [1 + cos(2 rabi t) exp(-decay t)].
struct FitResult {
  double rabi = 0.0;   ///< rad/s
  double decay = 0.0;  ///< 1/s
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// gamma(n0) ~ gamma0 (n0 + 1)^exponent.
struct PowerLawResult {
  double gamma0 = 0.0;
  double exponent = 0.0;
  double r_squared = 0.0;
};

namespace detail {

// Residuals of the damped cosine in normalized time tau = t / t_scale.
// Parameters: (w, k) with P = 1/2 [1 + cos(2 w tau) e^{-k tau}].
struct DampedCosineFunctor : Eigen::DenseFunctor<double> {
  DampedCosineFunctor(const Eigen::VectorXd& tau, const Eigen::VectorXd& p, bool fixed_decay)
      : Eigen::DenseFunctor<double>(fixed_decay ? 1 : 2, static_cast<int>(tau.size())),
        tau_(tau), p_(p), fixed_decay_(fixed_decay) {}

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    const double w = x(0);
    const double k = fixed_decay_ ? 0.0 : x(1);
    for (Eigen::Index j = 0; j < tau_.size(); ++j) {
      fvec(j) = 0.5 * (1.0 + std::cos(2.0 * w * tau_(j)) * std::exp(-k * tau_(j))) - p_(j);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
    const double w = x(0);
    const double k = fixed_decay_ ? 0.0 : x(1);
    for (Eigen::Index j = 0; j < tau_.size(); ++j) {
      const double tau = tau_(j);
      const double env = std::exp(-k * tau);
      fjac(j, 0) = -tau * std::sin(2.0 * w * tau) * env;
      if (!fixed_decay_) fjac(j, 1) = -0.5 * tau * std::cos(2.0 * w * tau) * env;
    }
    return 0;
  }

  Eigen::VectorXd tau_;
  Eigen::VectorXd p_;
  bool fixed_decay_;
};

inline double sum_squares(const DampedCosineFunctor& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd r(f.values());
  f(x, r);
  return r.squaredNorm();
}

struct LmOutcome {
  Eigen::VectorXd x;
  bool converged = false;
  int iterations = 0;
};

inline LmOutcome run_lm(DampedCosineFunctor& f, Eigen::VectorXd x, int max_iterations, double xtol) {
  Eigen::LevenbergMarquardt<DampedCosineFunctor> lm(f);
  lm.setXtol(xtol);
  lm.setFtol(0.0);
  lm.setGtol(0.0);
  lm.setMaxfev(20 * max_iterations);
  using Space = Eigen::LevenbergMarquardtSpace::Status;
  Space status = lm.minimizeInit(x);
  int it = 0;
  if (status != Space::ImproperInputParameters) {
    do {
      status = lm.minimizeOneStep(x);
      ++it;
    } while (status == Space::Running && it < max_iterations);
  }
  LmOutcome out;
  out.x = x;
  out.iterations = it;
  out.converged = status == Space::RelativeReductionTooSmall || status == Space::RelativeErrorTooSmall ||
                  status == Space::RelativeErrorAndReductionTooSmall || status == Space::CosinusTooSmall ||
                  status == Space::FtolTooSmall || status == Space::XtolTooSmall || status == Space::GtolTooSmall;
  return out;
}

/// Angular frequency (per unit tau) of the strongest spectral line of y,
/// from a zero-padded FFT refined by parabolic interpolation.
inline double spectral_peak(const Eigen::VectorXd& tau, const Eigen::VectorXd& y) {
  const Eigen::Index m = y.size();
  const double dtau = (tau(m - 1) - tau(0)) / static_cast<double>(m - 1);
  Eigen::Index padded = 1;
  while (padded < 8 * m) padded <<= 1;
  std::vector<double> in(static_cast<std::size_t>(padded), 0.0);
  const double mean = y.mean();
  for (Eigen::Index j = 0; j < m; ++j) in[static_cast<std::size_t>(j)] = y(j) - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  const std::size_t half = static_cast<std::size_t>(padded / 2);
  std::size_t best = 1;
  for (std::size_t k = 1; k < half; ++k) {
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  }
  double shift = 0.0;
  if (best > 1 && best + 1 < half) {
    const double a = std::abs(spec[best - 1]);
    const double b = std::abs(spec[best]);
    const double c = std::abs(spec[best + 1]);
    const double denom = a - 2.0 * b + c;
    if (denom != 0.0) shift = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  return kTwoPi * (static_cast<double>(best) + shift) / (static_cast<double>(padded) * dtau);
}

}  // namespace detail

/// Least-squares fit of P(t) = 1/2 [1 + cos(2 rabi t) e^{-decay t}] to uniformly
/// sampled data. The frequency guess comes from the spectrum of P - 1/2;
/// converged is set when the relative parameter step drops below 1e-8 within
/// 200 iterations. A negative decay is refit with the decay pinned at zero.
inline FitResult fit_damped_cosine(std::span<const double> t, std::span<const double> p) {
  if (t.size() != p.size()) throw FitError("fit_damped_cosine: time and value counts differ");
  if (t.size() < 50) throw FitError("fit_damped_cosine: need at least 50 samples");
  const Eigen::Index m = static_cast<Eigen::Index>(t.size());
  const double t_scale = t.back() - t.front();
  if (!(t_scale > 0.0)) throw FitError("fit_damped_cosine: time axis must be increasing");

  Eigen::VectorXd tau(m), y(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    tau(j) = t[static_cast<std::size_t>(j)] / t_scale;
    y(j) = p[static_cast<std::size_t>(j)];
  }

  const double w0 = 0.5 * detail::spectral_peak(tau, y.array() - 0.5);
  const double span_tau = tau(m - 1) - tau(0);
  if (w0 * span_tau / M_PI < 3.0) {
    throw FitError("fit_damped_cosine: data span fewer than 3 oscillation periods");
  }

  detail::DampedCosineFunctor f2(tau, y, false);
  Eigen::VectorXd x(2);
  x << w0, 0.0;
  double best = detail::sum_squares(f2, x);
  for (double k : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    Eigen::VectorXd trial(2);
    trial << w0, k;
    const double ss = detail::sum_squares(f2, trial);
    if (ss < best) {
      best = ss;
      x = trial;
    }
  }

  constexpr int kMaxIterations = 200;
  constexpr double kXtol = 1e-8;
  detail::LmOutcome out = detail::run_lm(f2, x, kMaxIterations, kXtol);
  FitResult result;
  double w = out.x(0);
  double k = out.x(1);
  result.converged = out.converged;
  result.iterations = out.iterations;
  if (k < 0.0) {
    detail::DampedCosineFunctor f1(tau, y, true);
    Eigen::VectorXd x1(1);
    x1 << w;
    detail::LmOutcome out1 = detail::run_lm(f1, x1, kMaxIterations, kXtol);
    w = out1.x(0);
    k = 0.0;
    result.converged = out1.converged;
    result.iterations += out1.iterations;
  }
  Eigen::VectorXd final_x(2);
  final_x << w, k;
  result.residual_rms = std::sqrt(detail::sum_squares(f2, final_x) / static_cast<double>(m));
  result.rabi = std::abs(w) / t_scale;
  result.decay = k / t_scale;
  return result;
}

inline FitResult fit_damped_cosine(const Trajectory& traj) {
  const std::vector<double> p = traj.p_down();
  return fit_damped_cosine(std::span<const double>(traj.times), std::span<const double>(p));
}

/// Linear regression of log(gamma) on log(n0 + 1).
inline PowerLawResult fit_power_law(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw FitError("fit_power_law: need at least 3 points");
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs, ys;
  for (const auto& [n0, gamma] : points) {
    if (!(gamma > 0.0)) throw FitError("fit_power_law: decay rates must be positive");
    if (!(n0 > -1.0)) throw FitError("fit_power_law: n0 must exceed -1");
    xs.push_back(std::log(n0 + 1.0));
    ys.push_back(std::log(gamma));
    sx += xs.back();
    sy += ys.back();
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw FitError("fit_power_law: n0 values must not all coincide");
  PowerLawResult r;
  r.exponent = sxy / sxx;
  r.gamma0 = std::exp(my - r.exponent * mx);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (my + r.exponent * (xs[i] - mx));
    ss_res += e * e;
  }
  // A constant series is reproduced exactly by a flat line.
  r.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return r;
}

}  // namespace ionraman
