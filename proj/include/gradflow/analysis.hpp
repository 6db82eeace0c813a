#pragma once

// Empirical verification toolkit for the analytic gradient-flow results:
// Lojasiewicz exponent fits, distance inequalities, tail-length convergence
// rates, normal-bias ratios, secant-direction limits, Z-set crossings, and
// dense-limit surveys.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gradflow/catalog.hpp"
#include "gradflow/field.hpp"
#include "gradflow/flow.hpp"

namespace gradflow {

struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& what)
      : std::runtime_error(what) {}
};

// Power-law fit in log space: y ~ C * x^exponent.
struct AnalysisFit {
  double exponent = 0.0;
  double log_constant = 0.0;
  double residual = 0.0;  // rms of the log-space fit
  std::size_t window_begin = 0;  // sample index range used
  std::size_t window_end = 0;
  std::size_t sample_count = 0;
};

namespace detail {

inline AnalysisFit fit_loglog(const std::vector<double>& log_x,
                              const std::vector<double>& log_y) {
  const std::size_t m = log_x.size();
  if (m < 8)
    throw InsufficientDataError("power-law fit needs at least 8 samples, got " +
                                std::to_string(m));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += log_x[i];
    sy += log_y[i];
    sxx += log_x[i] * log_x[i];
    sxy += log_x[i] * log_y[i];
  }
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-12 * m * std::max(1.0, sxx))
    throw InsufficientDataError("fit abscissas have no spread");
  AnalysisFit fit;
  fit.exponent = (m * sxy - sx * sy) / denom;
  fit.log_constant = (sy - fit.exponent * sx) / m;
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = log_y[i] - (fit.exponent * log_x[i] + fit.log_constant);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  fit.sample_count = m;
  return fit;
}

// Indices of tail-window samples with f - f_p above the rounding floor.
inline std::vector<std::size_t> tail_window(const Trajectory& traj, double f_p,
                                            double fraction = 0.6) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.samples[i].f_value - f_p > 1e-13) valid.push_back(i);
  const std::size_t keep =
      static_cast<std::size_t>(std::ceil(fraction * valid.size()));
  if (keep < valid.size())
    valid.erase(valid.begin(), valid.end() - keep);
  return valid;
}

}  // namespace detail

// Fits |grad f(gamma)| ~ C (f(gamma) - f_p)^theta over the trajectory tail.
inline AnalysisFit estimate_lojasiewicz(const ScalarField& field,
                                        const Trajectory& traj,
                                        const Eigen::VectorXd& p, double f_p) {
  (void)field;
  (void)p;
  auto window = detail::tail_window(traj, f_p);
  std::vector<double> lx, ly;
  for (std::size_t i : window) {
    const auto& s = traj.samples[i];
    if (s.grad_norm <= 0.0) continue;
    lx.push_back(std::log(s.f_value - f_p));
    ly.push_back(std::log(s.grad_norm));
  }
  AnalysisFit fit = detail::fit_loglog(lx, ly);
  fit.window_begin = window.front();
  fit.window_end = window.back();
  return fit;
}

struct DistanceInequalityCheck {
  AnalysisFit fit;            // f ~ C * dist^alpha (least squares)
  double bound_constant = 0;  // largest C with f >= C dist^alpha on samples
  double worst_violation = 0; // max(C dist^alpha - f), should be <= slack
  std::size_t excluded = 0;   // samples on the manifold (dist < 1e-12)
};

// Fits f(x) ~ C dist(x, N)^alpha over a point cloud and verifies the lower
// bound f >= C_lb dist^alpha at every sample.
inline DistanceInequalityCheck check_distance_inequality(
    const ScalarField& field, const ManifoldModel& manifold,
    const std::vector<Eigen::VectorXd>& samples) {
  std::vector<double> lx, ly, dist, fval;
  std::size_t excluded = 0;
  for (const auto& x : samples) {
    double d = manifold.distance(x);
    if (d < 1e-12) {
      ++excluded;
      continue;
    }
    double f = field.value(x);
    if (f <= 0.0) continue;
    dist.push_back(d);
    fval.push_back(f);
    lx.push_back(std::log(d));
    ly.push_back(std::log(f));
  }
  DistanceInequalityCheck check;
  check.excluded = excluded;
  check.fit = detail::fit_loglog(lx, ly);
  double log_c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dist.size(); ++i)
    log_c = std::min(log_c, ly[i] - check.fit.exponent * lx[i]);
  check.bound_constant = std::exp(log_c);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    double bound = check.bound_constant * std::pow(dist[i], check.fit.exponent);
    check.worst_violation = std::max(check.worst_violation, bound - fval[i]);
  }
  return check;
}

// Fits l(gamma[t, end]) ~ C (f(gamma(t)) - f_p)^beta over the tail. The
// integration stops at a finite gradient threshold, so the straight-line
// remainder from the final sample to the limit point is added to every
// tail length; without it the fit is biased near the stopping point.
inline AnalysisFit tail_length_rate(const Trajectory& traj,
                                    const Eigen::VectorXd& p, double f_p) {
  if (traj.stop_reason != StopReason::kGradNormMet)
    throw std::invalid_argument("tail_length_rate needs a converged trajectory");
  auto window = detail::tail_window(traj, f_p);
  const double total = traj.back().arc_length + (traj.back().x - p).norm();
  std::vector<double> lx, ly;
  for (std::size_t i : window) {
    const auto& s = traj.samples[i];
    double tail = total - s.arc_length;
    if (tail <= 0.0) continue;
    lx.push_back(std::log(s.f_value - f_p));
    ly.push_back(std::log(tail));
  }
  AnalysisFit fit = detail::fit_loglog(lx, ly);
  if (!window.empty()) {
    fit.window_begin = window.front();
    fit.window_end = window.back();
  }
  return fit;
}

struct BiasReport {
  std::vector<std::pair<double, double>> ratio_series;  // (t, |P d| / |Q d|^2)
  double tail_sup = 0.0;     // sup over the last half of valid samples
  double tail_median = 0.0;  // median over the same window
  bool bounded = false;      // tail_sup <= 2 * median (no blow-up trend)
  Eigen::VectorXd limit_point;
};

// Tangential-vs-normal displacement ratio of a trajectory converging to
// p on the critical manifold: |P(gamma - p)| / |Q(gamma - p)|^2.
inline BiasReport normal_bias(const Trajectory& traj,
                              const ManifoldModel& manifold,
                              const Eigen::VectorXd& p,
                              double locate_tol = 1e-4) {
  if (manifold.distance(p) > locate_tol)
    throw std::invalid_argument("limit point is not on the critical manifold");
  Eigen::MatrixXd tan = manifold.tangent_basis(p);
  BiasReport report;
  report.limit_point = p;
  for (const auto& s : traj.samples) {
    Eigen::VectorXd d = s.x - p;
    Eigen::VectorXd tangential = tan * (tan.transpose() * d);
    double qn = (d - tangential).norm();
    if (qn <= 1e-12) continue;
    report.ratio_series.emplace_back(s.t, tangential.norm() / (qn * qn));
  }
  if (report.ratio_series.empty()) return report;
  std::size_t half = report.ratio_series.size() / 2;
  std::vector<double> tail;
  for (std::size_t i = half; i < report.ratio_series.size(); ++i)
    tail.push_back(report.ratio_series[i].second);
  report.tail_sup = *std::max_element(tail.begin(), tail.end());
  std::nth_element(tail.begin(), tail.begin() + tail.size() / 2, tail.end());
  report.tail_median = tail[tail.size() / 2];
  report.bounded = report.tail_sup <= 2.0 * report.tail_median + 1e-12;
  return report;
}

struct SecantReport {
  std::vector<std::pair<double, Eigen::VectorXd>> direction_series;
  Eigen::VectorXd limit_estimate;
  double max_pairwise_angle = 0.0;  // over the last quarter of samples
  double tangent_angle = 0.0;       // angle between the limit and T_pN
};

// Unit secants (gamma(t) - p)/|gamma(t) - p| over the tail; Cauchy-ness of
// the direction series witnesses the existence of the secant limit.
inline SecantReport secant_limit(const Trajectory& traj,
                                 const ManifoldModel& manifold,
                                 const Eigen::VectorXd& p,
                                 double locate_tol = 1e-4) {
  if (manifold.distance(p) > locate_tol)
    throw std::invalid_argument("limit point is not on the critical manifold");
  SecantReport report;
  for (const auto& s : traj.samples) {
    Eigen::VectorXd d = s.x - p;
    double dn = d.norm();
    if (dn <= 1e-12) continue;
    report.direction_series.emplace_back(s.t, d / dn);
  }
  if (report.direction_series.empty())
    throw InsufficientDataError("trajectory has no samples away from p");
  report.limit_estimate = report.direction_series.back().second;

  std::size_t quarter = (3 * report.direction_series.size()) / 4;
  for (std::size_t i = quarter; i < report.direction_series.size(); ++i)
    for (std::size_t j = i + 1; j < report.direction_series.size(); ++j) {
      double c = report.direction_series[i].second.dot(
          report.direction_series[j].second);
      report.max_pairwise_angle = std::max(
          report.max_pairwise_angle, std::acos(std::clamp(c, -1.0, 1.0)));
    }

  Eigen::MatrixXd tan = manifold.tangent_basis(p);
  double tangential = (tan.transpose() * report.limit_estimate).norm();
  report.tangent_angle = std::acos(std::clamp(tangential, 0.0, 1.0));
  return report;
}

struct ZSetReport {
  int k = 0;
  int min_admissible_k = 0;
  double theta_hat = 0.0;
  std::vector<EventCrossing> crossings;  // dg_dt is tau-dot at the crossing
};

// Smallest k with 2 k theta < 2k - 1, i.e. k > 1 / (2 (1 - theta)).
inline int min_z_set_order(double theta) {
  if (theta >= 1.0) throw std::invalid_argument("theta must be below 1");
  return static_cast<int>(std::floor(1.0 / (2.0 * (1.0 - theta)))) + 1;
}

// Counts crossings of tau(t) = (f(gamma) - f(p)) - |gamma - p|^(2k); the
// crossing derivative must be strictly negative for a transversal exit.
inline ZSetReport z_set_crossings(const ScalarField& field,
                                  const Trajectory& traj,
                                  const Eigen::VectorXd& p, int k,
                                  double theta_margin = 0.05) {
  ZSetReport report;
  report.k = k;
  const double f_p = field.value(p);
  report.theta_hat = estimate_lojasiewicz(field, traj, p, f_p).exponent;
  report.min_admissible_k =
      min_z_set_order(std::min(report.theta_hat + theta_margin, 0.999));
  if (k < report.min_admissible_k)
    throw std::invalid_argument(
        "k = " + std::to_string(k) + " is below the admissible minimum k = " +
        std::to_string(report.min_admissible_k) +
        " derived from theta = " + std::to_string(report.theta_hat));
  report.crossings = event_crossings(traj, [&](const Eigen::VectorXd& x) {
    return (field.value(x) - f_p) - std::pow((x - p).norm(), 2.0 * k);
  });
  return report;
}

struct DensityReport {
  std::vector<Eigen::VectorXd> limits;  // achieved limit points on N
  std::size_t non_convergent = 0;
  double max_gap = 0.0;  // largest mesh-to-nearest-limit distance
  std::optional<AnalysisFit> length_fit;  // arc length ~ C dist(x0, N)^alpha
  double length_bound_constant = 0.0;     // smallest C with l <= C dist^alpha
};

// Integrates every start, collects limit points on N, and reports the
// maximal mesh gap (the numerical density witness) plus the arc-length
// versus start-distance bound.
inline DensityReport dense_limit_survey(
    const ScalarField& field, const ManifoldModel& manifold,
    const std::vector<Eigen::VectorXd>& starts, const IntegratorConfig& cfg,
    const std::vector<Eigen::VectorXd>& mesh, double on_manifold_tol = 1e-2) {
  DensityReport report;
  std::vector<double> log_d, log_l;
  for (const auto& x0 : starts) {
    Trajectory traj = integrate_flow(field, x0, cfg);
    const auto& end = traj.back();
    if (traj.stop_reason != StopReason::kGradNormMet ||
        manifold.distance(end.x) > on_manifold_tol) {
      ++report.non_convergent;
      continue;
    }
    report.limits.push_back(end.x);
    double d = manifold.distance(x0);
    if (d > 1e-12 && end.arc_length > 0.0) {
      log_d.push_back(std::log(d));
      log_l.push_back(std::log(end.arc_length));
    }
  }
  for (const auto& m : mesh) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& l : report.limits)
      nearest = std::min(nearest, (m - l).norm());
    report.max_gap = std::max(report.max_gap, nearest);
  }
  try {
    report.length_fit = detail::fit_loglog(log_d, log_l);
    double log_c = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log_d.size(); ++i)
      log_c = std::max(log_c, log_l[i] - report.length_fit->exponent * log_d[i]);
    report.length_bound_constant = std::exp(log_c);
  } catch (const InsufficientDataError&) {
    report.length_fit.reset();
  }
  return report;
}

}  // namespace gradflow
