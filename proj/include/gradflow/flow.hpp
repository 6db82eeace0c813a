#pragma once

// Gradient-flow integration: dx/dt = -grad f(x), x(0) = x0, solved with an
// embedded Dormand-Prince 5(4) pair. Arc length rides along as an extra
// state component with derivative |grad f|, so it shares the stage values
// and carries the same order as the state.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gradflow/field.hpp"

namespace gradflow {

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  double t_max = 1e6;
  double stop_grad_norm = 1e-8;
  double stop_value_delta = 0.0;  // 0 disables
  // Sample times the integrator must land on exactly (sorted ascending).
  std::vector<double> record_times;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::invalid_argument("tolerances must be strictly positive");
    if (!(max_step > 0.0))
      throw std::invalid_argument("max_step must be strictly positive");
    if (!(t_max > 0.0) || !std::isfinite(t_max))
      throw std::invalid_argument("t_max must be positive and finite");
    if (!(stop_grad_norm > 0.0))
      throw std::invalid_argument("stop_grad_norm must be strictly positive");
    if (stop_value_delta < 0.0)
      throw std::invalid_argument("stop_value_delta must be nonnegative");
  }
};

enum class StopReason { kGradNormMet, kHorizonReached, kStepUnderflow };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kGradNormMet: return "grad_norm_met";
    case StopReason::kHorizonReached: return "horizon_reached";
    case StopReason::kStepUnderflow: return "step_underflow";
  }
  return "?";
}

struct TrajectorySample {
  double t;
  Eigen::VectorXd x;
  double f_value;
  double grad_norm;
  double arc_length;
};

struct Trajectory {
  std::string field_id;
  std::vector<TrajectorySample> samples;
  std::vector<Eigen::VectorXd> velocity;  // dx/dt at each sample
  StopReason stop_reason = StopReason::kHorizonReached;

  std::size_t size() const { return samples.size(); }
  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }

  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }

  // Cubic Hermite dense output between stored samples.
  Eigen::VectorXd state_at(double t) const {
    std::size_t i = locate(t);
    const auto& s0 = samples[i];
    const auto& s1 = samples[i + 1];
    const double h = s1.t - s0.t;
    const double u = (t - s0.t) / h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * s0.x + (u3 - 2 * u2 + u) * h * velocity[i] +
           (-2 * u3 + 3 * u2) * s1.x + (u3 - u2) * h * velocity[i + 1];
  }

  std::size_t locate(double t) const {
    if (samples.size() < 2 || t < t_begin() - 1e-12 || t > t_end() + 1e-12)
      throw std::invalid_argument("time outside trajectory range");
    auto it = std::upper_bound(
        samples.begin(), samples.end(), t,
        [](double v, const TrajectorySample& s) { return v < s.t; });
    std::size_t i = static_cast<std::size_t>(it - samples.begin());
    if (i == 0) return 0;
    if (i >= samples.size()) return samples.size() - 2;
    return i - 1;
  }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace detail

// Solves the gradient flow of `field` from x0. `sign` +1 integrates the
// reversed field (+grad f); used for stable-manifold tracing.
inline Trajectory integrate_flow(const ScalarField& field,
                                 const Eigen::VectorXd& x0,
                                 const IntegratorConfig& cfg,
                                 double sign = -1.0) {
  cfg.validate();
  if (x0.size() != field.dimension())
    throw std::invalid_argument("initial point has wrong dimension");
  if (!x0.allFinite())
    throw std::invalid_argument("initial point has non-finite coordinates");

  using VectorXd = Eigen::VectorXd;
  const int n = field.dimension();

  // Augmented state: x plus cumulative arc length.
  auto rhs = [&](const VectorXd& y) {
    VectorXd dy(n + 1);
    VectorXd g = field.gradient(y.head(n));
    dy.head(n) = sign * g;
    dy[n] = g.norm();
    return dy;
  };

  Trajectory traj;
  traj.field_id = field.name();

  VectorXd y(n + 1);
  y.head(n) = x0;
  y[n] = 0.0;

  double t = 0.0;
  VectorXd k1 = rhs(y);

  auto push_sample = [&](double tt, const VectorXd& yy, const VectorXd& dyy) {
    traj.samples.push_back({tt, yy.head(n), field.value(yy.head(n)),
                            dyy.head(n).norm(), yy[n]});
    traj.velocity.push_back(dyy.head(n));
  };
  push_sample(t, y, k1);

  std::size_t next_record = 0;
  auto skip_past_records = [&](double tt) {
    while (next_record < cfg.record_times.size() &&
           cfg.record_times[next_record] <= tt + 1e-15)
      ++next_record;
  };
  skip_past_records(0.0);

  if (traj.samples.back().grad_norm < cfg.stop_grad_norm) {
    traj.stop_reason = StopReason::kGradNormMet;
    return traj;
  }

  using T = detail::Dopri5;
  double h = std::min(cfg.max_step, 1e-3);
  double f_prev = traj.samples.back().f_value;

  while (t < cfg.t_max) {
    h = std::min({h, cfg.max_step, cfg.t_max - t});
    bool hit_record = false;
    if (next_record < cfg.record_times.size() &&
        t + h >= cfg.record_times[next_record] - 1e-15) {
      h = cfg.record_times[next_record] - t;
      hit_record = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      if (hit_record) {  // record time coincides with t; resample here
        skip_past_records(t);
        continue;
      }
      traj.stop_reason = StopReason::kStepUnderflow;
      return traj;
    }

    VectorXd k2 = rhs(y + h * (T::a21 * k1));
    VectorXd k3 = rhs(y + h * (T::a31 * k1 + T::a32 * k2));
    VectorXd k4 = rhs(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    VectorXd k5 =
        rhs(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
    VectorXd k6 = rhs(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                               T::a64 * k4 + T::a65 * k5));
    VectorXd ynew = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 +
                             T::b5 * k5 + T::b6 * k6);
    VectorXd k7 = rhs(ynew);
    VectorXd err_vec = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 +
                            T::e6 * k6 + T::e7 * k7);

    double err = 0.0;
    for (int i = 0; i <= n; ++i) {
      double scale =
          cfg.abs_tol +
          cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      double r = err_vec[i] / scale;
      err += r * r;
    }
    err = std::sqrt(err / (n + 1));

    if (!ynew.allFinite())
      throw std::runtime_error("integration produced non-finite state");

    if (err <= 1.0) {
      t += h;
      y = ynew;
      k1 = k7;  // FSAL
      push_sample(t, y, k1);
      if (hit_record) skip_past_records(t);

      const auto& s = traj.samples.back();
      if (s.grad_norm < cfg.stop_grad_norm) {
        traj.stop_reason = StopReason::kGradNormMet;
        return traj;
      }
      if (cfg.stop_value_delta > 0.0 &&
          f_prev - s.f_value < cfg.stop_value_delta) {
        traj.stop_reason = StopReason::kGradNormMet;
        return traj;
      }
      f_prev = s.f_value;
    }

    double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
  }
  traj.stop_reason = StopReason::kHorizonReached;
  return traj;
}

// Max residual of d/dt f(gamma) + |grad f(gamma)|^2: finite-difference df/dt
// between consecutive samples against the exact dissipation rate at Hermite
// midpoints.
inline double dissipation_residual(const ScalarField& field,
                                   const Trajectory& traj) {
  if (traj.size() < 2)
    throw std::invalid_argument("dissipation residual needs >= 2 samples");
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const auto& s0 = traj.samples[i];
    const auto& s1 = traj.samples[i + 1];
    double dfdt = (s1.f_value - s0.f_value) / (s1.t - s0.t);
    Eigen::VectorXd xm = traj.state_at(0.5 * (s0.t + s1.t));
    double rate = field.gradient(xm).squaredNorm();
    worst = std::max(worst, std::abs(dfdt + rate));
  }
  return worst;
}

struct EventCrossing {
  double t;
  Eigen::VectorXd x;
  double dg_dt;  // transversality witness
};

// Sign changes of g along the trajectory, refined on the Hermite interpolant
// by bisection to |g| < 1e-10 (or to time-resolution exhaustion).
inline std::vector<EventCrossing> event_crossings(
    const Trajectory& traj,
    const std::function<double(const Eigen::VectorXd&)>& g) {
  std::vector<EventCrossing> out;
  if (traj.samples.empty()) return out;

  auto g_at = [&](double t) { return g(traj.state_at(t)); };
  auto dg_at = [&](double t) {
    double h = std::max(1e-8, 1e-8 * std::abs(t));
    double lo = std::max(traj.t_begin(), t - h);
    double hi = std::min(traj.t_end(), t + h);
    if (hi <= lo) return 0.0;
    return (g_at(hi) - g_at(lo)) / (hi - lo);
  };

  const double g0 = g(traj.samples.front().x);
  if (g0 == 0.0)
    out.push_back({traj.t_begin(), traj.samples.front().x,
                   traj.size() >= 2 ? dg_at(traj.t_begin()) : 0.0});
  if (traj.size() < 2) return out;

  double prev_g = g0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    double t0 = traj.samples[i].t, t1 = traj.samples[i + 1].t;
    double g1 = g(traj.samples[i + 1].x);
    if (g1 == 0.0) {
      out.push_back({t1, traj.samples[i + 1].x, dg_at(t1)});
    } else if (prev_g != 0.0 && std::signbit(prev_g) != std::signbit(g1)) {
      double lo = t0, hi = t1, glo = prev_g;
      double tm = 0.5 * (lo + hi), gm = 0.0;
      for (int iter = 0; iter < 200; ++iter) {
        tm = 0.5 * (lo + hi);
        gm = g_at(tm);
        if (std::abs(gm) < 1e-10 || hi - lo < 1e-15 * std::max(1.0, hi)) break;
        if (std::signbit(gm) == std::signbit(glo)) {
          lo = tm;
          glo = gm;
        } else {
          hi = tm;
        }
      }
      out.push_back({tm, traj.state_at(tm), dg_at(tm)});
    }
    prev_g = g1;
  }
  return out;
}

// Numerical l(gamma[t, T_end]); with grad_norm_met termination this is the
// finite proxy for the tail length l(gamma[t, inf)).
inline double tail_arc_length(const Trajectory& traj, double t) {
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");
  if (t < traj.t_begin() - 1e-12 || t > traj.t_end() + 1e-12)
    throw std::invalid_argument("time outside trajectory range");
  double total = traj.back().arc_length;
  if (traj.size() < 2) return 0.0;
  // Interpolate arc length linearly inside a step (consistent to step size).
  std::size_t i = traj.locate(std::clamp(t, traj.t_begin(), traj.t_end()));
  const auto& s0 = traj.samples[i];
  const auto& s1 = traj.samples[i + 1];
  double u = (t - s0.t) / (s1.t - s0.t);
  double at = s0.arc_length + u * (s1.arc_length - s0.arc_length);
  return total - at;
}

}  // namespace gradflow
