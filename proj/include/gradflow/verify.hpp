#pragma once

// Catalog-wide verification suite. Each check returns a tagged verdict with
// the measured value and its threshold; the CLI `verify` subcommand and the
// acceptance test binary both run this suite.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gradflow/analysis.hpp"
#include "gradflow/catalog.hpp"
#include "gradflow/critical.hpp"
#include "gradflow/field.hpp"
#include "gradflow/flow.hpp"
#include "gradflow/io.hpp"
#include "gradflow/rng.hpp"

namespace gradflow {

struct Verdict {
  std::string id;      // "C7", "A2", ...
  std::string name;
  std::string tag;     // theorem tag this verdict tests
  bool pass = false;
  std::string detail;  // measured values and thresholds
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20260823;
  std::string out_dir;  // artifacts emitted here when nonempty
  bool include_auxiliary = true;
};

namespace detail {

class VerdictBuilder {
 public:
  VerdictBuilder(std::string id, std::string name, std::string tag)
      : start_(std::chrono::steady_clock::now()) {
    v_.id = std::move(id);
    v_.name = std::move(name);
    v_.tag = std::move(tag);
    v_.pass = true;
  }

  void require(bool ok, const std::string& what) {
    if (!ok) v_.pass = false;
    note((ok ? "" : "FAIL: ") + what);
  }

  void note(const std::string& what) {
    if (!v_.detail.empty()) v_.detail += "; ";
    v_.detail += what;
  }

  Verdict finish() {
    v_.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start_)
                     .count();
    return v_;
  }

 private:
  Verdict v_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline IntegratorConfig tight_config() {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  cfg.max_step = 0.1;
  cfg.stop_grad_norm = 1e-9;
  return cfg;
}

inline std::vector<CatalogEntry> verification_catalog() {
  std::vector<CatalogEntry> entries;
  entries.push_back(make_catalog_field("quad", {{"c1", 1.0}, {"c2", 1.0}}));
  entries.push_back(make_catalog_field("quad_saddle"));
  entries.push_back(make_catalog_field("x4y2"));
  entries.push_back(make_catalog_field("x_pow_2k", {{"k", 1.0}}));
  entries.push_back(make_catalog_field("x_pow_2k", {{"k", 2.0}}));
  entries.push_back(make_catalog_field("x_pow_2k", {{"k", 3.0}}));
  entries.push_back(make_catalog_field("torus_height"));
  entries.push_back(make_catalog_field("circle_well"));
  entries.push_back(make_catalog_field("y_squared"));
  entries.push_back(make_catalog_field("warped_bott"));
  return entries;
}

inline Eigen::VectorXd random_point(Rng& rng, const ScalarField& field) {
  const int n = field.dimension();
  if (field.domain() == DomainKind::kFlatTorus) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(0.0, field.periods()[i]);
    return x;
  }
  return rng.uniform_box(n, -2.0, 2.0);
}

}  // namespace detail

// --- individual criteria ---------------------------------------------------

inline Verdict check_derivatives(Rng& rng) {
  detail::VerdictBuilder b("C1", "derivative correctness", "gf.gradient_field");
  double worst_grad = 0.0, worst_sym = 0.0;
  for (const auto& entry : detail::verification_catalog()) {
    const auto& f = entry.field;
    for (int s = 0; s < 1000; ++s) {
      Eigen::VectorXd x = detail::random_point(rng, f);
      Eigen::VectorXd g = f.gradient(x);
      Eigen::VectorXd fd = finite_diff_gradient(f, x, 1e-5);
      double rel = (g - fd).lpNorm<Eigen::Infinity>() /
                   (1.0 + g.lpNorm<Eigen::Infinity>());
      worst_grad = std::max(worst_grad, rel);
      Eigen::MatrixXd h = f.hessian(x);
      worst_sym = std::max(
          worst_sym,
          (h - h.transpose()).cwiseAbs().maxCoeff());
    }
    // Declared critical points really are critical.
    for (const auto& rcp : entry.reference_critical_points)
      b.require(f.gradient(rcp.location).norm() < 1e-10,
                entry.id + " reference critical point has |grad| < 1e-10");
  }
  b.require(worst_grad < 1e-6, "max relative gradient mismatch " +
                                   detail::fmt(worst_grad) + " < 1e-6");
  b.require(worst_sym < 1e-12,
            "max Hessian asymmetry " + detail::fmt(worst_sym) + " < 1e-12");
  return b.finish();
}

inline Verdict check_integrator_accuracy() {
  detail::VerdictBuilder b("C2", "integrator accuracy vs closed forms",
                           "gf.definition");
  IntegratorConfig cfg = detail::tight_config();
  cfg.stop_grad_norm = 1e-300;  // run to the horizon so checkpoints are hit
  cfg.t_max = 2.0 + 1e-9;
  for (int j = 1; j <= 20; ++j) cfg.record_times.push_back(0.1 * j);

  double worst = 0.0;
  {
    auto f = make_catalog_field("x_pow_2k", {{"k", 1.0}}).field;
    Eigen::VectorXd x0(1);
    x0[0] = 1.0;
    Trajectory traj = integrate_flow(f, x0, cfg);
    for (double t : cfg.record_times) {
      double exact = std::exp(-2.0 * t);
      double got = traj.state_at(t)[0];
      worst = std::max(worst, std::abs(got - exact) / std::abs(exact));
    }
  }
  {
    auto f = make_catalog_field("x_pow_2k", {{"k", 2.0}}).field;
    Eigen::VectorXd x0(1);
    x0[0] = 1.0;
    Trajectory traj = integrate_flow(f, x0, cfg);
    for (double t : cfg.record_times) {
      double exact = 1.0 / std::sqrt(1.0 + 8.0 * t);
      double got = traj.state_at(t)[0];
      worst = std::max(worst, std::abs(got - exact) / std::abs(exact));
    }
  }
  b.require(worst < 1e-6,
            "max relative checkpoint error " + detail::fmt(worst) + " < 1e-6");
  return b.finish();
}

inline Verdict check_dissipation(Rng& rng) {
  detail::VerdictBuilder b("C3", "dissipation identity", "gf.dissipation");
  // Residual error is O(h^2 lambda^3 f) for local decay rate lambda; the
  // circle_well run has lambda ~ 25, so the step cap must be ~1e-3.
  IntegratorConfig cfg = detail::tight_config();
  cfg.max_step = 1e-3;
  cfg.t_max = 50.0;
  double worst = 0.0;
  auto run = [&](const ScalarField& f, const Eigen::VectorXd& x0) {
    Trajectory traj = integrate_flow(f, x0, cfg);
    if (traj.size() >= 2)
      worst = std::max(worst, dissipation_residual(f, traj));
  };
  run(make_catalog_field("x_pow_2k", {{"k", 1.0}}).field,
      Eigen::VectorXd::Ones(1));
  run(make_catalog_field("x_pow_2k", {{"k", 2.0}}).field,
      Eigen::VectorXd::Ones(1));
  {
    auto torus = make_catalog_field("torus_height").field;
    for (int s = 0; s < 5; ++s) run(torus, detail::random_point(rng, torus));
  }
  run(make_catalog_field("circle_well").field, Eigen::Vector2d(1.2, 0.3));
  run(make_catalog_field("warped_bott").field, Eigen::Vector2d(0.5, 0.5));
  run(make_catalog_field("quad", {{"c1", 1.0}, {"c2", 1.0}}).field,
      Eigen::Vector2d(1.0, 0.0));
  b.require(worst < 1e-3,
            "max dissipation residual " + detail::fmt(worst) + " < 1e-3");
  return b.finish();
}

inline std::vector<CriticalPoint> torus_critical_points() {
  auto torus = make_catalog_field("torus_height").field;
  const double two_pi = 2.0 * std::numbers::pi;
  return sweep_critical(torus, Eigen::Vector2d(0.0, 0.0),
                        Eigen::Vector2d(two_pi, two_pi), {8, 8});
}

inline Verdict check_classification() {
  detail::VerdictBuilder b("C4", "torus critical point classification",
                           "morse.classification");
  auto pts = torus_critical_points();
  b.require(pts.size() == 4,
            "sweep found " + std::to_string(pts.size()) + " points (want 4)");
  std::map<std::string, int> classes;
  std::multiset<int> indices;
  for (const auto& p : pts) {
    classes[to_string(p.cls)]++;
    indices.insert(p.index);
  }
  b.require(classes["local_max"] == 1 && classes["saddle"] == 2 &&
                classes["local_min"] == 1,
            "classes {max:1, saddle:2, min:1}");
  b.require(indices == std::multiset<int>({0, 1, 1, 2}), "indices {0,1,1,2}");
  for (const auto& p : pts)
    b.require(p.nullity == 0, "non-degenerate (Morse) point");
  return b.finish();
}

inline Verdict check_almost_all_convergence(Rng& rng) {
  detail::VerdictBuilder b("C5", "almost-all convergence to a minimum",
                           "morse.almost_all_convergence");
  auto torus = make_catalog_field("torus_height").field;
  const double pi = std::numbers::pi;
  Eigen::Vector2d minimum(pi, pi);
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-8;
  cfg.abs_tol = 1e-10;
  cfg.max_step = 0.5;
  cfg.t_max = 1e4;
  cfg.stop_grad_norm = 1e-8;
  int converged = 0;
  const int trials = 1000;
  for (int s = 0; s < trials; ++s) {
    Eigen::VectorXd x0 = detail::random_point(rng, torus);
    Trajectory traj = integrate_flow(torus, x0, cfg);
    if (traj.stop_reason == StopReason::kGradNormMet &&
        torus.distance(traj.back().x, minimum) < 1e-4)
      ++converged;
  }
  b.require(converged >= 990, std::to_string(converged) + "/1000 starts reach"
                              " the minimum (want >= 990)");
  return b.finish();
}

inline Verdict check_enter_once(Rng& rng) {
  detail::VerdictBuilder b("C6", "enter-once near critical points",
                           "morse.enter_once");
  auto torus = make_catalog_field("torus_height").field;
  auto pts = torus_critical_points();
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-11;
  cfg.max_step = 0.05;
  cfg.t_max = 1e4;
  cfg.stop_grad_norm = 1e-9;
  const double r = 0.1;
  int violations = 0;
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd x0 = detail::random_point(rng, torus);
    Trajectory traj = integrate_flow(torus, x0, cfg);
    for (const auto& p : pts) {
      // Indices of samples inside the ball must form one contiguous block.
      bool seen = false, left = false;
      for (const auto& sample : traj.samples) {
        bool inside = torus.distance(sample.x, p.location) < r;
        if (inside && left) {
          ++violations;
          break;
        }
        if (inside) seen = true;
        if (seen && !inside) left = true;
      }
    }
  }
  b.require(violations == 0, std::to_string(violations) +
                                 " re-entries across 100 trajectories x 4 balls");
  return b.finish();
}

inline Verdict check_connections() {
  detail::VerdictBuilder b("C7", "heteroclinic connections and dimensions",
                           "smale.dimension_formula");
  auto torus = make_catalog_field("torus_height").field;
  auto pts = torus_critical_points();
  IntegratorConfig cfg = detail::tight_config();
  cfg.t_max = 1e3;
  auto report = find_connections(torus, pts, cfg);

  int min_idx = -1;
  std::vector<int> saddle_ids;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (pts[i].cls == CriticalClass::kLocalMin) min_idx = i;
    if (pts[i].cls == CriticalClass::kSaddle) saddle_ids.push_back(i);
  }
  b.require(min_idx >= 0 && saddle_ids.size() == 2, "one minimum, two saddles");

  for (int si : saddle_ids) {
    int to_min = 0;
    for (const auto& c : report.connections)
      if (c.source == si && c.target == min_idx) {
        ++to_min;
        b.require(c.expected_dimension == 1,
                  "saddle->min family dimension 1 (index drop)");
        b.require(pts[c.source].value > pts[c.target].value,
                  "f decreases from source to target");
      }
    b.require(to_min == 2, "saddle yields " + std::to_string(to_min) +
                               " connections to the minimum (want 2)");
  }

  // Every connection crosses any regular level exactly once (flow-map tube).
  int bad_crossings = 0;
  for (const auto& c : report.connections) {
    double fp = pts[c.source].value, fq = pts[c.target].value;
    for (double frac : {0.25, 0.5, 0.75}) {
      double level = fq + frac * (fp - fq);
      auto crossings = event_crossings(
          c.representative,
          [&](const Eigen::VectorXd& x) { return torus.value(x) - level; });
      if (crossings.size() != 1) ++bad_crossings;
    }
  }
  b.require(bad_crossings == 0,
            "level slices crossed exactly once on every connection");
  b.note(std::to_string(report.connections.size()) + " connections, " +
         std::to_string(report.unresolved) + " unresolved");
  return b.finish();
}

struct LojaRun {
  std::string label;
  ScalarField field;
  Trajectory traj;
  Eigen::VectorXd limit;
  double f_limit = 0.0;
};

inline std::vector<LojaRun> lojasiewicz_runs() {
  std::vector<LojaRun> runs;
  auto add = [&](const std::string& label, const ScalarField& f,
                 const Eigen::VectorXd& x0, const IntegratorConfig& cfg,
                 const Eigen::VectorXd& limit, double f_limit) {
    runs.push_back({label, f, integrate_flow(f, x0, cfg), limit, f_limit});
  };
  IntegratorConfig cfg = detail::tight_config();
  cfg.t_max = 1e8;
  // Degenerate tails decay algebraically (x ~ t^{-1/(2k-2)}), so reaching the
  // gradient threshold takes t ~ 1e5..1e6; the error controller grows steps
  // proportionally to t there, which the cap must allow.
  cfg.max_step = 1e4;

  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
  add("x^2", make_catalog_field("x_pow_2k", {{"k", 1.0}}).field, one, cfg,
      zero1, 0.0);
  add("x^4", make_catalog_field("x_pow_2k", {{"k", 2.0}}).field, one, cfg,
      zero1, 0.0);
  add("x^6", make_catalog_field("x_pow_2k", {{"k", 3.0}}).field, one, cfg,
      zero1, 0.0);
  add("x4y2", make_catalog_field("x4y2").field, Eigen::Vector3d(1.0, 1.0, 0.0),
      cfg, Eigen::Vector3d(0.0, 0.0, 0.0), 0.0);
  {
    const double pi = std::numbers::pi;
    add("torus_height", make_catalog_field("torus_height").field,
        Eigen::Vector2d(2.0, 2.5), cfg, Eigen::Vector2d(pi, pi), -2.0);
  }
  add("quad_bowl", make_catalog_field("quad", {{"c1", 1.0}, {"c2", 1.0}}).field,
      Eigen::Vector2d(1.0, 0.5), cfg, Eigen::Vector2d(0.0, 0.0), 0.0);
  add("circle_well", make_catalog_field("circle_well").field,
      Eigen::Vector2d(1.5, 0.0), cfg, Eigen::Vector2d(1.0, 0.0), 0.0);
  add("y_squared", make_catalog_field("y_squared").field,
      Eigen::Vector2d(0.7, 0.3), cfg, Eigen::Vector2d(0.0, 0.3), 0.0);
  {
    auto wb = make_catalog_field("warped_bott");
    IntegratorConfig wcfg = cfg;
    Trajectory traj = integrate_flow(wb.field, Eigen::Vector2d(0.5, 0.5), wcfg);
    Eigen::VectorXd limit = wb.manifold->project(traj.back().x);
    runs.push_back({"warped_bott", wb.field, std::move(traj), limit, 0.0});
  }
  return runs;
}

inline Verdict check_lojasiewicz_exponents(const std::vector<LojaRun>& runs) {
  detail::VerdictBuilder b("C8", "Lojasiewicz exponents", "loja.exponent");
  std::map<std::string, double> expected = {
      {"x^2", 0.5}, {"x^4", 0.75}, {"x^6", 5.0 / 6.0}};
  for (const auto& run : runs) {
    AnalysisFit fit =
        estimate_lojasiewicz(run.field, run.traj, run.limit, run.f_limit);
    auto it = expected.find(run.label);
    if (it != expected.end())
      b.require(std::abs(fit.exponent - it->second) < 0.02,
                run.label + " theta = " + detail::fmt(fit.exponent) +
                    " (want " + detail::fmt(it->second) + " +- 0.02)");
    b.require(fit.exponent >= 0.45 && fit.exponent < 1.0,
              run.label + " theta in [0.45, 1.0)");
    // The fitted inequality holds pointwise on the window (0.5 fit slack).
    double c_hat = std::exp(fit.log_constant);
    bool pointwise = true;
    for (std::size_t i = fit.window_begin; i <= fit.window_end; ++i) {
      const auto& s = run.traj.samples[i];
      double gap = s.f_value - run.f_limit;
      if (gap <= 1e-13) continue;
      if (s.grad_norm < 0.5 * c_hat * std::pow(gap, fit.exponent))
        pointwise = false;
    }
    b.require(pointwise, run.label + " pointwise bound with 0.5 slack");
  }
  return b.finish();
}

inline Verdict check_distance_inequalities(Rng& rng) {
  detail::VerdictBuilder b("C9", "distance inequality", "loja.distance");
  {
    auto e = make_catalog_field("y_squared");
    std::vector<Eigen::VectorXd> cloud;
    for (int i = 0; i < 400; ++i)
      cloud.push_back(Eigen::Vector2d(rng.uniform(-0.5, 0.5),
                                      rng.uniform(-1.0, 1.0)));
    auto check = check_distance_inequality(e.field, *e.manifold, cloud);
    b.require(std::abs(check.fit.exponent - 2.0) < 0.05,
              "y_squared alpha = " + detail::fmt(check.fit.exponent) +
                  " (want 2 +- 0.05)");
    b.require(check.worst_violation <= 1e-9, "y_squared lower bound holds");
  }
  {
    auto e = make_catalog_field("circle_well");
    std::vector<Eigen::VectorXd> cloud;
    for (int i = 0; i < 400; ++i) {
      double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      double r = rng.uniform(0.9, 1.1);
      cloud.push_back(Eigen::Vector2d(r * std::cos(a), r * std::sin(a)));
    }
    auto check = check_distance_inequality(e.field, *e.manifold, cloud);
    b.require(std::abs(check.fit.exponent - 2.0) < 0.1,
              "circle_well alpha = " + detail::fmt(check.fit.exponent) +
                  " (want 2 +- 0.1)");
    b.require(check.worst_violation <= 1e-9, "circle_well lower bound holds");
  }
  return b.finish();
}

inline Verdict check_convergence_rates(const std::vector<LojaRun>& runs) {
  detail::VerdictBuilder b("C10", "tail-length convergence rate",
                           "loja.convergence_rate");
  std::map<std::string, double> expected = {{"x^2", 0.5}, {"x^4", 0.25}};
  for (const auto& run : runs) {
    auto it = expected.find(run.label);
    if (it == expected.end()) continue;
    AnalysisFit fit = tail_length_rate(run.traj, run.limit, run.f_limit);
    b.require(std::abs(fit.exponent - it->second) < 0.02,
              run.label + " beta = " + detail::fmt(fit.exponent) + " (want " +
                  detail::fmt(it->second) + " +- 0.02)");
    b.require(fit.exponent > 0.0 && fit.exponent < 1.0,
              run.label + " beta in (0, 1)");
  }
  return b.finish();
}

inline Verdict check_normal_bias() {
  detail::VerdictBuilder b("C11", "normal bias toward the critical manifold",
                           "bott.normal_bias");
  {
    auto e = make_catalog_field("warped_bott");
    IntegratorConfig cfg = detail::tight_config();
    cfg.stop_grad_norm = 1e-300;
    cfg.max_step = 0.05;
    cfg.t_max = 7.0;
    Trajectory short_run =
        integrate_flow(e.field, Eigen::Vector2d(0.5, 0.5), cfg);
    cfg.t_max = 14.0;
    Trajectory long_run =
        integrate_flow(e.field, Eigen::Vector2d(0.5, 0.5), cfg);
    Eigen::VectorXd p = e.manifold->project(long_run.back().x);
    BiasReport r1 = normal_bias(short_run, *e.manifold, p);
    BiasReport r2 = normal_bias(long_run, *e.manifold, p);
    b.require(std::isfinite(r2.tail_sup) && r2.tail_sup > 0.0,
              "warped_bott tail_sup finite: " + detail::fmt(r2.tail_sup));
    // The trend check runs on the short horizon: past t ~ 7 the tangential
    // displacement freezes at its double-precision fixed point (exactly 0),
    // which would collapse the tail median without indicating any blow-up.
    b.require(r1.bounded, "warped_bott ratio trend-free over the tail");
    double change =
        std::abs(r2.tail_sup - r1.tail_sup) / std::max(r1.tail_sup, 1e-300);
    b.require(change < 0.10, "tail_sup change on horizon doubling " +
                                 detail::fmt(change) + " < 0.10");
  }
  auto expect_zero = [&](const std::string& id, const Eigen::VectorXd& x0) {
    auto e = make_catalog_field(id);
    IntegratorConfig cfg = detail::tight_config();
    cfg.t_max = 100.0;
    Trajectory traj = integrate_flow(e.field, x0, cfg);
    Eigen::VectorXd p = e.manifold->project(traj.back().x);
    BiasReport r = normal_bias(traj, *e.manifold, p);
    double sup = 0.0;
    for (const auto& [t, ratio] : r.ratio_series) sup = std::max(sup, ratio);
    b.require(sup <= 1e-12,
              id + " tangential ratio identically 0 (sup " + detail::fmt(sup) + ")");
  };
  expect_zero("y_squared", Eigen::Vector2d(0.5, 0.3));
  expect_zero("circle_well", Eigen::Vector2d(1.5, 0.0));
  return b.finish();
}

inline Verdict check_secant_limits() {
  detail::VerdictBuilder b("C12", "secant direction limit", "bott.secant_limit");
  const double half_pi = 0.5 * std::numbers::pi;
  auto run = [&](const std::string& id, const Eigen::VectorXd& x0,
                 double t_max) {
    auto e = make_catalog_field(id);
    IntegratorConfig cfg = detail::tight_config();
    cfg.stop_grad_norm = 1e-300;
    cfg.max_step = 0.05;
    cfg.t_max = t_max;
    Trajectory traj = integrate_flow(e.field, x0, cfg);
    Eigen::VectorXd p = e.manifold->project(traj.back().x);
    SecantReport r = secant_limit(traj, *e.manifold, p);
    b.require(r.max_pairwise_angle < 1e-3,
              id + " tail secants Cauchy: max angle " +
                  detail::fmt(r.max_pairwise_angle) + " < 1e-3");
    b.require(std::abs(r.tangent_angle - half_pi) < 1e-2,
              id + " limit normal to N: angle " + detail::fmt(r.tangent_angle));
  };
  run("warped_bott", Eigen::Vector2d(0.5, 0.5), 10.0);
  run("y_squared", Eigen::Vector2d(0.7, 0.3), 12.0);
  run("circle_well", Eigen::Vector2d(1.5, 0.0), 10.0);
  return b.finish();
}

inline Verdict check_z_set(Rng& rng) {
  detail::VerdictBuilder b("C13", "Z-set crossed at most once, transversally",
                           "loja.z_set");
  IntegratorConfig cfg = detail::tight_config();
  cfg.t_max = 1e8;
  cfg.max_step = 1e4;  // see lojasiewicz_runs: algebraic tails need long horizons
  int total_crossings = 0, bad_derivative = 0, multi = 0;
  {
    auto f = make_catalog_field("x_pow_2k", {{"k", 1.0}}).field;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
    for (int s = 0; s < 100; ++s) {
      Eigen::VectorXd x0(1);
      x0[0] = rng.uniform(0.05, 1.0);
      Trajectory traj = integrate_flow(f, x0, cfg);
      ZSetReport r = z_set_crossings(f, traj, p, 2);
      total_crossings += static_cast<int>(r.crossings.size());
      if (r.crossings.size() > 1) ++multi;
      for (const auto& c : r.crossings)
        if (!(c.dg_dt < 0.0)) ++bad_derivative;
    }
  }
  {
    auto f = make_catalog_field("x4y2").field;
    int min_k_seen = 0;
    for (int s = 0; s < 100; ++s) {
      Eigen::Vector3d x0(rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5),
                         rng.uniform(-1.0, 1.0));
      Trajectory traj = integrate_flow(f, x0, cfg);
      Eigen::Vector3d p(0.0, 0.0, x0[2]);  // the z-coordinate is conserved
      ZSetReport r = z_set_crossings(f, traj, p, 3);
      min_k_seen = std::max(min_k_seen, r.min_admissible_k);
      total_crossings += static_cast<int>(r.crossings.size());
      if (r.crossings.size() > 1) ++multi;
      for (const auto& c : r.crossings)
        if (!(c.dg_dt < 0.0)) ++bad_derivative;
    }
    b.require(min_k_seen >= 3, "x4y2 admissible k threshold >= 3 from theta");
    // k below the threshold must be rejected with the admissible minimum.
    bool rejected = false;
    try {
      Eigen::Vector3d x0(0.3, 0.3, 0.0);
      Trajectory traj = integrate_flow(f, x0, cfg);
      z_set_crossings(f, traj, Eigen::Vector3d(0.0, 0.0, 0.0), 1);
    } catch (const std::invalid_argument& err) {
      rejected = std::string(err.what()).find("k =") != std::string::npos;
    }
    b.require(rejected, "k below threshold rejected with named minimum");
  }
  b.require(multi == 0, "no trajectory crossed the Z-set more than once");
  b.require(bad_derivative == 0, "tau-dot < 0 at every crossing");
  b.note(std::to_string(total_crossings) + " crossings observed");
  return b.finish();
}

inline Verdict check_dense_limits() {
  detail::VerdictBuilder b("C14", "dense limit set on the critical manifold",
                           "loja.dense_limits");
  auto e = make_catalog_field("circle_well");
  IntegratorConfig cfg = detail::tight_config();
  cfg.t_max = 1e4;
  const int count = 200;
  std::vector<Eigen::VectorXd> starts;
  for (int i = 0; i < count; ++i) {
    double a = 2.0 * std::numbers::pi * i / count;
    double r = 1.2 + 0.6 * (i % 7) / 6.0;  // varied radii for the length fit
    starts.push_back(Eigen::Vector2d(r * std::cos(a), r * std::sin(a)));
  }
  auto mesh = e.manifold->mesh(317);
  DensityReport report =
      dense_limit_survey(e.field, *e.manifold, starts, cfg, mesh);
  b.require(report.non_convergent == 0, "all 200 starts converge onto N");
  const double nominal = 2.0 * std::numbers::pi / count;
  b.require(report.max_gap < 2.0 * nominal,
            "max gap " + detail::fmt(report.max_gap) + " < 2 x spacing " +
                detail::fmt(2.0 * nominal));
  b.require(report.length_fit.has_value(), "arc-length power law fitted");
  if (report.length_fit) {
    b.note("alpha = " + detail::fmt(report.length_fit->exponent) +
           ", bound C = " + detail::fmt(report.length_bound_constant));
    // Verify l <= C dist^alpha on a fresh radius.
    Trajectory probe =
        integrate_flow(e.field, Eigen::Vector2d(0.0, 1.45), cfg);
    double d = e.manifold->distance(Eigen::Vector2d(0.0, 1.45));
    double bound = report.length_bound_constant *
                   std::pow(d, report.length_fit->exponent);
    b.require(probe.back().arc_length <= bound * (1.0 + 1e-6),
              "fresh trajectory length within the fitted bound");
  }
  return b.finish();
}

// Emits the deterministic artifact set used by the reproducibility check.
inline std::vector<std::string> emit_artifacts(std::uint64_t seed,
                                               const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> files;
  Rng rng(seed);

  IntegratorConfig cfg = detail::tight_config();
  cfg.t_max = 1e6;
  cfg.max_step = 1e4;  // the x^4 tail is algebraic; let steps scale with t
  {
    auto f = make_catalog_field("x_pow_2k", {{"k", 2.0}}).field;
    Trajectory traj = integrate_flow(f, Eigen::VectorXd::Ones(1), cfg);
    std::string path = (dir / "flow_x4.csv").string();
    write_text_file(path, trajectory_csv(traj));
    files.push_back(path);
  }
  {
    auto torus = make_catalog_field("torus_height").field;
    Trajectory traj =
        integrate_flow(torus, detail::random_point(rng, torus), cfg);
    std::string path = (dir / "flow_torus.csv").string();
    write_text_file(path, trajectory_csv(traj));
    files.push_back(path);
  }
  {
    auto pts = torus_critical_points();
    std::string path = (dir / "critical_torus.csv").string();
    write_text_file(path, critical_points_csv(pts));
    files.push_back(path);
  }
  return files;
}

inline Verdict check_reproducibility(std::uint64_t seed,
                                     const std::filesystem::path& scratch) {
  detail::VerdictBuilder b("C15", "byte-identical artifacts per seed",
                           "artifact.reproducibility");
  namespace fs = std::filesystem;
  auto read = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  auto a = emit_artifacts(seed, scratch / "rep_a");
  auto c = emit_artifacts(seed, scratch / "rep_b");
  b.require(a.size() == c.size(), "same artifact manifest");
  for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i)
    b.require(read(a[i]) == read(c[i]),
              fs::path(a[i]).filename().string() + " byte-identical");
  return b.finish();
}

// --- auxiliary theorem checks (coverage beyond the numbered criteria) ------

inline Verdict check_subsequence_convergence(const std::vector<LojaRun>& runs) {
  detail::VerdictBuilder b("A1", "tail distance to the limit shrinks monotonely",
                           "loja.subsequence_convergence");
  for (const auto& run : runs) {
    // max over [t, end] of dist-to-limit must tend to 0 as t grows.
    std::vector<double> dist;
    for (const auto& s : run.traj.samples)
      dist.push_back(run.field.distance(s.x, run.limit));
    std::vector<double> tail_max(dist.size());
    double m = 0.0;
    for (std::size_t i = dist.size(); i-- > 0;) {
      m = std::max(m, dist[i]);
      tail_max[i] = m;
    }
    // The x^6 tail decays like t^{-1/4}; reaching 0.1% of the start distance
    // would take t ~ 4e10. 5% is attainable at the gradient stopping
    // threshold, and the sup-distance monotonicity is still enforced exactly.
    bool ok = tail_max.back() <= 0.05 * tail_max.front() + 1e-8;
    for (std::size_t i = 0; i + 1 < tail_max.size(); ++i)
      if (tail_max[i + 1] > tail_max[i] + 1e-12) ok = false;
    b.require(ok, run.label + " tail sup-distance shrinks monotonically");
  }
  return b.finish();
}

inline Verdict check_length_bound(Rng& rng) {
  detail::VerdictBuilder b("A2", "gradient flow lengths uniformly bounded",
                           "morse.length_bound");
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-8;
  cfg.abs_tol = 1e-10;
  cfg.max_step = 0.5;
  cfg.t_max = 1e4;
  cfg.stop_grad_norm = 1e-8;
  {
    auto torus = make_catalog_field("torus_height").field;
    double longest = 0.0;
    for (int s = 0; s < 50; ++s) {
      Trajectory traj =
          integrate_flow(torus, detail::random_point(rng, torus), cfg);
      longest = std::max(longest, traj.back().arc_length);
    }
    // Diameter-scale bound: no flow line wanders beyond a few periods.
    b.require(longest < 4.0 * std::numbers::pi,
              "torus max length " + detail::fmt(longest) + " < 4 pi");
  }
  {
    auto bowl = make_catalog_field("quad", {{"c1", 1.0}, {"c2", 2.0}}).field;
    double longest = 0.0;
    for (int s = 0; s < 50; ++s) {
      Eigen::VectorXd x0 = rng.uniform_box(2, -1.0, 1.0);
      Trajectory traj = integrate_flow(bowl, x0, cfg);
      longest = std::max(longest, traj.back().arc_length);
      // Flow lines of a bowl are no longer than ~the start radius times a
      // constant from the eigenvalue ratio.
      b.require(traj.back().arc_length <= 2.0 * x0.norm() + 1e-6,
                "quadratic flow length bounded by start radius");
    }
    b.note("quad max length " + detail::fmt(longest));
  }
  return b.finish();
}

inline Verdict check_manifold_models(Rng& rng) {
  detail::VerdictBuilder b("A3", "critical manifold models are consistent",
                           "bott.local_model");
  for (const std::string& id : {"y_squared", "warped_bott", "circle_well"}) {
    auto e = make_catalog_field(id);
    const auto& m = *e.manifold;
    const int n = m.ambient_dim;
    for (int s = 0; s < 50; ++s) {
      Eigen::VectorXd x = rng.uniform_box(n, -1.5, 1.5);
      Eigen::VectorXd p = m.project(x);
      b.require(e.field.gradient(p).norm() < 1e-10,
                id + " projection lands on the critical set");
      Eigen::MatrixXd tan = m.tangent_basis(p);
      Eigen::MatrixXd nor = m.normal_basis(p);
      Eigen::MatrixXd joint(n, n);
      joint << tan, nor;
      double gram =
          (joint.transpose() * joint - Eigen::MatrixXd::Identity(n, n))
              .cwiseAbs()
              .maxCoeff();
      b.require(gram < 1e-10, id + " joint basis orthonormal (Gram check)");
      // Hessian restricted to the normal space is non-singular (Morse-Bott).
      Eigen::MatrixXd hn = nor.transpose() * e.field.hessian(p) * nor;
      b.require(std::abs(hn.determinant()) > 1e-8,
                id + " normal Hessian non-degenerate");
    }
  }
  return b.finish();
}

inline Verdict check_stable_manifolds() {
  detail::VerdictBuilder b("A4", "stable/unstable branch counts and geometry",
                           "morse.stable_manifold");
  auto torus = make_catalog_field("torus_height").field;
  const double pi = std::numbers::pi;
  auto saddle = find_critical(torus, Eigen::Vector2d(0.2, pi - 0.2));
  b.require(saddle.has_value() && saddle->cls == CriticalClass::kSaddle,
            "located the (0, pi) saddle");
  if (saddle) {
    IntegratorConfig cfg = detail::tight_config();
    cfg.t_max = 1e3;
    auto unstable =
        manifold_branches(torus, *saddle, ManifoldKind::kUnstable, 1e-4, cfg);
    b.require(unstable.size() == 2, "index-1 saddle has 2 unstable branches");
    for (const auto& br : unstable)
      b.require(torus.distance(br.back().x, Eigen::Vector2d(pi, pi)) < 1e-4,
                "unstable branch converges to the minimum (index drop 1->0)");
    IntegratorConfig scfg = cfg;
    scfg.t_max = 5.0;
    scfg.stop_grad_norm = 1e-300;
    auto stable =
        manifold_branches(torus, *saddle, ManifoldKind::kStable, 1e-4, scfg);
    b.require(stable.size() == 2, "index-1 saddle has 2 stable branches");
    for (const auto& br : stable)
      b.require(torus.value(br.back().x) > saddle->value,
                "reversed-field branch climbs above the saddle value");
  }
  {
    auto qs = make_catalog_field("quad_saddle");
    auto cp = find_critical(qs.field, Eigen::Vector2d(0.3, -0.2));
    b.require(cp.has_value() && cp->index == 1, "quad_saddle index 1");
    if (cp) {
      IntegratorConfig cfg = detail::tight_config();
      cfg.t_max = 20.0;
      cfg.stop_grad_norm = 1e-300;
      auto branches =
          manifold_branches(qs.field, *cp, ManifoldKind::kUnstable, 1e-4, cfg);
      for (const auto& br : branches)
        for (const auto& s : br.samples)
          b.require(std::abs(s.x[1]) < 1e-8,
                    "unstable branch stays on the eigen-axis (|y| < 1e-8)");
    }
  }
  return b.finish();
}

inline Verdict check_flow_semigroup() {
  detail::VerdictBuilder b("A5", "time-shift semigroup of the flow",
                           "gf.flow_map");
  auto torus = make_catalog_field("torus_height").field;
  Eigen::Vector2d x0(1.0, 2.2);
  IntegratorConfig cfg = detail::tight_config();
  cfg.stop_grad_norm = 1e-300;
  cfg.t_max = 1.5;
  Trajectory first = integrate_flow(torus, x0, cfg);
  cfg.t_max = 2.0;
  Trajectory second = integrate_flow(torus, first.back().x, cfg);
  cfg.t_max = 3.5;
  Trajectory whole = integrate_flow(torus, x0, cfg);
  double err = (second.back().x - whole.back().x).norm();
  b.require(err < 1e-8,
            "restart after t1 matches single run to t1+t2: err " +
                detail::fmt(err));
  return b.finish();
}

// Theorem tags the suite must exercise at least once.
inline const std::vector<std::string>& required_tags() {
  static const std::vector<std::string> tags = {
      "gf.definition",
      "gf.gradient_field",
      "gf.dissipation",
      "gf.flow_map",
      "morse.classification",
      "morse.almost_all_convergence",
      "morse.enter_once",
      "morse.stable_manifold",
      "morse.length_bound",
      "smale.dimension_formula",
      "bott.local_model",
      "bott.normal_bias",
      "bott.secant_limit",
      "loja.exponent",
      "loja.distance",
      "loja.convergence_rate",
      "loja.subsequence_convergence",
      "loja.z_set",
      "loja.dense_limits",
  };
  return tags;
}

inline std::vector<Verdict> run_verification(const VerifyOptions& opts) {
  namespace fs = std::filesystem;
  std::vector<Verdict> verdicts;
  Rng rng(opts.seed);

  verdicts.push_back(check_derivatives(rng));
  verdicts.push_back(check_integrator_accuracy());
  verdicts.push_back(check_dissipation(rng));
  verdicts.push_back(check_classification());
  verdicts.push_back(check_almost_all_convergence(rng));
  verdicts.push_back(check_enter_once(rng));
  verdicts.push_back(check_connections());

  auto runs = lojasiewicz_runs();
  verdicts.push_back(check_lojasiewicz_exponents(runs));
  verdicts.push_back(check_distance_inequalities(rng));
  verdicts.push_back(check_convergence_rates(runs));
  verdicts.push_back(check_normal_bias());
  verdicts.push_back(check_secant_limits());
  verdicts.push_back(check_z_set(rng));
  verdicts.push_back(check_dense_limits());

  fs::path scratch = opts.out_dir.empty()
                         ? fs::temp_directory_path() / "gradflow_verify"
                         : fs::path(opts.out_dir);
  verdicts.push_back(check_reproducibility(opts.seed, scratch));

  if (opts.include_auxiliary) {
    verdicts.push_back(check_subsequence_convergence(runs));
    verdicts.push_back(check_length_bound(rng));
    verdicts.push_back(check_manifold_models(rng));
    verdicts.push_back(check_stable_manifolds());
    verdicts.push_back(check_flow_semigroup());

    detail::VerdictBuilder cov("A6", "theorem tag coverage", "artifact.coverage");
    std::set<std::string> seen;
    for (const auto& v : verdicts) seen.insert(v.tag);
    for (const auto& tag : required_tags())
      cov.require(seen.count(tag) == 1, tag);
    verdicts.push_back(cov.finish());
  }
  return verdicts;
}

inline nlohmann::json verdicts_json(const std::vector<Verdict>& verdicts) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : verdicts) {
    nlohmann::json e;
    e["id"] = v.id;
    e["name"] = v.name;
    e["tag"] = v.tag;
    e["pass"] = v.pass;
    e["detail"] = v.detail;
    e["seconds"] = v.seconds;
    j.push_back(e);
  }
  return j;
}

}  // namespace gradflow
