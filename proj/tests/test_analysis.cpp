#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gradflow/analysis.hpp"
#include "gradflow/catalog.hpp"
#include "gradflow/flow.hpp"
#include "gradflow/rng.hpp"

using gradflow::AnalysisFit;
using gradflow::IntegratorConfig;
using gradflow::InsufficientDataError;
using gradflow::Trajectory;
using gradflow::integrate_flow;
using gradflow::make_catalog_field;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v[0] = x;
  return v;
}

IntegratorConfig tail_config() {
  IntegratorConfig cfg;
  cfg.t_max = 1e8;
  cfg.max_step = 1e4;  // algebraic tails need t ~ 1e5+; let steps scale with t
  return cfg;
}

Trajectory power_flow(int k, double x0) {
  auto f = make_catalog_field("x_pow_2k", {{"k", static_cast<double>(k)}}).field;
  return integrate_flow(f, vec1(x0), tail_config());
}

}  // namespace

TEST_CASE("Lojasiewicz exponent of pure powers") {
  // f = x^{2k} has theta = (2k - 1) / (2k).
  for (int k : {1, 2, 3}) {
    auto field = make_catalog_field("x_pow_2k", {{"k", static_cast<double>(k)}});
    Trajectory traj = power_flow(k, 1.0);
    auto fit = gradflow::estimate_lojasiewicz(field.field, traj,
                                              Eigen::VectorXd::Zero(1), 0.0);
    double expected = (2.0 * k - 1.0) / (2.0 * k);
    INFO("k = " << k);
    CHECK(std::abs(fit.exponent - expected) < 0.02);
    CHECK(fit.exponent >= 0.45);
    CHECK(fit.exponent < 1.0);
    CHECK(fit.sample_count >= 8);
    // Pointwise bound with half the fitted constant.
    double c = std::exp(fit.log_constant);
    for (std::size_t i = fit.window_begin; i <= fit.window_end; ++i) {
      const auto& s = traj.samples[i];
      if (s.f_value <= 1e-13 || s.grad_norm <= 0.0) continue;
      CHECK(s.grad_norm >= 0.5 * c * std::pow(s.f_value, fit.exponent));
    }
  }
}

TEST_CASE("exponent estimate is stable under tighter tolerances") {
  auto field = make_catalog_field("x_pow_2k", {{"k", 2.0}});
  IntegratorConfig cfg = tail_config();
  Trajectory a = integrate_flow(field.field, vec1(1.0), cfg);
  cfg.rel_tol /= 10;
  cfg.abs_tol /= 10;
  Trajectory b = integrate_flow(field.field, vec1(1.0), cfg);
  auto fa = gradflow::estimate_lojasiewicz(field.field, a,
                                           Eigen::VectorXd::Zero(1), 0.0);
  auto fb = gradflow::estimate_lojasiewicz(field.field, b,
                                           Eigen::VectorXd::Zero(1), 0.0);
  CHECK(std::abs(fa.exponent - fb.exponent) < 0.01);
}

TEST_CASE("insufficient data is reported") {
  auto field = make_catalog_field("x_pow_2k", {{"k", 1.0}});
  Trajectory constant = integrate_flow(field.field, vec1(0.0), IntegratorConfig{});
  CHECK_THROWS_AS(gradflow::estimate_lojasiewicz(field.field, constant,
                                                 Eigen::VectorXd::Zero(1), 0.0),
                  InsufficientDataError);
  CHECK_THROWS_AS(
      gradflow::tail_length_rate(constant, Eigen::VectorXd::Zero(1), 0.0),
      InsufficientDataError);
}

TEST_CASE("distance inequality for f = y^2 about the z-axis") {
  auto entry = make_catalog_field("y_squared");
  REQUIRE(entry.manifold.has_value());
  gradflow::Rng rng(401);
  std::vector<Eigen::VectorXd> samples;
  for (int i = 0; i < 200; ++i)
    samples.push_back(rng.uniform_vector(Eigen::Vector2d(-1, -1),
                                         Eigen::Vector2d(1, 1)));
  auto check = gradflow::check_distance_inequality(entry.field, *entry.manifold,
                                                   samples);
  CHECK(std::abs(check.fit.exponent - 2.0) < 0.05);
  CHECK(check.worst_violation <= 1e-9);
  CHECK(check.bound_constant > 0.0);
}

TEST_CASE("distance inequality for circle_well near the circle") {
  auto entry = make_catalog_field("circle_well");
  gradflow::Rng rng(402);
  std::vector<Eigen::VectorXd> samples;
  for (int i = 0; i < 300; ++i) {
    double a = rng.uniform(0.0, 2 * kPi);
    double r = 1.0 + rng.uniform(-0.1, 0.1);
    samples.push_back(Eigen::Vector2d(r * std::cos(a), r * std::sin(a)));
  }
  auto check = gradflow::check_distance_inequality(entry.field, *entry.manifold,
                                                   samples);
  CHECK(std::abs(check.fit.exponent - 2.0) < 0.1);
  CHECK(check.worst_violation <= 1e-9);
}

TEST_CASE("distance inequality on the x4y2 ray recovers alpha = 4") {
  auto entry = make_catalog_field("x4y2");
  std::vector<Eigen::VectorXd> samples;
  for (int i = 1; i <= 50; ++i)
    samples.push_back(Eigen::Vector3d(0.02 * i, 0.0, 0.0));
  auto check = gradflow::check_distance_inequality(entry.field, *entry.manifold,
                                                   samples);
  CHECK(std::abs(check.fit.exponent - 4.0) < 0.1);
}

TEST_CASE("tail length rates for pure powers") {
  // f = x^2: l = |x| = f^{1/2}; f = x^4: l = |x| = f^{1/4}.
  Trajectory quad = power_flow(1, 1.0);
  auto fit2 = gradflow::tail_length_rate(quad, Eigen::VectorXd::Zero(1), 0.0);
  CHECK(std::abs(fit2.exponent - 0.5) < 0.02);

  Trajectory quart = power_flow(2, 1.0);
  auto fit4 = gradflow::tail_length_rate(quart, Eigen::VectorXd::Zero(1), 0.0);
  CHECK(std::abs(fit4.exponent - 0.25) < 0.02);
}

TEST_CASE("tail length rate requires convergence") {
  auto field = make_catalog_field("x_pow_2k", {{"k", 1.0}});
  IntegratorConfig cfg;
  cfg.t_max = 0.5;
  cfg.stop_grad_norm = 1e-300;
  Trajectory traj = integrate_flow(field.field, vec1(1.0), cfg);
  REQUIRE(traj.stop_reason == gradflow::StopReason::kHorizonReached);
  CHECK_THROWS_AS(
      gradflow::tail_length_rate(traj, Eigen::VectorXd::Zero(1), 0.0),
      std::invalid_argument);
}

TEST_CASE("normal bias vanishes for f = y^2") {
  auto entry = make_catalog_field("y_squared");
  Trajectory traj =
      integrate_flow(entry.field, Eigen::Vector2d(1.0, 0.7), tail_config());
  Eigen::Vector2d p(0.0, 0.7);  // z is conserved
  auto report = gradflow::normal_bias(traj, *entry.manifold, p);
  CHECK(report.tail_sup <= 1e-12);
  CHECK(report.bounded);
}

TEST_CASE("normal bias is bounded for the warped Morse-Bott field") {
  auto entry = make_catalog_field("warped_bott");
  Trajectory traj =
      integrate_flow(entry.field, Eigen::Vector2d(0.5, 0.5), tail_config());
  REQUIRE(traj.stop_reason == gradflow::StopReason::kGradNormMet);
  Eigen::VectorXd p = entry.manifold->project(traj.back().x);
  auto report = gradflow::normal_bias(traj, *entry.manifold, p);
  CHECK(report.tail_sup > 0.0);
  CHECK(std::isfinite(report.tail_sup));
  CHECK(report.bounded);
}

TEST_CASE("normal bias rejects off-manifold limit points") {
  auto entry = make_catalog_field("y_squared");
  Trajectory traj =
      integrate_flow(entry.field, Eigen::Vector2d(0.5, 0.0), tail_config());
  CHECK_THROWS_AS(
      gradflow::normal_bias(traj, *entry.manifold, Eigen::Vector2d(1.0, 0.0)),
      std::invalid_argument);
}

TEST_CASE("secant limit is normal for straight-line flow") {
  auto entry = make_catalog_field("y_squared");
  Trajectory traj =
      integrate_flow(entry.field, Eigen::Vector2d(1.0, 0.3), tail_config());
  Eigen::Vector2d p(0.0, 0.3);
  auto report = gradflow::secant_limit(traj, *entry.manifold, p);
  CHECK(report.max_pairwise_angle < 1e-10);
  CHECK(std::abs(report.tangent_angle - kPi / 2) < 1e-10);
  for (const auto& [t, d] : report.direction_series)
    CHECK(std::abs(d.norm() - 1.0) < 1e-12);
}

TEST_CASE("secant limit on the warped Morse-Bott field") {
  auto entry = make_catalog_field("warped_bott");
  Trajectory traj =
      integrate_flow(entry.field, Eigen::Vector2d(0.5, 0.5), tail_config());
  Eigen::VectorXd p = entry.manifold->project(traj.back().x);
  auto report = gradflow::secant_limit(traj, *entry.manifold, p);
  CHECK(report.max_pairwise_angle < 1e-3);
  CHECK(std::abs(report.tangent_angle - kPi / 2) < 1e-2);
}

TEST_CASE("z-set order selection") {
  CHECK(gradflow::min_z_set_order(0.5) == 2);
  CHECK(gradflow::min_z_set_order(0.75) == 3);
  CHECK(gradflow::min_z_set_order(5.0 / 6.0) == 4);
  CHECK_THROWS_AS(gradflow::min_z_set_order(1.0), std::invalid_argument);
}

TEST_CASE("z-set crossings for the quadratic flow") {
  auto field = make_catalog_field("x_pow_2k", {{"k", 1.0}});
  gradflow::Rng rng(403);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory traj = power_flow(1, rng.uniform(0.05, 1.0));
    auto report = gradflow::z_set_crossings(field.field, traj,
                                            Eigen::VectorXd::Zero(1), 2);
    CHECK(report.crossings.size() <= 1);
    for (const auto& c : report.crossings) CHECK(c.dg_dt < 0.0);
  }
}

TEST_CASE("z-set rejects inadmissible k naming the minimum") {
  auto field = make_catalog_field("x_pow_2k", {{"k", 2.0}});
  Trajectory traj = power_flow(2, 1.0);
  try {
    gradflow::z_set_crossings(field.field, traj, Eigen::VectorXd::Zero(1), 1);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("k = 1") != std::string::npos);
    CHECK(msg.find("minimum") != std::string::npos);
  }
}

TEST_CASE("trajectory inside the z-set sublevel never crosses") {
  // tau = f - |x|^{2k} = x^2 - x^4 > 0 on (0,1); flow from 0.5 stays inside.
  auto field = make_catalog_field("x_pow_2k", {{"k", 1.0}});
  Trajectory traj = power_flow(1, 0.5);
  auto report = gradflow::z_set_crossings(field.field, traj,
                                          Eigen::VectorXd::Zero(1), 2);
  CHECK(report.crossings.empty());
}

TEST_CASE("dense limit survey for f = y^2 preserves z") {
  auto entry = make_catalog_field("y_squared");
  std::vector<Eigen::VectorXd> starts;
  for (int i = 0; i < 50; ++i)
    starts.push_back(Eigen::Vector2d(0.5, -1.0 + 2.0 * i / 49.0));
  auto mesh = entry.manifold->mesh(50);
  auto report = gradflow::dense_limit_survey(entry.field, *entry.manifold,
                                             starts, tail_config(), mesh);
  CHECK(report.non_convergent == 0);
  REQUIRE(report.limits.size() == starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i)
    CHECK(std::abs(report.limits[i][1] - starts[i][1]) < 1e-9);
  CHECK(report.max_gap < 2.0 * (2.0 / 49.0));
}

TEST_CASE("dense limit survey covers the unit circle") {
  auto entry = make_catalog_field("circle_well");
  std::vector<Eigen::VectorXd> starts;
  const int count = 100;
  for (int i = 0; i < count; ++i) {
    double a = 2 * kPi * i / count;
    double r = 1.3 + 0.4 * (i % 5) / 4.0;
    starts.push_back(Eigen::Vector2d(r * std::cos(a), r * std::sin(a)));
  }
  auto mesh = entry.manifold->mesh(157);
  auto report = gradflow::dense_limit_survey(entry.field, *entry.manifold,
                                             starts, tail_config(), mesh);
  CHECK(report.non_convergent == 0);
  CHECK(report.max_gap < 2.0 * (2 * kPi / count));
  REQUIRE(report.length_fit.has_value());
  // Radial flow: arc length equals start distance, so the fit is linear.
  CHECK(std::abs(report.length_fit->exponent - 1.0) < 0.1);
  CHECK(report.length_bound_constant > 0.0);
}
