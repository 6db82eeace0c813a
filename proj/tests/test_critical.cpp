#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "gradflow/catalog.hpp"
#include "gradflow/critical.hpp"
#include "gradflow/rng.hpp"

using gradflow::CriticalClass;
using gradflow::IntegratorConfig;
using gradflow::ManifoldKind;
using gradflow::make_catalog_field;

namespace {

constexpr double kPi = std::numbers::pi;

IntegratorConfig branch_config() {
  IntegratorConfig cfg;
  cfg.t_max = 1e4;
  return cfg;
}

}  // namespace

TEST_CASE("find_critical on the quadratic saddle") {
  auto f = make_catalog_field("quad_saddle").field;
  auto cp = gradflow::find_critical(f, Eigen::Vector2d(0.3, -0.2));
  REQUIRE(cp.has_value());
  CHECK(cp->location.norm() < 1e-8);
  CHECK(cp->eigenvalues[0] == Catch::Approx(-2.0).margin(1e-8));
  CHECK(cp->eigenvalues[1] == Catch::Approx(2.0).margin(1e-8));
  CHECK(cp->index == 1);
  CHECK(cp->nullity == 0);
  CHECK(cp->cls == CriticalClass::kSaddle);
}

TEST_CASE("find_critical on the torus minimum") {
  auto f = make_catalog_field("torus_height").field;
  auto cp = gradflow::find_critical(f, Eigen::Vector2d(3.0, 3.0));
  REQUIRE(cp.has_value());
  CHECK(f.distance(cp->location, Eigen::Vector2d(kPi, kPi)) < 1e-8);
  CHECK(cp->cls == CriticalClass::kLocalMin);
  CHECK(cp->index == 0);
}

TEST_CASE("find_critical handles the degenerate x4y2 axis") {
  auto f = make_catalog_field("x4y2").field;
  // tol 1e-12 drives the quartic coordinate far enough below the nullity
  // cutoff that the near-zero Hessian eigenvalue is classified as null.
  auto cp = gradflow::find_critical(f, Eigen::Vector3d(0.1, 0.1, 5.0), 1e-12);
  REQUIRE(cp.has_value());
  CHECK(std::abs(cp->location[0]) < 1e-3);   // quartic direction converges slowly
  CHECK(std::abs(cp->location[1]) < 1e-8);
  CHECK(cp->nullity == 2);
  CHECK(cp->cls == CriticalClass::kDegenerate);
  CHECK(f.gradient(cp->location).norm() < 1e-12);
}

TEST_CASE("find_critical rejects non-finite seeds") {
  auto f = make_catalog_field("quad").field;
  Eigen::Vector2d bad(std::nan(""), 0.0);
  CHECK_THROWS_AS(gradflow::find_critical(f, bad), std::invalid_argument);
}

TEST_CASE("sweep finds the four torus critical points") {
  auto f = make_catalog_field("torus_height").field;
  auto points = gradflow::sweep_critical(f, Eigen::Vector2d(0, 0),
                                         Eigen::Vector2d(2 * kPi, 2 * kPi),
                                         {8, 8});
  REQUIRE(points.size() == 4);
  int mins = 0, saddles = 0, maxes = 0;
  std::vector<int> indices;
  for (const auto& p : points) {
    indices.push_back(p.index);
    if (p.cls == CriticalClass::kLocalMin) ++mins;
    if (p.cls == CriticalClass::kSaddle) ++saddles;
    if (p.cls == CriticalClass::kLocalMax) ++maxes;
  }
  CHECK(mins == 1);
  CHECK(saddles == 2);
  CHECK(maxes == 1);
  std::sort(indices.begin(), indices.end());
  CHECK(indices == std::vector<int>{0, 1, 1, 2});
}

TEST_CASE("sweep of a quadratic finds exactly one point") {
  auto f = make_catalog_field("quad_saddle").field;
  auto points = gradflow::sweep_critical(f, Eigen::Vector2d(-1, -1),
                                         Eigen::Vector2d(1, 1), {5, 5});
  REQUIRE(points.size() == 1);
  CHECK(points[0].location.norm() < 1e-8);
}

TEST_CASE("sweep of circle_well lands on the circle and origin") {
  auto f = make_catalog_field("circle_well").field;
  auto points = gradflow::sweep_critical(f, Eigen::Vector2d(-2, -2),
                                         Eigen::Vector2d(2, 2), {7, 7});
  REQUIRE(!points.empty());
  for (const auto& p : points) {
    double r = p.location.norm();
    CHECK((r < 1e-6 || std::abs(r - 1.0) < 1e-6));
  }
}

TEST_CASE("sweep validates the region") {
  auto f = make_catalog_field("quad").field;
  CHECK_THROWS_AS(gradflow::sweep_critical(f, Eigen::Vector2d(1, 1),
                                           Eigen::Vector2d(0, 0), {3, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(gradflow::sweep_critical(f, Eigen::Vector2d(0, 0),
                                           Eigen::Vector2d(1, 1), {3}),
                  std::invalid_argument);
}

TEST_CASE("classification is rotation invariant") {
  // Conjugate a diagonal quadratic by a rotation; spectrum and counts persist.
  gradflow::Rng rng(301);
  double angle = rng.uniform(0.0, 2 * kPi);
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Eigen::Matrix2d a = r * Eigen::Vector2d(-2.0, 2.0).asDiagonal() * r.transpose();
  gradflow::ScalarField rotated(
      "rotated_saddle", 2,
      [a](const Eigen::VectorXd& x) { return 0.5 * x.dot(a * x); },
      [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; },
      [a](const Eigen::VectorXd&) -> Eigen::MatrixXd { return a; });
  auto cp = gradflow::find_critical(rotated, Eigen::Vector2d(0.4, 0.1));
  REQUIRE(cp.has_value());
  CHECK(cp->index == 1);
  CHECK(cp->nullity == 0);
  CHECK(cp->eigenvalues[0] == Catch::Approx(-2.0).margin(1e-8));
  CHECK(cp->eigenvalues[1] == Catch::Approx(2.0).margin(1e-8));
}

TEST_CASE("unstable branches of the torus saddle reach the minimum") {
  auto f = make_catalog_field("torus_height").field;
  auto saddle = gradflow::find_critical(f, Eigen::Vector2d(0.1, kPi));
  REQUIRE(saddle.has_value());
  REQUIRE(saddle->cls == CriticalClass::kSaddle);
  auto branches = gradflow::manifold_branches(f, *saddle, ManifoldKind::kUnstable,
                                              1e-4, branch_config());
  REQUIRE(branches.size() == 2);
  for (const auto& b : branches) {
    CHECK(b.stop_reason == gradflow::StopReason::kGradNormMet);
    CHECK(f.distance(b.back().x, Eigen::Vector2d(kPi, kPi)) < 1e-4);
  }
}

TEST_CASE("quad_saddle unstable branches follow the x axis") {
  auto f = make_catalog_field("quad_saddle").field;
  auto cp = gradflow::find_critical(f, Eigen::Vector2d(0.01, 0.01));
  REQUIRE(cp.has_value());
  IntegratorConfig cfg = branch_config();
  cfg.t_max = 2.0;  // the branch escapes to infinity; bound the horizon
  cfg.stop_grad_norm = 1e-300;
  auto branches =
      gradflow::manifold_branches(f, *cp, ManifoldKind::kUnstable, 1e-4, cfg);
  REQUIRE(branches.size() == 2);
  for (const auto& b : branches)
    for (const auto& s : b.samples) CHECK(std::abs(s.x[1]) < 1e-8);
}

TEST_CASE("a local minimum has no unstable branches") {
  auto f = make_catalog_field("quad").field;
  auto cp = gradflow::find_critical(f, Eigen::Vector2d(0.2, 0.3));
  REQUIRE(cp.has_value());
  auto branches = gradflow::manifold_branches(f, *cp, ManifoldKind::kUnstable,
                                              1e-4, branch_config());
  CHECK(branches.empty());
  // Stable branches exist and trace the reversed flow away from the minimum.
  IntegratorConfig cfg = branch_config();
  cfg.t_max = 1.0;
  cfg.stop_grad_norm = 1e-300;
  auto stable =
      gradflow::manifold_branches(f, *cp, ManifoldKind::kStable, 1e-4, cfg);
  CHECK(stable.size() == 4);
  for (const auto& b : stable)
    CHECK(b.back().x.norm() > 1e-4);  // moves away under the reversed field
}

TEST_CASE("manifold_branches input validation") {
  auto f = make_catalog_field("y_squared").field;
  auto cp = gradflow::classify_critical(f, Eigen::Vector2d(0, 0));
  REQUIRE(cp.nullity > 0);
  CHECK_THROWS_AS(gradflow::manifold_branches(f, cp, ManifoldKind::kUnstable,
                                              1e-4, branch_config()),
                  std::invalid_argument);
  auto quad = make_catalog_field("quad").field;
  auto qcp = gradflow::classify_critical(quad, Eigen::Vector2d(0, 0));
  CHECK_THROWS_AS(gradflow::manifold_branches(quad, qcp, ManifoldKind::kStable,
                                              0.0, branch_config()),
                  std::invalid_argument);
}

TEST_CASE("torus connections: saddles flow to the minimum") {
  auto f = make_catalog_field("torus_height").field;
  auto points = gradflow::sweep_critical(f, Eigen::Vector2d(0, 0),
                                         Eigen::Vector2d(2 * kPi, 2 * kPi),
                                         {8, 8});
  REQUIRE(points.size() == 4);
  auto report = gradflow::find_connections(f, points, branch_config());
  int saddle_to_min = 0;
  for (const auto& c : report.connections) {
    CHECK(points[c.source].value > points[c.target].value);
    // f strictly decreases along every representative.
    for (std::size_t i = 0; i + 1 < c.representative.size(); ++i)
      CHECK(c.representative.samples[i + 1].f_value <
            c.representative.samples[i].f_value + 1e-9);
    if (points[c.source].cls == CriticalClass::kSaddle &&
        points[c.target].cls == CriticalClass::kLocalMin) {
      ++saddle_to_min;
      CHECK(c.expected_dimension == 1);
    }
  }
  CHECK(saddle_to_min == 4);  // 2 branches per saddle, 2 saddles
}

TEST_CASE("single-minimum field has no connections") {
  auto f = make_catalog_field("quad").field;
  auto points = gradflow::sweep_critical(f, Eigen::Vector2d(-1, -1),
                                         Eigen::Vector2d(1, 1), {4, 4});
  auto report = gradflow::find_connections(f, points, branch_config());
  CHECK(report.connections.empty());
}

TEST_CASE("level slices cross each connection exactly once") {
  auto f = make_catalog_field("torus_height").field;
  auto points = gradflow::sweep_critical(f, Eigen::Vector2d(0, 0),
                                         Eigen::Vector2d(2 * kPi, 2 * kPi),
                                         {8, 8});
  auto report = gradflow::find_connections(f, points, branch_config());
  std::vector<gradflow::Connection> saddle_min;
  for (auto& c : report.connections)
    if (points[c.source].cls == CriticalClass::kSaddle &&
        points[c.target].cls == CriticalClass::kLocalMin)
      saddle_min.push_back(c);
  REQUIRE(!saddle_min.empty());

  auto slice = gradflow::level_slice_samples(f, saddle_min, points, -1.0);
  REQUIRE(slice.size() == saddle_min.size());
  for (const auto& x : slice) CHECK(std::abs(f.value(x) + 1.0) < 1e-8);

  // Distinct levels give distinct, correctly-valued points.
  auto slice2 = gradflow::level_slice_samples(f, saddle_min, points, -0.5);
  for (std::size_t i = 0; i < slice.size(); ++i) {
    CHECK(std::abs(f.value(slice2[i]) + 0.5) < 1e-8);
    CHECK((slice[i] - slice2[i]).norm() > 1e-6);
  }

  // Levels at or outside the endpoint values are rejected.
  CHECK_THROWS_AS(gradflow::level_slice_samples(f, saddle_min, points, -2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(gradflow::level_slice_samples(f, saddle_min, points, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(gradflow::level_slice_samples(f, {}, points, -1.0),
                  std::invalid_argument);
}

TEST_CASE("sweep on a Morse field finds no degenerate points") {
  auto f = make_catalog_field("torus_height").field;
  auto points = gradflow::sweep_critical(f, Eigen::Vector2d(0, 0),
                                         Eigen::Vector2d(2 * kPi, 2 * kPi),
                                         {8, 8});
  for (const auto& p : points) CHECK(p.cls != CriticalClass::kDegenerate);
}
