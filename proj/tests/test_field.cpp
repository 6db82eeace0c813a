#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gradflow/catalog.hpp"
#include "gradflow/field.hpp"
#include "gradflow/rng.hpp"

using gradflow::DomainKind;
using gradflow::ScalarField;
using gradflow::make_catalog_field;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("catalog field values") {
  auto x4y2 = make_catalog_field("x4y2").field;
  CHECK(x4y2.value(Eigen::Vector3d(0, 0, 5)) == 0.0);
  CHECK(x4y2.value(Eigen::Vector3d(2, 1, -3)) == 17.0);

  auto torus = make_catalog_field("torus_height").field;
  CHECK(torus.value(Eigen::Vector2d(0, 0)) == 2.0);
  CHECK(torus.value(Eigen::Vector2d(kPi, kPi)) == -2.0);

  auto saddle = make_catalog_field("quad_saddle").field;
  CHECK(saddle.value(Eigen::Vector2d(1, 2)) == 3.0);

  auto well = make_catalog_field("circle_well").field;
  CHECK(well.value(Eigen::Vector2d(1, 0)) == 0.0);
  CHECK(well.value(Eigen::Vector2d(0, 0)) == 1.0);
}

TEST_CASE("unknown catalog id throws with the id named") {
  try {
    make_catalog_field("no_such_field");
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("no_such_field") != std::string::npos);
  }
}

TEST_CASE("catalog gradients match finite differences") {
  gradflow::Rng rng(101);
  for (const auto& id : gradflow::catalog_ids()) {
    auto entry = make_catalog_field(id);
    const auto& f = entry.field;
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd x = rng.uniform_box(f.dimension(), -2.0, 2.0);
      Eigen::VectorXd g = f.gradient(x);
      Eigen::VectorXd fd = gradflow::finite_diff_gradient(f, x, 1e-5);
      double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
      INFO(id);
      CHECK((g - fd).lpNorm<Eigen::Infinity>() / scale < 1e-6);
    }
  }
}

TEST_CASE("catalog hessians are symmetric and match gradient differences") {
  gradflow::Rng rng(102);
  for (const auto& id : gradflow::catalog_ids()) {
    auto entry = make_catalog_field(id);
    const auto& f = entry.field;
    const int n = f.dimension();
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x = rng.uniform_box(n, -2.0, 2.0);
      Eigen::MatrixXd h = f.hessian(x);
      INFO(id);
      CHECK((h - h.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
      const double step = 1e-5;
      for (int j = 0; j < n; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        Eigen::VectorXd col = (f.gradient(xp) - f.gradient(xm)) / (2 * step);
        double scale = std::max(1.0, h.col(j).lpNorm<Eigen::Infinity>());
        CHECK((h.col(j) - col).lpNorm<Eigen::Infinity>() / scale < 1e-5);
      }
    }
  }
}

TEST_CASE("reference critical points have vanishing gradient") {
  for (const auto& id : gradflow::catalog_ids()) {
    auto entry = make_catalog_field(id);
    for (const auto& ref : entry.reference_critical_points) {
      INFO(id);
      CHECK(entry.field.gradient(ref.location).norm() < 1e-12);
    }
  }
}

TEST_CASE("expression-backed field matches catalog field") {
  auto expr = gradflow::parse_expression("x^4 + y^2", {"x", "y", "z"});
  auto f = ScalarField::from_expression("x4y2_expr", expr);
  auto cat = make_catalog_field("x4y2").field;
  gradflow::Rng rng(103);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x = rng.uniform_box(3, -2.0, 2.0);
    CHECK(f.value(x) == Catch::Approx(cat.value(x)).margin(1e-12));
    CHECK((f.gradient(x) - cat.gradient(x)).norm() < 1e-10);
    CHECK((f.hessian(x) - cat.hessian(x)).norm() < 1e-10);
  }
}

TEST_CASE("torus displacement wraps to the shortest representative") {
  auto torus = make_catalog_field("torus_height").field;
  Eigen::Vector2d a(0.1, 0.0), b(2 * kPi - 0.1, 0.0);
  Eigen::VectorXd d = torus.displacement(a, b);
  CHECK(d[0] == Catch::Approx(-0.2).margin(1e-14));
  CHECK(torus.distance(a, b) == Catch::Approx(0.2).margin(1e-14));
  // Euclidean fields keep plain differences.
  auto quad = make_catalog_field("quad").field;
  CHECK(quad.distance(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4)) == 5.0);
}

TEST_CASE("torus wrap lands in the fundamental domain") {
  auto torus = make_catalog_field("torus_height").field;
  Eigen::Vector2d x(-0.5, 7.0);
  Eigen::VectorXd w = torus.wrap(x);
  CHECK(w[0] == Catch::Approx(2 * kPi - 0.5).margin(1e-12));
  CHECK(w[1] == Catch::Approx(7.0 - 2 * kPi).margin(1e-12));
  CHECK(torus.value(x) == Catch::Approx(torus.value(w)).margin(1e-12));
}

TEST_CASE("field input validation") {
  auto f = make_catalog_field("quad_saddle").field;
  CHECK_THROWS_AS(f.value(Eigen::Vector3d(1, 2, 3)), std::invalid_argument);
  Eigen::Vector2d bad(std::nan(""), 0.0);
  CHECK_THROWS_AS(f.value(bad), std::invalid_argument);
  CHECK_THROWS_AS(gradflow::finite_diff_gradient(f, Eigen::Vector2d(1, 1), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(gradflow::finite_diff_gradient(f, Eigen::Vector2d(1, 1), -1e-5),
                  std::invalid_argument);
}

TEST_CASE("quad field accepts per-axis coefficients") {
  auto entry = make_catalog_field("quad", {{"c1", 1.0}, {"c2", -2.0}, {"c3", 3.0}});
  CHECK(entry.field.dimension() == 3);
  CHECK(entry.field.value(Eigen::Vector3d(1, 1, 1)) == 2.0);
  REQUIRE(entry.reference_critical_points.size() == 1);
  CHECK(entry.reference_critical_points[0].index == 1);
  CHECK(entry.reference_critical_points[0].cls == "saddle");
}

TEST_CASE("manifold models are orthonormal and critical") {
  gradflow::Rng rng(104);
  for (const auto& id : {"x4y2", "circle_well", "y_squared", "warped_bott"}) {
    auto entry = make_catalog_field(id);
    REQUIRE(entry.manifold.has_value());
    const auto& m = *entry.manifold;
    for (int i = 0; i < 25; ++i) {
      Eigen::VectorXd x = rng.uniform_box(m.ambient_dim, -1.5, 1.5);
      Eigen::VectorXd p = m.project(x);
      INFO(id);
      CHECK(entry.field.gradient(p).norm() < 1e-10);
      Eigen::MatrixXd tan = m.tangent_basis(p);
      Eigen::MatrixXd nor = m.normal_basis(p);
      Eigen::MatrixXd joint(m.ambient_dim, tan.cols() + nor.cols());
      joint << tan, nor;
      CHECK((joint.transpose() * joint -
             Eigen::MatrixXd::Identity(m.ambient_dim, m.ambient_dim))
                .lpNorm<Eigen::Infinity>() < 1e-10);
      CHECK(m.distance(p) < 1e-12);
    }
  }
}
