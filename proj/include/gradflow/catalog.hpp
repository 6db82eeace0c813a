#pragma once

// Catalog of analytically understood test fields, each with known critical
// structure and, where the critical set is a submanifold, an exact model of
// it (projection, tangent/normal bases, mesh sampler).

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gradflow/field.hpp"

namespace gradflow {

// Analytic description of a critical submanifold N.
struct ManifoldModel {
  std::string description;
  int ambient_dim = 0;
  int dimension = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;
  // Columns are orthonormal; tangent is n x dim, normal is n x (n - dim).
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> tangent_basis;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> normal_basis;
  // Evenly spread sample of N, used as the density-survey reference mesh.
  std::function<std::vector<Eigen::VectorXd>(int)> mesh;

  double distance(const Eigen::VectorXd& x) const {
    return (x - project(x)).norm();
  }
};

struct ReferenceCriticalPoint {
  Eigen::VectorXd location;
  int index = 0;
  int nullity = 0;
  std::string cls;  // local_min | saddle | local_max | degenerate
};

struct CatalogEntry {
  std::string id;
  std::map<std::string, double> params;
  ScalarField field;
  std::vector<ReferenceCriticalPoint> reference_critical_points;
  std::optional<ManifoldModel> manifold;
};

namespace detail {

inline double param(const std::map<std::string, double>& p,
                    const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline ManifoldModel z_axis_model(int n) {
  // N = {x : x_i = 0 for i < n-1}; the last coordinate parametrizes N.
  ManifoldModel m;
  m.description = "last-coordinate axis";
  m.ambient_dim = n;
  m.dimension = 1;
  m.project = [n](const Eigen::VectorXd& x) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    p[n - 1] = x[n - 1];
    return p;
  };
  m.tangent_basis = [n](const Eigen::VectorXd&) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, 1);
    t(n - 1, 0) = 1.0;
    return t;
  };
  m.normal_basis = [n](const Eigen::VectorXd&) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n - 1);
    for (int i = 0; i + 1 < n; ++i) b(i, i) = 1.0;
    return b;
  };
  m.mesh = [n](int count) {
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(count);
    for (int i = 0; i < count; ++i) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
      p[n - 1] = -1.0 + 2.0 * i / (count - 1);
      pts.push_back(p);
    }
    return pts;
  };
  return m;
}

inline ManifoldModel unit_circle_model() {
  ManifoldModel m;
  m.description = "unit circle";
  m.ambient_dim = 2;
  m.dimension = 1;
  m.project = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    double r = x.norm();
    if (r < 1e-300) return Eigen::Vector2d(1.0, 0.0);
    return x / r;
  };
  m.tangent_basis = [](const Eigen::VectorXd& x) {
    Eigen::Vector2d u = x.normalized();
    Eigen::MatrixXd t(2, 1);
    t(0, 0) = -u[1];
    t(1, 0) = u[0];
    return t;
  };
  m.normal_basis = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd b(2, 1);
    Eigen::Vector2d u = x.normalized();
    b(0, 0) = u[0];
    b(1, 0) = u[1];
    return b;
  };
  m.mesh = [](int count) {
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(count);
    for (int i = 0; i < count; ++i) {
      double a = 2.0 * std::numbers::pi * i / count;
      pts.push_back(Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
    return pts;
  };
  return m;
}

}  // namespace detail

// Builds a catalog field. Known ids:
//   quad        f = sum c_i x_i^2, params c1..cn (n = number of c params)
//   quad_saddle f = -x^2 + y^2 on R^2
//   x4y2        f = x^4 + y^2 on R^3
//   x_pow_2k    f = x^(2k) on R, param k >= 1
//   torus_height f = cos x + cos y on the flat torus [0,2pi)^2
//   circle_well f = (x^2 + y^2 - 1)^2 on R^2
//   y_squared   f = y^2 on R^2, coordinates (y, z)
//   warped_bott f = (1 + z^2) y^2 on R^2, coordinates (y, z)
inline CatalogEntry make_catalog_field(
    const std::string& id, const std::map<std::string, double>& params = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  CatalogEntry e;
  e.id = id;
  e.params = params;

  if (id == "quad") {
    std::vector<double> c;
    for (int i = 1;; ++i) {
      auto it = params.find("c" + std::to_string(i));
      if (it == params.end()) break;
      c.push_back(it->second);
    }
    if (c.empty()) c = {1.0, 1.0};
    const int n = static_cast<int>(c.size());
    Eigen::VectorXd cv = Eigen::Map<Eigen::VectorXd>(c.data(), n);
    e.field = ScalarField(
        "quad", n,
        [cv](const VectorXd& x) { return cv.dot(x.cwiseProduct(x)); },
        [cv](const VectorXd& x) -> VectorXd {
          return 2.0 * cv.cwiseProduct(x);
        },
        [cv, n](const VectorXd&) -> MatrixXd {
          return (2.0 * cv).asDiagonal();
        });
    int index = 0;
    for (double ci : c) index += ci < 0.0 ? 1 : 0;
    e.reference_critical_points.push_back(
        {VectorXd::Zero(n), index, 0,
         index == 0 ? "local_min" : (index == n ? "local_max" : "saddle")});
  } else if (id == "quad_saddle") {
    e.field = ScalarField(
        "quad_saddle", 2,
        [](const VectorXd& x) { return -x[0] * x[0] + x[1] * x[1]; },
        [](const VectorXd& x) -> VectorXd {
          return Eigen::Vector2d(-2.0 * x[0], 2.0 * x[1]);
        },
        [](const VectorXd&) -> MatrixXd {
          return Eigen::Vector2d(-2.0, 2.0).asDiagonal();
        });
    e.reference_critical_points.push_back(
        {Eigen::Vector2d::Zero(), 1, 0, "saddle"});
  } else if (id == "x4y2") {
    e.field = ScalarField(
        "x4y2", 3,
        [](const VectorXd& x) { return std::pow(x[0], 4) + x[1] * x[1]; },
        [](const VectorXd& x) -> VectorXd {
          return Eigen::Vector3d(4.0 * std::pow(x[0], 3), 2.0 * x[1], 0.0);
        },
        [](const VectorXd& x) -> MatrixXd {
          return Eigen::Vector3d(12.0 * x[0] * x[0], 2.0, 0.0).asDiagonal();
        });
    e.reference_critical_points.push_back(
        {Eigen::Vector3d::Zero(), 0, 2, "degenerate"});
    e.manifold = detail::z_axis_model(3);
    e.manifold->description = "z-axis, f = x^4 + y^2 vanishing set";
  } else if (id == "x_pow_2k") {
    const int k = static_cast<int>(detail::param(params, "k", 1.0));
    if (k < 1) throw std::invalid_argument("x_pow_2k needs k >= 1");
    e.field = ScalarField(
        "x_pow_2k", 1,
        [k](const VectorXd& x) { return std::pow(x[0], 2 * k); },
        [k](const VectorXd& x) -> VectorXd {
          VectorXd g(1);
          g[0] = 2.0 * k * std::pow(x[0], 2 * k - 1);
          return g;
        },
        [k](const VectorXd& x) -> MatrixXd {
          MatrixXd h(1, 1);
          h(0, 0) = 2.0 * k * (2.0 * k - 1.0) * std::pow(x[0], 2 * k - 2);
          return h;
        });
    e.reference_critical_points.push_back(
        {VectorXd::Zero(1), 0, k == 1 ? 0 : 1, k == 1 ? "local_min" : "degenerate"});
  } else if (id == "torus_height") {
    const double pi = std::numbers::pi;
    Eigen::VectorXd periods = Eigen::Vector2d(2.0 * pi, 2.0 * pi);
    e.field = ScalarField(
        "torus_height", 2,
        [](const VectorXd& x) { return std::cos(x[0]) + std::cos(x[1]); },
        [](const VectorXd& x) -> VectorXd {
          return Eigen::Vector2d(-std::sin(x[0]), -std::sin(x[1]));
        },
        [](const VectorXd& x) -> MatrixXd {
          return Eigen::Vector2d(-std::cos(x[0]), -std::cos(x[1]))
              .asDiagonal();
        },
        DomainKind::kFlatTorus, periods);
    e.reference_critical_points.push_back(
        {Eigen::Vector2d(0.0, 0.0), 2, 0, "local_max"});
    e.reference_critical_points.push_back(
        {Eigen::Vector2d(pi, 0.0), 1, 0, "saddle"});
    e.reference_critical_points.push_back(
        {Eigen::Vector2d(0.0, pi), 1, 0, "saddle"});
    e.reference_critical_points.push_back(
        {Eigen::Vector2d(pi, pi), 0, 0, "local_min"});
  } else if (id == "circle_well") {
    e.field = ScalarField(
        "circle_well", 2,
        [](const VectorXd& x) {
          double s = x.squaredNorm() - 1.0;
          return s * s;
        },
        [](const VectorXd& x) -> VectorXd {
          return 4.0 * (x.squaredNorm() - 1.0) * x;
        },
        [](const VectorXd& x) -> MatrixXd {
          double s = x.squaredNorm() - 1.0;
          return 4.0 * s * MatrixXd::Identity(2, 2) + 8.0 * x * x.transpose();
        });
    e.reference_critical_points.push_back(
        {Eigen::Vector2d::Zero(), 2, 0, "local_max"});
    e.reference_critical_points.push_back(
        {Eigen::Vector2d(1.0, 0.0), 0, 1, "degenerate"});
    e.manifold = detail::unit_circle_model();
  } else if (id == "y_squared") {
    e.field = ScalarField(
        "y_squared", 2, [](const VectorXd& x) { return x[0] * x[0]; },
        [](const VectorXd& x) -> VectorXd {
          return Eigen::Vector2d(2.0 * x[0], 0.0);
        },
        [](const VectorXd&) -> MatrixXd {
          return Eigen::Vector2d(2.0, 0.0).asDiagonal();
        });
    e.reference_critical_points.push_back(
        {Eigen::Vector2d::Zero(), 0, 1, "degenerate"});
    e.manifold = detail::z_axis_model(2);
    e.manifold->description = "z-axis, f = y^2 vanishing set";
  } else if (id == "warped_bott") {
    e.field = ScalarField(
        "warped_bott", 2,
        [](const VectorXd& x) {
          return (1.0 + x[1] * x[1]) * x[0] * x[0];
        },
        [](const VectorXd& x) -> VectorXd {
          return Eigen::Vector2d(2.0 * (1.0 + x[1] * x[1]) * x[0],
                                 2.0 * x[1] * x[0] * x[0]);
        },
        [](const VectorXd& x) -> MatrixXd {
          MatrixXd h(2, 2);
          h(0, 0) = 2.0 * (1.0 + x[1] * x[1]);
          h(0, 1) = h(1, 0) = 4.0 * x[1] * x[0];
          h(1, 1) = 2.0 * x[0] * x[0];
          return h;
        });
    e.reference_critical_points.push_back(
        {Eigen::Vector2d::Zero(), 0, 1, "degenerate"});
    e.manifold = detail::z_axis_model(2);
    e.manifold->description = "z-axis, (1 + z^2) y^2 vanishing set";
  } else {
    throw std::invalid_argument("unknown catalog field id '" + id + "'");
  }
  return e;
}

inline const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids = {
      "quad",         "quad_saddle", "x4y2",      "x_pow_2k",
      "torus_height", "circle_well", "y_squared", "warped_bott"};
  return ids;
}

}  // namespace gradflow
