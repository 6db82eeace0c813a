#pragma once

// Critical point location (damped pseudo-inverse Newton on grad f = 0),
// Hessian-spectrum classification, stable/unstable manifold branch tracing,
// and heteroclinic connection detection.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gradflow/field.hpp"
#include "gradflow/flow.hpp"

namespace gradflow {

enum class CriticalClass { kLocalMin, kSaddle, kLocalMax, kDegenerate };

inline const char* to_string(CriticalClass c) {
  switch (c) {
    case CriticalClass::kLocalMin: return "local_min";
    case CriticalClass::kSaddle: return "saddle";
    case CriticalClass::kLocalMax: return "local_max";
    case CriticalClass::kDegenerate: return "degenerate";
  }
  return "?";
}

struct CriticalPoint {
  Eigen::VectorXd location;
  double value = 0.0;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns matching eigenvalues
  int index = 0;
  int nullity = 0;
  CriticalClass cls = CriticalClass::kDegenerate;
  bool used_fallback = false;  // Newton had to regularize a singular Hessian
};

// Scale-invariant cutoff below which an eigenvalue counts toward nullity.
inline double degeneracy_tol(const Eigen::VectorXd& eigenvalues) {
  double spectral_radius = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    spectral_radius = std::max(spectral_radius, std::abs(eigenvalues[i]));
  return 1e-7 * std::max(1.0, spectral_radius);
}

inline CriticalPoint classify_critical(const ScalarField& field,
                                       const Eigen::VectorXd& location) {
  CriticalPoint cp;
  cp.location = field.wrap(location);
  cp.value = field.value(location);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(field.hessian(location));
  cp.eigenvalues = es.eigenvalues();
  cp.eigenvectors = es.eigenvectors();
  const double tol = degeneracy_tol(cp.eigenvalues);
  const int n = field.dimension();
  for (int i = 0; i < n; ++i) {
    if (std::abs(cp.eigenvalues[i]) < tol) ++cp.nullity;
    else if (cp.eigenvalues[i] < 0.0) ++cp.index;
  }
  if (cp.nullity > 0) cp.cls = CriticalClass::kDegenerate;
  else if (cp.index == 0) cp.cls = CriticalClass::kLocalMin;
  else if (cp.index == n) cp.cls = CriticalClass::kLocalMax;
  else cp.cls = CriticalClass::kSaddle;
  return cp;
}

// Damped Newton on grad f = 0 with a pseudo-inverse step when the Hessian is
// rank-deficient; backtracks on the |grad f|^2 merit, with a steepest-descent
// fallback when the Newton direction stalls.
inline std::optional<CriticalPoint> find_critical(const ScalarField& field,
                                                  const Eigen::VectorXd& seed,
                                                  double tol = 1e-10,
                                                  int max_iter = 300) {
  if (!seed.allFinite())
    throw std::invalid_argument("seed has non-finite coordinates");
  Eigen::VectorXd x = seed;
  bool used_fallback = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd g = field.gradient(x);
    double gn = g.norm();
    if (gn < tol) {
      auto cp = classify_critical(field, x);
      cp.used_fallback = used_fallback;
      return cp;
    }
    Eigen::MatrixXd h = field.hessian(x);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(h);
    if (cod.rank() < field.dimension()) used_fallback = true;
    Eigen::VectorXd step = -cod.solve(g);
    if (!step.allFinite() || step.norm() == 0.0) {
      step = -h * g;  // steepest descent on |grad f|^2 / 2
      used_fallback = true;
      if (step.norm() == 0.0) return std::nullopt;
    }

    double merit = g.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd xn = x + alpha * step;
      if (xn.allFinite() &&
          field.gradient(xn).squaredNorm() < merit * (1.0 - 1e-4 * alpha)) {
        x = xn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Try pure descent on the merit before giving up.
      Eigen::VectorXd d = -h * g;
      double beta = 1.0 / std::max(1.0, d.norm());
      used_fallback = true;
      accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        Eigen::VectorXd xn = x + beta * d;
        if (xn.allFinite() && field.gradient(xn).squaredNorm() < merit) {
          x = xn;
          accepted = true;
          break;
        }
        beta *= 0.5;
      }
      if (!accepted) return std::nullopt;
    }
    if ((x - seed).norm() > 1e6 * (1.0 + seed.norm())) return std::nullopt;
  }
  Eigen::VectorXd g = field.gradient(x);
  if (g.norm() < tol) {
    auto cp = classify_critical(field, x);
    cp.used_fallback = used_fallback;
    return cp;
  }
  return std::nullopt;
}

// Grid-seeded sweep with distance deduplication. merge_radius defaults to
// 1e-4 of the box diagonal; non-degenerate critical points are isolated, so
// any radius below the true separation is correct.
inline std::vector<CriticalPoint> sweep_critical(
    const ScalarField& field, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi, const std::vector<int>& grid,
    double tol = 1e-10, double merge_radius = -1.0) {
  const int n = field.dimension();
  if (lo.size() != n || hi.size() != n ||
      static_cast<int>(grid.size()) != n)
    throw std::invalid_argument("region/grid dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (!(hi[i] > lo[i]) || grid[i] < 1)
      throw std::invalid_argument("degenerate sweep region or grid");

  if (merge_radius <= 0.0) merge_radius = 1e-4 * (hi - lo).norm();

  std::vector<CriticalPoint> found;
  std::vector<int> idx(n, 0);
  for (;;) {
    Eigen::VectorXd seed(n);
    for (int i = 0; i < n; ++i)
      seed[i] = lo[i] + (idx[i] + 0.5) * (hi[i] - lo[i]) / grid[i];
    if (auto cp = find_critical(field, seed, tol)) {
      bool inside = true;
      if (field.domain() == DomainKind::kEuclidean) {
        for (int i = 0; i < n && inside; ++i)
          inside = cp->location[i] >= lo[i] - 1e-6 &&
                   cp->location[i] <= hi[i] + 1e-6;
      }
      if (inside) found.push_back(std::move(*cp));
    }
    int axis = 0;
    while (axis < n && ++idx[axis] == grid[axis]) idx[axis++] = 0;
    if (axis == n) break;
  }

  // Deterministic order before dedup.
  std::sort(found.begin(), found.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) {
              return std::lexicographical_compare(
                  a.location.data(), a.location.data() + a.location.size(),
                  b.location.data(), b.location.data() + b.location.size());
            });
  std::vector<CriticalPoint> merged;
  for (auto& cp : found) {
    bool dup = false;
    for (const auto& m : merged)
      if (field.distance(cp.location, m.location) < merge_radius) {
        dup = true;
        break;
      }
    if (!dup) merged.push_back(std::move(cp));
  }
  return merged;
}

enum class ManifoldKind { kStable, kUnstable };

// Seeds trajectories along the eigenvectors of the relevant sign and traces
// each branch: forward flow for unstable branches, the reversed field over
// the caller's horizon for stable ones.
inline std::vector<Trajectory> manifold_branches(const ScalarField& field,
                                                 const CriticalPoint& cp,
                                                 ManifoldKind kind,
                                                 double seed_eps,
                                                 const IntegratorConfig& cfg) {
  if (cp.nullity > 0)
    throw std::invalid_argument(
        "manifold tracing is unsupported at degenerate critical points");
  if (!(seed_eps > 0.0))
    throw std::invalid_argument("seed_eps must be positive");
  const double dtol = degeneracy_tol(cp.eigenvalues);
  std::vector<Trajectory> branches;
  for (int i = 0; i < cp.eigenvalues.size(); ++i) {
    const double ev = cp.eigenvalues[i];
    const bool want = kind == ManifoldKind::kUnstable ? ev < -dtol : ev > dtol;
    if (!want) continue;
    for (double s : {+1.0, -1.0}) {
      Eigen::VectorXd x0 = cp.location + s * seed_eps * cp.eigenvectors.col(i);
      branches.push_back(integrate_flow(
          field, x0, cfg, kind == ManifoldKind::kUnstable ? -1.0 : +1.0));
    }
  }
  return branches;
}

struct Connection {
  int source = 0;  // indices into the input critical point list
  int target = 0;
  int branch_id = 0;
  int expected_dimension = 0;  // index(source) - index(target)
  Trajectory representative;
};

struct ConnectionReport {
  std::vector<Connection> connections;
  int unresolved = 0;  // branches whose endpoint matched no known point
};

struct ConnectionOptions {
  double seed_eps = 1e-4;
  double locate_tol = 1e-4;
  double endpoint_grad_tol = 1e-8;
};

// Follows every unstable branch of every saddle/max and matches endpoints
// against the supplied critical point list.
inline ConnectionReport find_connections(const ScalarField& field,
                                         const std::vector<CriticalPoint>& points,
                                         const IntegratorConfig& cfg,
                                         const ConnectionOptions& opts = {}) {
  ConnectionReport report;
  for (int pi = 0; pi < static_cast<int>(points.size()); ++pi) {
    const auto& p = points[pi];
    if (p.nullity > 0 || p.index == 0) continue;
    auto branches =
        manifold_branches(field, p, ManifoldKind::kUnstable, opts.seed_eps, cfg);
    for (int bi = 0; bi < static_cast<int>(branches.size()); ++bi) {
      auto& traj = branches[bi];
      const auto& end = traj.back();
      bool matched = false;
      if (end.grad_norm < opts.endpoint_grad_tol) {
        for (int qi = 0; qi < static_cast<int>(points.size()); ++qi) {
          if (qi == pi) continue;
          if (field.distance(end.x, points[qi].location) < opts.locate_tol) {
            report.connections.push_back(
                {pi, qi, bi, p.index - points[qi].index, std::move(traj)});
            matched = true;
            break;
          }
        }
      }
      if (!matched) ++report.unresolved;
    }
  }
  return report;
}

// One point per connection representative with f = t, located by event
// refinement; the numerical witness of the level slice W^t(p, q).
inline std::vector<Eigen::VectorXd> level_slice_samples(
    const ScalarField& field, const std::vector<Connection>& connections,
    const std::vector<CriticalPoint>& points, double t) {
  if (connections.empty())
    throw std::invalid_argument("no connections supplied");
  for (const auto& c : connections) {
    double fp = points[c.source].value, fq = points[c.target].value;
    if (!(fq < t && t < fp))
      throw std::invalid_argument("level must lie strictly between f(q) and f(p)");
  }
  std::vector<Eigen::VectorXd> slice;
  for (const auto& c : connections) {
    auto crossings = event_crossings(
        c.representative,
        [&](const Eigen::VectorXd& x) { return field.value(x) - t; });
    if (crossings.size() != 1)
      throw std::runtime_error("connection crossed level " + std::to_string(t) +
                               " " + std::to_string(crossings.size()) +
                               " times; expected exactly once");
    slice.push_back(crossings.front().x);
  }
  return slice;
}

}  // namespace gradflow
