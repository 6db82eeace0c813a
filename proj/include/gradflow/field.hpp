#pragma once

// Scalar fields on R^n or a flat torus, with exact gradients and Hessians.
// Fields are immutable after construction and safe to evaluate concurrently.

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gradflow/expr.hpp"

namespace gradflow {

enum class DomainKind { kEuclidean, kFlatTorus };

class ScalarField {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using HessFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  ScalarField() = default;

  // Closed-form field.
  ScalarField(std::string name, int dim, ValueFn value, GradFn grad,
              HessFn hess, DomainKind domain = DomainKind::kEuclidean,
              Eigen::VectorXd periods = {})
      : impl_(std::make_shared<Impl>(Impl{std::move(name), dim, domain,
                                          std::move(periods), std::move(value),
                                          std::move(grad), std::move(hess)})) {
    if (impl_->domain == DomainKind::kFlatTorus &&
        impl_->periods.size() != dim)
      throw std::invalid_argument("flat torus field needs one period per axis");
  }

  // Expression-backed field; gradient and Hessian are symbolic.
  static ScalarField from_expression(
      const std::string& name, const Expr& f,
      DomainKind domain = DomainKind::kEuclidean,
      Eigen::VectorXd periods = {}) {
    const int n = f.dimension();
    std::vector<Expr> grad;
    std::vector<Expr> hess;
    grad.reserve(n);
    for (int i = 0; i < n; ++i) grad.push_back(f.differentiate(i));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) hess.push_back(grad[i].differentiate(j));
    Expr body = f.simplified();
    return ScalarField(
        name, n, [body](const Eigen::VectorXd& x) { return body.eval(x); },
        [grad, n](const Eigen::VectorXd& x) {
          Eigen::VectorXd g(n);
          for (int i = 0; i < n; ++i) g[i] = grad[i].eval(x);
          return g;
        },
        [hess, n](const Eigen::VectorXd& x) {
          Eigen::MatrixXd h(n, n);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) h(i, j) = hess[i * n + j].eval(x);
          return h;
        },
        domain, std::move(periods));
  }

  explicit operator bool() const { return static_cast<bool>(impl_); }

  const std::string& name() const { return impl_->name; }
  int dimension() const { return impl_->dim; }
  DomainKind domain() const { return impl_->domain; }
  const Eigen::VectorXd& periods() const { return impl_->periods; }

  double value(const Eigen::VectorXd& x) const {
    check(x);
    return impl_->value(x);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    check(x);
    return impl_->grad(x);
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const {
    check(x);
    return impl_->hess(x);
  }

  // Shortest displacement y - x, coordinate-wise modulo the period on a torus.
  Eigen::VectorXd displacement(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y) const {
    Eigen::VectorXd d = y - x;
    if (impl_->domain == DomainKind::kFlatTorus) {
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double p = impl_->periods[i];
        d[i] -= p * std::round(d[i] / p);
      }
    }
    return d;
  }

  double distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return displacement(x, y).norm();
  }

  // Canonical representative in [0, period) per axis; identity on R^n.
  Eigen::VectorXd wrap(const Eigen::VectorXd& x) const {
    if (impl_->domain != DomainKind::kFlatTorus) return x;
    Eigen::VectorXd w = x;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double p = impl_->periods[i];
      w[i] -= p * std::floor(w[i] / p);
    }
    return w;
  }

 private:
  struct Impl {
    std::string name;
    int dim;
    DomainKind domain;
    Eigen::VectorXd periods;
    ValueFn value;
    GradFn grad;
    HessFn hess;
  };

  void check(const Eigen::VectorXd& x) const {
    if (!impl_) throw std::logic_error("empty ScalarField");
    if (x.size() != impl_->dim)
      throw std::invalid_argument("point has dimension " +
                                  std::to_string(x.size()) + ", field needs " +
                                  std::to_string(impl_->dim));
    if (!x.allFinite())
      throw std::invalid_argument("point has non-finite coordinates");
  }

  std::shared_ptr<const Impl> impl_;
};

// Central-difference gradient, O(h^2). Test oracle for symbolic derivatives.
inline Eigen::VectorXd finite_diff_gradient(const ScalarField& field,
                                            const Eigen::VectorXd& x,
                                            double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  const int n = field.dimension();
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x, xm = x;
  for (int i = 0; i < n; ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (field.value(xp) - field.value(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

}  // namespace gradflow
