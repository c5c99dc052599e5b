// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "halluprobe/error.hpp"

namespace halluprobe {

/// sigma(z) without overflow for any finite z.
template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar ez = std::exp(z);
  return ez / (Scalar(1) + ez);
}

/// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  if (z > Scalar(0)) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

template <typename Scalar>
struct LogRegModel {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector w;
  Scalar b = 0;
  double lambda = 0;
  int iterations = 0;
  bool converged = false;

  Eigen::Index dim() const { return w.size(); }
};

using LogRegModeld = LogRegModel<double>;

struct LogRegOptions {
  double lambda = 1e-4;
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
  /// Starting point; zero when unset. Weights and bias are packed as (w, b).
  std::optional<Eigen::VectorXd> initial;
};

namespace detail {

template <typename DX, typename DY>
void check_training_input(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y, double lambda) {
  if (X.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  if (X.rows() < 2) throw Error(ErrorCode::InsufficientData, "logistic regression needs at least two samples");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "regularization must be finite and non-negative");
  }
  if (!X.allFinite()) throw Error(ErrorCode::NonFiniteInput, "design matrix contains NaN or Inf");
  Eigen::Index positives = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 1) {
      ++positives;
    } else if (y(i) != 0) {
      throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
  }
  if (positives == 0 || positives == y.size()) {
    throw Error(ErrorCode::SingleClassData, "training labels contain a single class");
  }
}

}  // namespace detail

/// Mean negative log-likelihood plus (lambda / 2) ||w||^2; the bias is not penalized.
template <typename DX, typename DY, typename DW>
typename DX::Scalar logreg_objective(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                                     double lambda, const Eigen::MatrixBase<DW>& w,
                                     typename DX::Scalar b) {
  using Scalar = typename DX::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z = (X * w).array() + b;
  Scalar nll = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) nll += softplus(z(i)) - y(i) * z(i);
  return nll / static_cast<Scalar>(X.rows()) + Scalar(0.5 * lambda) * w.squaredNorm();
}

/// Gradient of logreg_objective packed as (dw, db).
template <typename DX, typename DY, typename DW>
Eigen::Matrix<typename DX::Scalar, Eigen::Dynamic, 1> logreg_gradient(
    const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y, double lambda,
    const Eigen::MatrixBase<DW>& w, typename DX::Scalar b) {
  using Scalar = typename DX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  Vector residual = (X * w).array() + b;
  for (Eigen::Index i = 0; i < n; ++i) residual(i) = sigmoid(residual(i)) - y(i);
  Vector g(k + 1);
  g.head(k) = X.transpose() * residual / static_cast<Scalar>(n) + Scalar(lambda) * w;
  g(k) = residual.sum() / static_cast<Scalar>(n);
  return g;
}

/// Damped Newton (IRLS) on the regularized objective, zero-initialized unless
/// `options.initial` is given. Converged means ||grad||_inf < tolerance.
template <typename DX, typename DY>
LogRegModel<typename DX::Scalar> train_logreg(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                                              const LogRegOptions& options = {}) {
  using Scalar = typename DX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  detail::check_training_input(X, y, options.lambda);

  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const Scalar lambda = static_cast<Scalar>(options.lambda);

  // Augmented design [X 1] so the bias is the last coordinate.
  Matrix A(n, k + 1);
  A.leftCols(k) = X;
  A.col(k).setOnes();
  const Vector labels = y.template cast<Scalar>();

  Vector theta = Vector::Zero(k + 1);
  if (options.initial) {
    if (options.initial->size() != k + 1) {
      throw Error(ErrorCode::DimensionMismatch, "initial point must have length dim + 1");
    }
    theta = options.initial->template cast<Scalar>();
  }

  auto objective = [&](const Vector& t) {
    const Vector z = A * t;
    Scalar nll = 0;
    for (Eigen::Index i = 0; i < n; ++i) nll += softplus(z(i)) - labels(i) * z(i);
    return nll * inv_n + Scalar(0.5) * lambda * t.head(k).squaredNorm();
  };

  LogRegModel<Scalar> model;
  model.lambda = options.lambda;
  Scalar loss = objective(theta);
  Vector p(n);
  Vector g(k + 1);
  Matrix H(k + 1, k + 1);
  int iter = 0;
  for (;; ++iter) {
    const Vector z = A * theta;
    for (Eigen::Index i = 0; i < n; ++i) p(i) = sigmoid(z(i));
    g.noalias() = A.transpose() * (p - labels) * inv_n;
    g.head(k) += lambda * theta.head(k);
    if (g.template lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      model.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    const Vector weight = (p.array() * (Scalar(1) - p.array())).matrix() * inv_n;
    H.setZero();
    H.template selfadjointView<Eigen::Lower>().rankUpdate(A.transpose() * weight.cwiseSqrt().asDiagonal());
    H.diagonal().head(k).array() += lambda;
    Eigen::LDLT<Matrix> solver(H.template selfadjointView<Eigen::Lower>());
    Vector step = solver.solve(g);
    if (solver.info() != Eigen::Success || !step.allFinite() || step.dot(g) <= Scalar(0)) {
      // Hessian numerically singular (separable data without ridge); regularize the solve.
      Matrix Hr = H.template selfadjointView<Eigen::Lower>();
      const Scalar ridge = std::max(Scalar(1e-10), Scalar(1e-8) * Hr.diagonal().maxCoeff());
      Hr.diagonal().array() += ridge;
      step = Hr.ldlt().solve(g);
      if (!step.allFinite() || step.dot(g) <= Scalar(0)) step = g;
    }

    // Backtracking line search with the Armijo condition.
    const Scalar slope = step.dot(g);
    Scalar t = 1;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector candidate = theta - t * step;
      const Scalar candidate_loss = objective(candidate);
      if (candidate_loss <= loss - Scalar(1e-4) * t * slope) {
        theta = candidate;
        loss = candidate_loss;
        accepted = true;
        break;
      }
      t *= Scalar(0.5);
    }
    if (!accepted) break;  // at the floating-point floor of the objective
  }
  model.iterations = iter;
  model.w = theta.head(k);
  model.b = theta(k);
  if (!model.w.allFinite() || !std::isfinite(model.b)) {
    throw Error(ErrorCode::NonFiniteInput, "optimization produced non-finite weights");
  }
  return model;
}

template <typename Scalar, typename Derived>
Scalar logit(const LogRegModel<Scalar>& model, const Eigen::MatrixBase<Derived>& e) {
  if (e.size() != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "probe input has length " + std::to_string(e.size()) +
                                                  ", model expects " + std::to_string(model.dim()));
  }
  return model.w.dot(e.template cast<Scalar>()) + model.b;
}

/// sigma(w . e + b): probability that the answer is correct.
template <typename Scalar, typename Derived>
Scalar predict(const LogRegModel<Scalar>& model, const Eigen::MatrixBase<Derived>& e) {
  return sigmoid(logit(model, e));
}

}  // namespace halluprobe
