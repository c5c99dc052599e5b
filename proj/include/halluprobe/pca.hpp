// Copyright 2026 The halluprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "halluprobe/error.hpp"

namespace halluprobe {

/// Principal-component reducer. Rows of `components` are orthonormal
/// directions sorted by decreasing explained variance.
template <typename Scalar>
struct PcaModel {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Vector mean;
  Matrix components;  // k x d
  Vector explained_variance_ratio;
  /// Set when the input had no variance; such a model keeps k = 0.
  bool degenerate = false;

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index num_components() const { return components.rows(); }
};

using PcaModeld = PcaModel<double>;

/// Full decomposition of the centered data: mean, all right singular vectors
/// (as rows, sign-normalized) and their variance ratios.
template <typename Scalar>
struct PcaSpectrum {
  typename PcaModel<Scalar>::Vector mean;
  typename PcaModel<Scalar>::Matrix directions;
  typename PcaModel<Scalar>::Vector variance_ratio;
  bool degenerate = false;
};

template <typename Derived>
PcaSpectrum<typename Derived::Scalar> pca_spectrum(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Dense X = input;  // evaluate once; `input` may be a lazy expression
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "PCA needs at least two rows");
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "PCA needs at least one column");
  if (!X.allFinite()) throw Error(ErrorCode::NonFiniteInput, "PCA input contains NaN or Inf");

  PcaSpectrum<Scalar> out;
  out.mean = X.colwise().mean().transpose();
  Dense centered = X.rowwise() - out.mean.transpose();

  const Scalar total = centered.squaredNorm();
  const Scalar scale = X.cwiseAbs().maxCoeff();
  const Scalar rms = std::sqrt(total / static_cast<Scalar>(n * d));
  if (total == Scalar(0) || rms <= Scalar(16) * std::numeric_limits<Scalar>::epsilon() * scale) {
    out.degenerate = true;
    out.directions.resize(0, d);
    out.variance_ratio.resize(0);
    return out;
  }

  Eigen::BDCSVD<Dense> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Dense& V = svd.matrixV();
  const Eigen::Index r = sv.size();
  const Scalar energy = sv.squaredNorm();

  out.directions.resize(r, d);
  out.variance_ratio.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    auto row = out.directions.row(i);
    row = V.col(i).transpose();
    Eigen::Index pivot = 0;
    row.cwiseAbs().maxCoeff(&pivot);
    if (row(pivot) < Scalar(0)) row = -row;
    out.variance_ratio(i) = sv(i) * sv(i) / energy;
  }
  return out;
}

/// Keeps the smallest number of leading components whose cumulative variance
/// ratio reaches `target_cumvar`. Zero-variance input yields a degenerate k = 0 model.
template <typename Derived>
PcaModel<typename Derived::Scalar> fit_pca(const Eigen::MatrixBase<Derived>& X,
                                           typename Derived::Scalar target_cumvar) {
  using Scalar = typename Derived::Scalar;
  if (!(target_cumvar > Scalar(0) && target_cumvar <= Scalar(1))) {
    throw Error(ErrorCode::InvalidArgument, "PCA variance target must lie in (0, 1]");
  }
  auto spectrum = pca_spectrum(X);
  PcaModel<Scalar> model;
  model.mean = std::move(spectrum.mean);
  model.degenerate = spectrum.degenerate;
  const Eigen::Index r = spectrum.variance_ratio.size();
  Eigen::Index k = r;
  Scalar cumulative = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    cumulative += spectrum.variance_ratio(i);
    if (cumulative >= target_cumvar) {
      k = i + 1;
      break;
    }
  }
  model.components = spectrum.directions.topRows(k);
  model.explained_variance_ratio = spectrum.variance_ratio.head(k);
  return model;
}

template <typename Scalar, typename Derived>
typename PcaModel<Scalar>::Vector pca_transform(const PcaModel<Scalar>& model,
                                                const Eigen::MatrixBase<Derived>& e) {
  if (e.size() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "PCA input has length " + std::to_string(e.size()) +
                                                  ", model expects " + std::to_string(model.input_dim()));
  }
  return model.components * (e.template cast<Scalar>() - model.mean);
}

/// Maps reduced coordinates back into the input space.
template <typename Scalar, typename Derived>
typename PcaModel<Scalar>::Vector pca_inverse_transform(const PcaModel<Scalar>& model,
                                                        const Eigen::MatrixBase<Derived>& z) {
  if (z.size() != model.num_components()) {
    throw Error(ErrorCode::DimensionMismatch, "reduced vector length does not match component count");
  }
  return model.components.transpose() * z + model.mean;
}

}  // namespace halluprobe
