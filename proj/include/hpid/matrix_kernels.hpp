// Copyright 2026 The hpid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Green functions for a general quadratic potential V(x) = x^T B x / 2 with B
// symmetric positive semi-definite. In the eigenbasis of B the quadratic forms
// of both kernels decouple, so every matrix function (sqrt, coth, csch, det)
// is applied per eigenvalue and each axis is a 1D scalar kernel.
//
// Control and stationary-point formulas for matrix potentials reuse the same
// reduction: rotate into the eigenbasis, apply the scalar formula per axis,
// rotate back. The closed forms only cover the Green functions; the per-axis
// control is a construction of this library.

#include "hpid/errors.hpp"
#include "hpid/numerics.hpp"
#include "hpid/scalar_kernels.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace hpid {

template <typename Scalar = double>
struct MatrixBeta {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix beta_matrix;
  Vector eigvals;
  Matrix eigvecs;
  /// eigvecs is exactly the identity: rotations are skipped.
  bool axis_aligned = false;

  Eigen::Index dim() const { return eigvals.size(); }

  /// All eigenvalues equal (beta I).
  bool isotropic() const {
    return axis_aligned && (eigvals.array() == eigvals(0)).all();
  }

  template <typename D>
  Vector to_eigenbasis(const Eigen::MatrixBase<D>& x) const {
    if (axis_aligned) return x;
    return eigvecs.transpose() * x;
  }

  template <typename D>
  Vector from_eigenbasis(const Eigen::MatrixBase<D>& x) const {
    if (axis_aligned) return x;
    return eigvecs * x;
  }
};

namespace detail {

template <typename Scalar>
Scalar clamp_eigenvalue(Scalar lambda) {
  if (lambda < Scalar(-1e-8)) {
    throw DomainError("potential matrix is not positive semi-definite (eigenvalue " +
                      std::to_string(static_cast<double>(lambda)) + ")");
  }
  return lambda < Scalar(0) ? Scalar(0) : lambda;
}

}  // namespace detail

/// Spectral decomposition of a symmetric positive semi-definite potential matrix.
template <typename Derived>
MatrixBeta<typename Derived::Scalar> decompose(const Eigen::MatrixBase<Derived>& beta_matrix) {
  using Scalar = typename Derived::Scalar;
  using Result = MatrixBeta<Scalar>;
  const Eigen::Index d = beta_matrix.rows();
  if (d < 1 || beta_matrix.cols() != d) throw InputError("potential matrix must be square and nonempty");
  if (!beta_matrix.allFinite()) throw InputError("potential matrix has non-finite entries");

  const Scalar scale = std::max(beta_matrix.cwiseAbs().maxCoeff(), Scalar(1e-300));
  if ((beta_matrix - beta_matrix.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale) {
    throw InputError("potential matrix is not symmetric");
  }

  Result out;
  out.beta_matrix = (beta_matrix + beta_matrix.transpose()) / 2;
  const typename Result::Matrix off = out.beta_matrix - typename Result::Matrix(out.beta_matrix.diagonal().asDiagonal());
  if ((off.array() == Scalar(0)).all()) {
    out.eigvals = out.beta_matrix.diagonal();
    out.eigvecs = Result::Matrix::Identity(d, d);
    out.axis_aligned = true;
  } else {
    Eigen::SelfAdjointEigenSolver<typename Result::Matrix> solver(out.beta_matrix);
    if (solver.info() != Eigen::Success) throw InputError("eigendecomposition failed");
    out.eigvals = solver.eigenvalues();
    out.eigvecs = solver.eigenvectors();
  }
  for (Eigen::Index i = 0; i < d; ++i) out.eigvals(i) = detail::clamp_eigenvalue(out.eigvals(i));
  return out;
}

/// beta * I without a decomposition.
template <typename Scalar = double>
MatrixBeta<Scalar> isotropic_beta(Scalar beta, Eigen::Index dim) {
  const ScalarBeta<Scalar> checked(beta, dim);
  MatrixBeta<Scalar> out;
  out.beta_matrix = MatrixBeta<Scalar>::Matrix::Identity(dim, dim) * beta;
  out.eigvals = MatrixBeta<Scalar>::Vector::Constant(dim, beta);
  out.eigvecs = MatrixBeta<Scalar>::Matrix::Identity(dim, dim);
  out.axis_aligned = true;
  return out;
}

/// sqrt of an eigenvalue, 0 on the free path.
template <typename Scalar>
Scalar axis_root(Scalar lambda) {
  using std::sqrt;
  return lambda < Scalar(kFreeBetaThreshold) ? Scalar(0) : sqrt(lambda);
}

namespace detail {

template <typename Scalar, typename DX, typename DY>
Scalar log_mehler_general(const MatrixBeta<Scalar>& params, Scalar duration, const Eigen::MatrixBase<DX>& x,
                          const Eigen::MatrixBase<DY>& y) {
  if (x.size() != params.dim() || y.size() != params.dim()) throw InputError("point dimension mismatch");
  if (!x.allFinite() || !y.allFinite()) throw InputError("non-finite kernel argument");
  const auto xe = params.to_eigenbasis(x);
  const auto ye = params.to_eigenbasis(y);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < params.dim(); ++i) {
    const auto c = propagator_coeffs(axis_root(params.eigvals(i)), duration);
    const Scalar diff = xe(i) - ye(i);
    total += -c.diag / 2 * diff * diff - c.gap * xe(i) * ye(i) - c.log_norm;
  }
  return total;
}

}  // namespace detail

/// log G-(t; x; y) for a general quadratic potential.
template <typename Scalar, typename DX, typename DY>
Scalar log_g_minus_general(const MatrixBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x,
                           const Eigen::MatrixBase<DY>& y) {
  detail::check_backward_time(t);
  return detail::log_mehler_general(params, Scalar(1) - t, x, y);
}

/// log G+(t; x; y) for a general quadratic potential.
template <typename Scalar, typename DX, typename DY>
Scalar log_g_plus_general(const MatrixBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x,
                          const Eigen::MatrixBase<DY>& y) {
  detail::check_forward_time(t);
  return detail::log_mehler_general(params, t, x, y);
}

/// log[G-(t; x; y) / G+(1; y; 0)] for a general quadratic potential.
template <typename Scalar, typename DX, typename DY>
Scalar log_kernel_ratio_general(const MatrixBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x,
                                const Eigen::MatrixBase<DY>& y) {
  detail::check_backward_time(t);
  if (x.size() != params.dim() || y.size() != params.dim()) throw InputError("point dimension mismatch");
  const auto xe = params.to_eigenbasis(x);
  const auto ye = params.to_eigenbasis(y);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < params.dim(); ++i) {
    const auto c = ratio_coeffs(axis_root(params.eigvals(i)), t);
    const Scalar diff = xe(i) - ye(i);
    total += c.log_norm - c.diag / 2 * diff * diff - c.gap * xe(i) * ye(i) + c.tail / 2 * ye(i) * ye(i);
  }
  return total;
}

/// Per-eigen-axis drift prefactors: in the eigenbasis u_i = c1_i (xhat_i - c2_i x_i).
template <typename Scalar>
struct AxisPrefactors {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c2;
};

template <typename Scalar>
AxisPrefactors<Scalar> general_control_reduction(const MatrixBeta<Scalar>& params, Scalar t) {
  detail::check_backward_time(t);
  AxisPrefactors<Scalar> out;
  out.c1.resize(params.dim());
  out.c2.resize(params.dim());
  for (Eigen::Index i = 0; i < params.dim(); ++i) {
    const auto p = drift_prefactors(axis_root(params.eigvals(i)), t);
    out.c1(i) = p.c1;
    out.c2(i) = p.c2;
  }
  return out;
}

}  // namespace hpid
