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

// Stationary points of the y-integrand of the optimal control.
//
// The kernel log-ratio log[G-(t;x;y)/G+(1;y;0)] is quadratic in y with an
// isotropic, x-independent Hessian h(t) and maximizer y* = g(t) x, where
//
//   g(t) = sinh(a) / sinh(a t),   h(t) = a sinh(a t) / (sinh(a (1-t)) sinh(a))
//
// (g = 1/t and h = t/(1-t) at beta = 0). N(y*, 1/h) is the universal probe.
// Adding the energy gives the non-universal point y<> which solves
//
//   grad E(y) + h y = B x,   B = a / sinh(a (1-t)).

#include "hpid/energy.hpp"
#include "hpid/errors.hpp"
#include "hpid/matrix_kernels.hpp"
#include "hpid/numerics.hpp"
#include "hpid/scalar_kernels.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace hpid {

/// Probe mean gain g and precision h at one time; mean = g x.
template <typename Scalar>
struct ProbeCoeffs {
  Scalar gain;
  Scalar precision;
};

/// Throws DegenerateProbeError when sinh(a t)/sinh(a) < 1e-12 (t -> 0).
template <typename Scalar>
ProbeCoeffs<Scalar> probe_coeffs(Scalar a, Scalar t) {
  using std::exp;
  using std::isfinite;
  if (!isfinite(static_cast<double>(t)) || t >= Scalar(1)) throw DomainError("probe requires t < 1");
  if (t <= Scalar(0)) throw DegenerateProbeError("universal probe is degenerate at t <= 0");
  const Scalar log_denominator = log_sinh_over(a, t) - log_sinh_over(a, Scalar(1));
  if (log_denominator < std::log(Scalar(1e-12))) {
    throw DegenerateProbeError("universal probe is degenerate at t = " + std::to_string(static_cast<double>(t)));
  }
  const Scalar precision =
      exp(log_sinh_over(a, t) - log_sinh_over(a, Scalar(1) - t) - log_sinh_over(a, Scalar(1)));
  return {exp(-log_denominator), precision};
}

template <typename Scalar = double>
struct ProbeGaussian {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;  ///< y*
  Scalar precision_scalar;                        ///< h(t, beta)
  Scalar t;
  Scalar beta;
};

/// Universal stationary point and isotropic Hessian for 0 < t < 1.
template <typename Scalar, typename DX>
ProbeGaussian<Scalar> universal_probe(const ScalarBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x) {
  if (x.size() != params.dim) throw InputError("point dimension mismatch");
  const auto c = probe_coeffs(params.sqrt_beta(), t);
  return {c.gain * x, c.precision, t, params.beta};
}

/// Per-eigen-axis probe of a general quadratic potential.
template <typename Scalar = double>
struct AxisProbe {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;       ///< y*, original basis
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> precision;  ///< h_i per eigen-axis
};

template <typename Scalar, typename DX>
AxisProbe<Scalar> universal_probe_general(const MatrixBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x) {
  if (x.size() != params.dim()) throw InputError("point dimension mismatch");
  auto xe = params.to_eigenbasis(x);
  AxisProbe<Scalar> out;
  out.precision.resize(params.dim());
  for (Eigen::Index i = 0; i < params.dim(); ++i) {
    const auto c = probe_coeffs(axis_root(params.eigvals(i)), t);
    xe(i) *= c.gain;
    out.precision(i) = c.precision;
  }
  out.mean = params.from_eigenbasis(xe);
  return out;
}

struct NonuniversalOptions {
  int max_newton_iterations = 50;
  int max_gradient_iterations = 5000;
  int max_halvings = 30;
  double tolerance = 1e-8;
};

struct NonuniversalPoint {
  Eigen::VectorXd y_diamond;
  /// Diagonal of grad^2 E(y<>) + h, the precision of the Laplace approximation.
  Eigen::VectorXd hessian_diag_estimate;
  bool converged = false;
  int iterations = 0;
  /// |grad E~(y<>) - x| in the rescaled form where the target is x itself.
  double residual = 0.0;
};

/// Solves the energy-dependent stationarity condition by damped Newton (when the
/// energy supplies Hessian-vector products) or gradient descent, warm-started at
/// the universal point. Multimodal objectives yield the local solution reached
/// from that start. Requires energy.has_gradient(); 0 <= t < 1.
NonuniversalPoint nonuniversal_point(const MatrixBeta<double>& params, double t,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                     const NonuniversalOptions& options = {});

NonuniversalPoint nonuniversal_point(const ScalarBeta<double>& params, double t,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                     const NonuniversalOptions& options = {});

struct LegendreControl {
  Eigen::VectorXd drift;
  NonuniversalPoint point;
};

/// Stationary-point (Legendre-Fenchel) control u = c1 (y<> - c2 x).
LegendreControl legendre_control(const MatrixBeta<double>& params, double t,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                 const NonuniversalOptions& options = {});

LegendreControl legendre_control(const ScalarBeta<double>& params, double t,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                 const NonuniversalOptions& options = {});

}  // namespace hpid
