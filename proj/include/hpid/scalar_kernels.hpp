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

// Green functions of the imaginary-time harmonic oscillator with the isotropic
// potential V(x) = beta |x|^2 / 2.
//
//   G-(t; x; y)  solves  -dG/dt + V G = (1/2) lap G,  G-(1) = delta(x - y)
//   G+(t; x; y)  solves   dG/dt + V G = (1/2) lap G,  G+(0) = delta(x - y)
//
// Both are Mehler kernels over an elapsed duration s (s = 1 - t for G-, s = t
// for G+):
//
//   log G = -A/2 |x - y|^2 - (A - B) x.y - d/2 log(2 pi sinh(a s) / a)
//
// with a = sqrt(beta), A = a coth(a s), B = a / sinh(a s). At beta = 0 this is
// the heat kernel N(y | x, s I). Everything is evaluated in log domain.

#include "hpid/errors.hpp"
#include "hpid/numerics.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace hpid {

template <typename Scalar = double>
struct ScalarBeta {
  Scalar beta;
  Eigen::Index dim;

  ScalarBeta(Scalar beta_, Eigen::Index dim_) : beta(beta_), dim(dim_) {
    using std::isfinite;
    if (!isfinite(static_cast<double>(beta)) || beta < Scalar(0)) {
      throw DomainError("beta must be finite and nonnegative");
    }
    if (dim < 1) throw InputError("dimension must be at least 1");
  }

  /// True when the exact beta = 0 formulas are used.
  bool is_free() const { return beta < Scalar(kFreeBetaThreshold); }

  /// sqrt(beta), or exactly 0 on the free path.
  Scalar sqrt_beta() const {
    using std::sqrt;
    return is_free() ? Scalar(0) : sqrt(beta);
  }
};

/// Quadratic-form coefficients of a Mehler kernel over one duration.
template <typename Scalar>
struct PropagatorCoeffs {
  Scalar diag;      ///< a coth(a s)
  Scalar cross;     ///< a / sinh(a s)
  Scalar gap;       ///< diag - cross = a tanh(a s / 2)
  Scalar log_norm;  ///< per-dimension log normalizer, (1/2) log(2 pi sinh(a s) / a)
};

/// Coefficients for a = sqrt(beta) (0 selects the heat kernel) and duration s > 0.
template <typename Scalar>
PropagatorCoeffs<Scalar> propagator_coeffs(Scalar a, Scalar s) {
  using std::tanh;
  PropagatorCoeffs<Scalar> c;
  c.diag = scaled_coth(a, s);
  c.cross = scaled_csch(a, s);
  c.gap = (a == Scalar(0)) ? Scalar(0) : a * tanh(a * s / 2);
  c.log_norm = (log_two_pi<Scalar>() + log_sinh_over(a, s)) / 2;
  return c;
}

/// Backward and forward kernel coefficients at one time point.
template <typename Scalar>
struct KernelCoeffs {
  Scalar t;
  Scalar a_minus, b_minus, log_c_minus;  ///< G-(t), duration 1 - t
  Scalar a_plus, b_plus, log_c_plus;     ///< G+(t), duration t
};

namespace detail {

template <typename Scalar, typename DX, typename DY>
void check_points(const ScalarBeta<Scalar>& params, const Eigen::MatrixBase<DX>& x,
                  const Eigen::MatrixBase<DY>& y) {
  if (x.size() != params.dim || y.size() != params.dim) {
    throw InputError("point dimension " + std::to_string(x.size()) + "/" + std::to_string(y.size()) +
                     " does not match kernel dimension " + std::to_string(params.dim));
  }
  if (!x.allFinite() || !y.allFinite()) throw InputError("non-finite kernel argument");
}

template <typename Scalar>
void check_backward_time(Scalar t) {
  using std::isfinite;
  if (!isfinite(static_cast<double>(t)) || t < Scalar(0) || t >= Scalar(1)) {
    throw DomainError("backward kernel requires 0 <= t < 1");
  }
}

template <typename Scalar>
void check_forward_time(Scalar t) {
  using std::isfinite;
  if (!isfinite(static_cast<double>(t)) || t <= Scalar(0) || t > Scalar(1)) {
    throw DomainError("forward kernel requires 0 < t <= 1");
  }
}

template <typename Scalar, typename DX, typename DY>
Scalar log_mehler(const PropagatorCoeffs<Scalar>& c, Eigen::Index dim, const Eigen::MatrixBase<DX>& x,
                  const Eigen::MatrixBase<DY>& y) {
  return -c.diag / 2 * (x - y).squaredNorm() - c.gap * x.dot(y) - Scalar(dim) * c.log_norm;
}

}  // namespace detail

template <typename Scalar>
KernelCoeffs<Scalar> kernel_coeffs(const ScalarBeta<Scalar>& params, Scalar t) {
  detail::check_backward_time(t);
  detail::check_forward_time(t);
  const Scalar a = params.sqrt_beta();
  const auto minus = propagator_coeffs(a, Scalar(1) - t);
  const auto plus = propagator_coeffs(a, t);
  return {t, minus.diag, minus.cross, minus.log_norm, plus.diag, plus.cross, plus.log_norm};
}

/// log G-(t; x; y), 0 <= t < 1.
template <typename Scalar, typename DX, typename DY>
Scalar log_g_minus(const ScalarBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x,
                   const Eigen::MatrixBase<DY>& y) {
  detail::check_backward_time(t);
  detail::check_points(params, x, y);
  return detail::log_mehler(propagator_coeffs(params.sqrt_beta(), Scalar(1) - t), params.dim, x, y);
}

/// log G+(t; x; y), 0 < t <= 1.
template <typename Scalar, typename DX, typename DY>
Scalar log_g_plus(const ScalarBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x,
                  const Eigen::MatrixBase<DY>& y) {
  detail::check_forward_time(t);
  detail::check_points(params, x, y);
  return detail::log_mehler(propagator_coeffs(params.sqrt_beta(), t), params.dim, x, y);
}

/// Coefficients of log[G-(t; x; y) / G+(1; y; 0)] viewed as a function of y:
///
///   const - diag/2 |x - y|^2 - gap x.y + tail/2 |y|^2
template <typename Scalar>
struct RatioCoeffs {
  Scalar diag;      ///< a coth(a (1-t))
  Scalar gap;       ///< a tanh(a (1-t) / 2)
  Scalar tail;      ///< a coth(a)
  Scalar log_norm;  ///< per-dimension (1/2) log(sinh(a) / sinh(a (1-t)))
};

template <typename Scalar>
RatioCoeffs<Scalar> ratio_coeffs(Scalar a, Scalar t) {
  const auto minus = propagator_coeffs(a, Scalar(1) - t);
  return {minus.diag, minus.gap, scaled_coth(a, Scalar(1)),
          (log_sinh_over(a, Scalar(1)) - log_sinh_over(a, Scalar(1) - t)) / 2};
}

/// log[G-(t; x; y) / G+(1; y; 0)] from the combined closed form.
template <typename Scalar, typename DX, typename DY>
Scalar log_kernel_ratio(const ScalarBeta<Scalar>& params, Scalar t, const Eigen::MatrixBase<DX>& x,
                        const Eigen::MatrixBase<DY>& y) {
  detail::check_backward_time(t);
  detail::check_points(params, x, y);
  const auto c = ratio_coeffs(params.sqrt_beta(), t);
  return Scalar(params.dim) * c.log_norm - c.diag / 2 * (x - y).squaredNorm() - c.gap * x.dot(y) +
         c.tail / 2 * y.squaredNorm();
}

/// The optimal drift is u = c1 (xhat - c2 x).
template <typename Scalar>
struct DriftPrefactors {
  Scalar c1;  ///< a / sinh(a (1-t))
  Scalar c2;  ///< cosh(a (1-t))
};

template <typename Scalar>
DriftPrefactors<Scalar> drift_prefactors(Scalar a, Scalar t) {
  using std::cosh;
  detail::check_backward_time(t);
  const Scalar tau = Scalar(1) - t;
  return {scaled_csch(a, tau), a == Scalar(0) ? Scalar(1) : cosh(a * tau)};
}

template <typename Scalar>
DriftPrefactors<Scalar> drift_prefactors(const ScalarBeta<Scalar>& params, Scalar t) {
  return drift_prefactors(params.sqrt_beta(), t);
}

}  // namespace hpid
