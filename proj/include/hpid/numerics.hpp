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

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <numbers>

namespace hpid {

/// Potentials with beta below this value use the exact heat-kernel formulas.
inline constexpr double kFreeBetaThreshold = 1e-12;

template <typename Scalar>
Scalar log_two_pi() {
  return std::log(2 * std::numbers::pi_v<Scalar>);
}

/// log(sinh(a*s)/a) for a = sqrt(beta) >= 0 and s > 0; equals log(s) when a == 0.
template <typename Scalar>
Scalar log_sinh_over(Scalar a, Scalar s) {
  using std::exp;
  using std::log;
  using std::log1p;
  using std::sinh;
  if (a == Scalar(0)) return log(s);
  const Scalar u = a * s;
  if (u < Scalar(20)) return log(sinh(u) / a);
  return u + log1p(-exp(-2 * u)) - log(Scalar(2)) - log(a);
}

/// a*coth(a*s), with the limit 1/s at a == 0.
template <typename Scalar>
Scalar scaled_coth(Scalar a, Scalar s) {
  using std::tanh;
  if (a == Scalar(0)) return Scalar(1) / s;
  return a / tanh(a * s);
}

/// a/sinh(a*s), with the limit 1/s at a == 0.
template <typename Scalar>
Scalar scaled_csch(Scalar a, Scalar s) {
  using std::exp;
  using std::sinh;
  if (a == Scalar(0)) return Scalar(1) / s;
  const Scalar u = a * s;
  if (u < Scalar(20)) return a / sinh(u);
  return 2 * a * exp(-u) / (Scalar(1) - exp(-2 * u));
}

/// Numerically stable log(sum(exp(v))).
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::ArrayBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v - m).exp().sum());
}

/// Self-normalized weights softmax(v), written into `weights`.
/// Returns log(sum(exp(v))).
template <typename Derived, typename Out>
typename Derived::Scalar softmax(const Eigen::ArrayBase<Derived>& v, Eigen::ArrayBase<Out>& weights) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = v.maxCoeff();
  weights.derived() = (v - m).exp();
  const Scalar total = weights.sum();
  weights.derived() /= total;
  return m + std::log(total);
}

/// (sum w)^2 / sum w^2.
template <typename Derived>
typename Derived::Scalar effective_sample_size(const Eigen::ArrayBase<Derived>& w) {
  const auto s = w.sum();
  return s * s / w.square().sum();
}

}  // namespace hpid
