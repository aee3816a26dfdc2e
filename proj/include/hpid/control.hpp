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

#include "hpid/energy.hpp"
#include "hpid/errors.hpp"
#include "hpid/matrix_kernels.hpp"
#include "hpid/random.hpp"
#include "hpid/scalar_kernels.hpp"
#include "hpid/stationary.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>

namespace hpid {

struct UhisConfig {
  int n_is = 10000;
  /// Seeds the shared probe noise when `reuse_probe_noise` is set. Fresh noise
  /// comes from the stream handed to each evaluation.
  std::uint64_t seed = 0;
  bool reuse_probe_noise = false;
  /// Below this time the probe is replaced by N(0, fallback_probe_scale^2 I).
  double min_probe_time = 0.0;
  double fallback_probe_scale = 1.0;
  /// Also use the fallback while the universal probe is wider than it along every axis.
  bool fallback_when_wider = false;
  /// Multiplies the probe precision. 1 is the universal probe.
  double probe_precision_scale = 1.0;

  void validate() const;
};

struct EmpiricalTarget {
  Eigen::MatrixXd samples;  ///< S x d, one target vector per row

  EmpiricalTarget() = default;
  explicit EmpiricalTarget(Eigen::MatrixXd rows);

  Eigen::Index count() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
};

struct ControlOutput {
  Eigen::VectorXd drift;
  Eigen::VectorXd weighted_state;
  double ess = 1.0;
  double max_weight = 1.0;
  bool low_ess = false;
};

inline constexpr double kLowEssThreshold = 1.5;

/// Per-axis coefficients of the kernel log-ratio as a function of y, in the
/// eigenbasis of the potential:
///
///   log[G-(t;x;y) / G+(1;y;0)] = offset + sum_i (cross_i x_i y_i - precision_i / 2 y_i^2)
struct RatioAxes {
  Eigen::VectorXd cross;      ///< B_i
  Eigen::VectorXd precision;  ///< h_i
  Eigen::VectorXd diag;       ///< A_i, the x-only part is -A_i/2 x_i^2
  double log_norm = 0.0;      ///< summed over axes
  AxisPrefactors<double> drift;
};

RatioAxes ratio_axes(const MatrixBeta<double>& params, double t);

/// Drift c1 (xhat - c2 x) for a weighted state in the original basis.
Eigen::VectorXd recompose_drift(const MatrixBeta<double>& params, const AxisPrefactors<double>& pre,
                                const Eigen::Ref<const Eigen::VectorXd>& xhat,
                                const Eigen::Ref<const Eigen::VectorXd>& x);

ControlOutput uhis_control(const MatrixBeta<double>& params, const UhisConfig& cfg, double t,
                           const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy, CounterRng& rng);
ControlOutput uhis_control(const ScalarBeta<double>& params, const UhisConfig& cfg, double t,
                           const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy, CounterRng& rng);

/// Same as uhis_control with caller-supplied standard normal draws (d x N).
ControlOutput uhis_control_with_noise(const MatrixBeta<double>& params, const UhisConfig& cfg, double t,
                                      const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                      const Eigen::Ref<const Eigen::MatrixXd>& noise);

ControlOutput empirical_control(const MatrixBeta<double>& params, const EmpiricalTarget& target, double t,
                                const Eigen::Ref<const Eigen::VectorXd>& x);
ControlOutput empirical_control(const ScalarBeta<double>& params, const EmpiricalTarget& target, double t,
                                const Eigen::Ref<const Eigen::VectorXd>& x);

/// Softmax weights of the empirical estimator, exposed for diagnostics and tests.
Eigen::VectorXd empirical_weights(const MatrixBeta<double>& params, const EmpiricalTarget& target, double t,
                                  const Eigen::Ref<const Eigen::VectorXd>& x);

struct QuadratureGrid {
  double lower = -8.0;
  double upper = 8.0;
  int points = 4001;  ///< per axis
  /// Largest tolerated share of the integrand carried by the outermost cells.
  double boundary_tolerance = 1e-8;
};

Eigen::VectorXd quadrature_control(const MatrixBeta<double>& params, double t,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                   const QuadratureGrid& grid = {});
Eigen::VectorXd quadrature_control(const ScalarBeta<double>& params, double t,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                   const QuadratureGrid& grid = {});

/// A drift u(t, x) usable by the integrator. Implementations are immutable and
/// may be shared across threads; all randomness comes from the stream argument.
class ControlEvaluator {
 public:
  virtual ~ControlEvaluator() = default;
  virtual Eigen::Index dim() const = 0;
  virtual const MatrixBeta<double>& beta() const = 0;
  virtual ControlOutput evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, CounterRng& rng) const = 0;
  virtual std::string name() const = 0;
};

using ControlPtr = std::shared_ptr<const ControlEvaluator>;

ControlPtr make_uhis_control(MatrixBeta<double> params, UhisConfig cfg, EnergyPtr energy);
ControlPtr make_empirical_control(MatrixBeta<double> params, std::shared_ptr<const EmpiricalTarget> target);
ControlPtr make_legendre_control(MatrixBeta<double> params, EnergyPtr energy, NonuniversalOptions opts = {});
ControlPtr make_quadrature_control(MatrixBeta<double> params, EnergyPtr energy, QuadratureGrid grid = {});
ControlPtr make_zero_control(Eigen::Index dim);

}  // namespace hpid
