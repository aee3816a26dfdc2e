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

#include "hpid/control.hpp"

#include "hpid/numerics.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace hpid {
namespace {

struct Workspace {
  Eigen::MatrixXd noise;   // d x N
  Eigen::MatrixXd ye;      // d x N, eigenbasis
  Eigen::MatrixXd y;       // d x N, original basis
  Eigen::VectorXd ell;
  Eigen::VectorXd energies;
  Eigen::ArrayXd weights;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

void check_point(const MatrixBeta<double>& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != params.dim()) throw InputError("point dimension mismatch");
  if (!x.allFinite()) throw InputError("non-finite state");
}

void to_original(const MatrixBeta<double>& params, const Eigen::MatrixXd& ye, Eigen::MatrixXd& y) {
  if (params.axis_aligned) {
    y = ye;
  } else {
    y.noalias() = params.eigvecs * ye;
  }
}

ControlOutput finish(const MatrixBeta<double>& params, const RatioAxes& axes, const Eigen::ArrayXd& weights,
                     const Eigen::VectorXd& xhat_e, const Eigen::Ref<const Eigen::VectorXd>& x) {
  ControlOutput out;
  out.weighted_state = params.from_eigenbasis(xhat_e);
  out.drift = recompose_drift(params, axes.drift, out.weighted_state, x);
  out.ess = effective_sample_size(weights);
  out.max_weight = weights.maxCoeff();
  out.low_ess = out.ess < kLowEssThreshold;
  return out;
}

}  // namespace

void UhisConfig::validate() const {
  if (n_is < 1) throw ConfigError("n_is must be at least 1");
  if (!(min_probe_time >= 0.0) || !(min_probe_time < 1.0)) throw ConfigError("min_probe_time must lie in [0, 1)");
  if (!(fallback_probe_scale > 0.0) || !std::isfinite(fallback_probe_scale)) {
    throw ConfigError("fallback_probe_scale must be positive");
  }
  if (!(probe_precision_scale > 0.0) || !std::isfinite(probe_precision_scale)) {
    throw ConfigError("probe_precision_scale must be positive");
  }
}

EmpiricalTarget::EmpiricalTarget(Eigen::MatrixXd rows) : samples(std::move(rows)) {
  if (samples.rows() < 1 || samples.cols() < 1) throw InputError("empirical target needs at least one sample");
  if (!samples.allFinite()) throw InputError("empirical target has non-finite entries");
}

RatioAxes ratio_axes(const MatrixBeta<double>& params, double t) {
  detail::check_backward_time(t);
  const Eigen::Index d = params.dim();
  RatioAxes out;
  out.cross.resize(d);
  out.precision.resize(d);
  out.diag.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double a = axis_root(params.eigvals(i));
    const auto rc = ratio_coeffs(a, t);
    out.cross(i) = scaled_csch(a, 1.0 - t);
    out.precision(i) =
        t > 0.0 ? std::exp(log_sinh_over(a, t) - log_sinh_over(a, 1.0 - t) - log_sinh_over(a, 1.0)) : 0.0;
    out.diag(i) = rc.diag;
    out.log_norm += rc.log_norm;
  }
  out.drift = general_control_reduction(params, t);
  return out;
}

Eigen::VectorXd recompose_drift(const MatrixBeta<double>& params, const AxisPrefactors<double>& pre,
                                const Eigen::Ref<const Eigen::VectorXd>& xhat,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd xe = params.to_eigenbasis(Eigen::VectorXd(x));
  const Eigen::VectorXd he = params.to_eigenbasis(Eigen::VectorXd(xhat));
  return params.from_eigenbasis(Eigen::VectorXd(pre.c1.array() * (he.array() - pre.c2.array() * xe.array())));
}

ControlOutput uhis_control_with_noise(const MatrixBeta<double>& params, const UhisConfig& cfg, double t,
                                      const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                      const Eigen::Ref<const Eigen::MatrixXd>& noise) {
  check_point(params, x);
  if (energy.dim() != params.dim()) throw InputError("energy dimension mismatch");
  if (noise.rows() != params.dim() || noise.cols() < 1) throw InputError("probe noise has the wrong shape");
  const Eigen::Index d = params.dim();
  const Eigen::Index n = noise.cols();
  const RatioAxes axes = ratio_axes(params, t);
  const Eigen::VectorXd xe = params.to_eigenbasis(Eigen::VectorXd(x));

  // Probe mean and precision per eigen-axis.
  Eigen::VectorXd mean(d), precision(d);
  bool wide = t < cfg.min_probe_time;
  if (!wide) {
    try {
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto c = probe_coeffs(axis_root(params.eigvals(i)), t);
        mean(i) = c.gain * xe(i);
        precision(i) = c.precision * cfg.probe_precision_scale;
      }
    } catch (const DegenerateProbeError&) {
      wide = true;
    }
    if (!wide && cfg.fallback_when_wider) {
      wide = precision.maxCoeff() * cfg.fallback_probe_scale * cfg.fallback_probe_scale < 1.0;
    }
  }
  if (wide) {
    mean.setZero();
    precision.setConstant(1.0 / (cfg.fallback_probe_scale * cfg.fallback_probe_scale));
  }

  Workspace& ws = workspace();
  ws.ye.resize(d, n);
  ws.ell.resize(n);
  ws.energies.resize(n);
  // The Gaussian normalizer of the probe and the x-only part of the ratio are
  // shared by all samples and drop out of the normalized weights.
  ws.ell = 0.5 * noise.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < d; ++i) {
    ws.ye.row(i) = (noise.row(i).array() / std::sqrt(precision(i)) + mean(i)).matrix();
    const auto yi = ws.ye.row(i).array().transpose();
    ws.ell.array() += axes.cross(i) * xe(i) * yi - 0.5 * axes.precision(i) * yi.square();
  }
  to_original(params, ws.ye, ws.y);
  energy.values(ws.y, ws.energies);
  ws.ell -= ws.energies;

  softmax(ws.ell.array(), ws.weights);
  const Eigen::VectorXd xhat_e = ws.ye * ws.weights.matrix();
  return finish(params, axes, ws.weights, xhat_e, x);
}

ControlOutput uhis_control(const MatrixBeta<double>& params, const UhisConfig& cfg, double t,
                           const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy, CounterRng& rng) {
  cfg.validate();
  Workspace& ws = workspace();
  ws.noise.resize(params.dim(), cfg.n_is);
  fill_normal(rng, ws.noise);
  return uhis_control_with_noise(params, cfg, t, x, energy, ws.noise);
}

ControlOutput uhis_control(const ScalarBeta<double>& params, const UhisConfig& cfg, double t,
                           const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy, CounterRng& rng) {
  return uhis_control(isotropic_beta(params.beta, params.dim), cfg, t, x, energy, rng);
}

namespace {

// Samples rotated into the eigenbasis, with squares cached; built once per evaluator.
struct RotatedTarget {
  Eigen::MatrixXd ye;         // S x d
  Eigen::MatrixXd ye_square;  // S x d

  RotatedTarget(const MatrixBeta<double>& params, const EmpiricalTarget& target) {
    if (target.dim() != params.dim()) throw InputError("target dimension mismatch");
    if (params.axis_aligned) {
      ye = target.samples;
    } else {
      ye.noalias() = target.samples * params.eigvecs;
    }
    ye_square = ye.array().square().matrix();
  }
};

Eigen::ArrayXd rotated_weights(const MatrixBeta<double>& params, const RotatedTarget& target, const RatioAxes& axes,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd xe = params.to_eigenbasis(Eigen::VectorXd(x));
  const Eigen::VectorXd linear = axes.cross.cwiseProduct(xe);
  Eigen::VectorXd ell = target.ye * linear;
  ell.noalias() -= 0.5 * (target.ye_square * axes.precision);
  Eigen::ArrayXd weights;
  softmax(ell.array(), weights);
  return weights;
}

ControlOutput rotated_empirical(const MatrixBeta<double>& params, const RotatedTarget& target, double t,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_point(params, x);
  const RatioAxes axes = ratio_axes(params, t);
  const Eigen::ArrayXd weights = rotated_weights(params, target, axes, x);
  const Eigen::VectorXd xhat_e = target.ye.transpose() * weights.matrix();
  return finish(params, axes, weights, xhat_e, x);
}

}  // namespace

ControlOutput empirical_control(const MatrixBeta<double>& params, const EmpiricalTarget& target, double t,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  return rotated_empirical(params, RotatedTarget(params, target), t, x);
}

ControlOutput empirical_control(const ScalarBeta<double>& params, const EmpiricalTarget& target, double t,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  return empirical_control(isotropic_beta(params.beta, params.dim), target, t, x);
}

Eigen::VectorXd empirical_weights(const MatrixBeta<double>& params, const EmpiricalTarget& target, double t,
                                  const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_point(params, x);
  return rotated_weights(params, RotatedTarget(params, target), ratio_axes(params, t), x).matrix();
}

namespace {

Eigen::VectorXd quadrature_state(const MatrixBeta<double>& params, double t,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                 const QuadratureGrid& grid) {
  check_point(params, x);
  const Eigen::Index d = params.dim();
  if (d != 1 && d != 2) throw InputError("quadrature control supports d = 1 or 2 only");
  if (energy.dim() != d) throw InputError("energy dimension mismatch");
  if (grid.points < 3 || !(grid.upper > grid.lower)) throw InputError("invalid quadrature grid");

  const Eigen::Index m = grid.points;
  const Eigen::VectorXd nodes = Eigen::VectorXd::LinSpaced(m, grid.lower, grid.upper);
  Eigen::VectorXd log_trap = Eigen::VectorXd::Zero(m);
  log_trap(0) = log_trap(m - 1) = std::log(0.5);

  const Eigen::Index total = d == 1 ? m : m * m;
  Eigen::MatrixXd points(d, total);
  Eigen::VectorXd ell(total);
  Eigen::Array<bool, Eigen::Dynamic, 1> boundary(total);
  for (Eigen::Index k = 0; k < total; ++k) {
    const Eigen::Index i = k % m;
    const Eigen::Index j = k / m;
    points(0, k) = nodes(i);
    ell(k) = log_trap(i);
    bool edge = i == 0 || i == m - 1;
    if (d == 2) {
      points(1, k) = nodes(j);
      ell(k) += log_trap(j);
      edge = edge || j == 0 || j == m - 1;
    }
    boundary(k) = edge;
  }

  Eigen::VectorXd energies(total);
  energy.values(points, energies);
  // The ratio enters in its eigenbasis form; x-only terms cancel on normalization.
  const RatioAxes axes = ratio_axes(params, t);
  const Eigen::VectorXd xe = params.to_eigenbasis(Eigen::VectorXd(x));
  const Eigen::MatrixXd pe = params.axis_aligned ? points : Eigen::MatrixXd(params.eigvecs.transpose() * points);
  ell -= energies;
  for (Eigen::Index i = 0; i < d; ++i) {
    ell.array() += axes.cross(i) * xe(i) * pe.row(i).transpose().array() -
                   0.5 * axes.precision(i) * pe.row(i).transpose().array().square();
  }
  Eigen::ArrayXd weights;
  softmax(ell.array(), weights);
  if (!weights.allFinite()) throw AccuracyError("quadrature integrand is not finite on the grid");
  const double edge_mass = boundary.select(weights, 0.0).sum();
  if (edge_mass > grid.boundary_tolerance) {
    throw AccuracyError("quadrature domain too small: boundary carries " + std::to_string(edge_mass) +
                        " of the integrand");
  }
  return points * weights.matrix();
}

}  // namespace

Eigen::VectorXd quadrature_control(const MatrixBeta<double>& params, double t,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                   const QuadratureGrid& grid) {
  const Eigen::VectorXd xhat = quadrature_state(params, t, x, energy, grid);
  return recompose_drift(params, general_control_reduction(params, t), xhat, x);
}

Eigen::VectorXd quadrature_control(const ScalarBeta<double>& params, double t,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                   const QuadratureGrid& grid) {
  return quadrature_control(isotropic_beta(params.beta, params.dim), t, x, energy, grid);
}

namespace {

class UhisEvaluator final : public ControlEvaluator {
 public:
  UhisEvaluator(MatrixBeta<double> params, UhisConfig cfg, EnergyPtr energy)
      : params_(std::move(params)), cfg_(cfg), energy_(std::move(energy)) {
    cfg_.validate();
    if (!energy_ || energy_->dim() != params_.dim()) throw InputError("energy dimension mismatch");
    if (cfg_.reuse_probe_noise) {
      shared_noise_.resize(params_.dim(), cfg_.n_is);
      CounterRng rng = make_rng(cfg_.seed, ~std::uint64_t{0}, 0, Stream::kProbe);
      fill_normal(rng, shared_noise_);
    }
  }

  Eigen::Index dim() const override { return params_.dim(); }
  const MatrixBeta<double>& beta() const override { return params_; }
  std::string name() const override { return "uhis"; }

  ControlOutput evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, CounterRng& rng) const override {
    if (cfg_.reuse_probe_noise) return uhis_control_with_noise(params_, cfg_, t, x, *energy_, shared_noise_);
    return uhis_control(params_, cfg_, t, x, *energy_, rng);
  }

 private:
  MatrixBeta<double> params_;
  UhisConfig cfg_;
  EnergyPtr energy_;
  Eigen::MatrixXd shared_noise_;
};

class EmpiricalEvaluator final : public ControlEvaluator {
 public:
  EmpiricalEvaluator(MatrixBeta<double> params, const EmpiricalTarget& target)
      : params_(std::move(params)), rotated_(params_, target) {}

  Eigen::Index dim() const override { return params_.dim(); }
  const MatrixBeta<double>& beta() const override { return params_; }
  std::string name() const override { return "empirical"; }

  ControlOutput evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, CounterRng&) const override {
    return rotated_empirical(params_, rotated_, t, x);
  }

 private:
  MatrixBeta<double> params_;
  RotatedTarget rotated_;
};

class LegendreEvaluator final : public ControlEvaluator {
 public:
  LegendreEvaluator(MatrixBeta<double> params, EnergyPtr energy, NonuniversalOptions opts)
      : params_(std::move(params)), energy_(std::move(energy)), opts_(opts) {
    if (!energy_ || energy_->dim() != params_.dim()) throw InputError("energy dimension mismatch");
    if (!energy_->has_gradient()) throw InputError("legendre control requires an energy gradient");
  }

  Eigen::Index dim() const override { return params_.dim(); }
  const MatrixBeta<double>& beta() const override { return params_; }
  std::string name() const override { return "legendre"; }

  ControlOutput evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, CounterRng&) const override {
    const LegendreControl lc = legendre_control(params_, t, x, *energy_, opts_);
    ControlOutput out;
    out.drift = lc.drift;
    out.weighted_state = lc.point.y_diamond;
    return out;
  }

 private:
  MatrixBeta<double> params_;
  EnergyPtr energy_;
  NonuniversalOptions opts_;
};

class QuadratureEvaluator final : public ControlEvaluator {
 public:
  QuadratureEvaluator(MatrixBeta<double> params, EnergyPtr energy, QuadratureGrid grid)
      : params_(std::move(params)), energy_(std::move(energy)), grid_(grid) {
    if (params_.dim() > 2) throw ConfigError("quadrature control supports d = 1 or 2 only");
    if (!energy_ || energy_->dim() != params_.dim()) throw InputError("energy dimension mismatch");
  }

  Eigen::Index dim() const override { return params_.dim(); }
  const MatrixBeta<double>& beta() const override { return params_; }
  std::string name() const override { return "quadrature"; }

  ControlOutput evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, CounterRng&) const override {
    ControlOutput out;
    out.weighted_state = quadrature_state(params_, t, x, *energy_, grid_);
    out.drift = recompose_drift(params_, general_control_reduction(params_, t), out.weighted_state, x);
    return out;
  }

 private:
  MatrixBeta<double> params_;
  EnergyPtr energy_;
  QuadratureGrid grid_;
};

class ZeroEvaluator final : public ControlEvaluator {
 public:
  explicit ZeroEvaluator(Eigen::Index dim) : params_(isotropic_beta(0.0, dim)) {}

  Eigen::Index dim() const override { return params_.dim(); }
  const MatrixBeta<double>& beta() const override { return params_; }
  std::string name() const override { return "zero"; }

  ControlOutput evaluate(double, const Eigen::Ref<const Eigen::VectorXd>& x, CounterRng&) const override {
    ControlOutput out;
    out.drift = Eigen::VectorXd::Zero(x.size());
    out.weighted_state = x;
    return out;
  }

 private:
  MatrixBeta<double> params_;
};

}  // namespace

ControlPtr make_uhis_control(MatrixBeta<double> params, UhisConfig cfg, EnergyPtr energy) {
  return std::make_shared<UhisEvaluator>(std::move(params), cfg, std::move(energy));
}

ControlPtr make_empirical_control(MatrixBeta<double> params, std::shared_ptr<const EmpiricalTarget> target) {
  if (!target) throw InputError("missing empirical target");
  return std::make_shared<EmpiricalEvaluator>(std::move(params), *target);
}

ControlPtr make_legendre_control(MatrixBeta<double> params, EnergyPtr energy, NonuniversalOptions opts) {
  return std::make_shared<LegendreEvaluator>(std::move(params), std::move(energy), opts);
}

ControlPtr make_quadrature_control(MatrixBeta<double> params, EnergyPtr energy, QuadratureGrid grid) {
  return std::make_shared<QuadratureEvaluator>(std::move(params), std::move(energy), grid);
}

ControlPtr make_zero_control(Eigen::Index dim) { return std::make_shared<ZeroEvaluator>(dim); }

}  // namespace hpid
