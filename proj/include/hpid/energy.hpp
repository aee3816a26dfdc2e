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

#include <memory>
#include <string>

namespace hpid {

/// Target energy E(y) = -log p(y) + const.
///
/// Implementations must be safe for concurrent const calls.
class Energy {
 public:
  virtual ~Energy() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double value(const Eigen::Ref<const Eigen::VectorXd>& y) const = 0;

  virtual bool has_gradient() const { return false; }
  virtual Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  virtual bool has_hessian_vector() const { return false; }
  virtual Eigen::VectorXd hessian_vector(const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const Eigen::Ref<const Eigen::VectorXd>& v) const;

  /// Energies of the columns of `points` (dim x n) into `out` (size n).
  virtual void values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const;

  virtual std::string name() const = 0;
};

using EnergyPtr = std::shared_ptr<const Energy>;

/// E(y) = |y - mean|^2 / (2 variance): the isotropic Gaussian N(mean, variance I).
class QuadraticEnergy final : public Energy {
 public:
  QuadraticEnergy(Eigen::VectorXd mean, double variance);

  Eigen::Index dim() const override { return mean_.size(); }
  double value(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_gradient() const override { return true; }
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_hessian_vector() const override { return true; }
  Eigen::VectorXd hessian_vector(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& v) const override;
  void values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const override;
  std::string name() const override { return "gaussian"; }

  const Eigen::VectorXd& mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  Eigen::VectorXd mean_;
  double variance_;
};

/// Separable double well E(y) = scale * sum_i (y_i^2 - 1)^2.
class DoubleWellEnergy final : public Energy {
 public:
  explicit DoubleWellEnergy(Eigen::Index dim, double scale = 1.0);

  Eigen::Index dim() const override { return dim_; }
  double value(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_gradient() const override { return true; }
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_hessian_vector() const override { return true; }
  Eigen::VectorXd hessian_vector(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& v) const override;
  void values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const override;
  std::string name() const override { return "double_well"; }

 private:
  Eigen::Index dim_;
  double scale_;
};

/// E(y) = c everywhere (a flat, improper target).
class ConstantEnergy final : public Energy {
 public:
  ConstantEnergy(Eigen::Index dim, double level = 0.0) : dim_(dim), level_(level) {}

  Eigen::Index dim() const override { return dim_; }
  double value(const Eigen::Ref<const Eigen::VectorXd>&) const override { return level_; }
  bool has_gradient() const override { return true; }
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return Eigen::VectorXd::Zero(dim_);
  }
  bool has_hessian_vector() const override { return true; }
  Eigen::VectorXd hessian_vector(const Eigen::Ref<const Eigen::VectorXd>&,
                                 const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return Eigen::VectorXd::Zero(dim_);
  }
  void values(const Eigen::Ref<const Eigen::MatrixXd>&, Eigen::Ref<Eigen::VectorXd> out) const override {
    out.setConstant(level_);
  }
  std::string name() const override { return "constant"; }

 private:
  Eigen::Index dim_;
  double level_;
};

/// base(y) + offset. Every self-normalized quantity must be invariant to it.
class ShiftedEnergy final : public Energy {
 public:
  ShiftedEnergy(EnergyPtr base, double offset) : base_(std::move(base)), offset_(offset) {}

  Eigen::Index dim() const override { return base_->dim(); }
  double value(const Eigen::Ref<const Eigen::VectorXd>& y) const override { return base_->value(y) + offset_; }
  bool has_gradient() const override { return base_->has_gradient(); }
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const override { return base_->gradient(y); }
  bool has_hessian_vector() const override { return base_->has_hessian_vector(); }
  Eigen::VectorXd hessian_vector(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& v) const override {
    return base_->hessian_vector(y, v);
  }
  void values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const override {
    base_->values(points, out);
    out.array() += offset_;
  }
  std::string name() const override { return base_->name() + "+shift"; }

 private:
  EnergyPtr base_;
  double offset_;
};

}  // namespace hpid
