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

#include "hpid/energy.hpp"

#include "hpid/errors.hpp"

namespace hpid {

Eigen::VectorXd Energy::gradient(const Eigen::Ref<const Eigen::VectorXd>&) const {
  throw InputError("energy '" + name() + "' does not provide a gradient");
}

Eigen::VectorXd Energy::hessian_vector(const Eigen::Ref<const Eigen::VectorXd>&,
                                       const Eigen::Ref<const Eigen::VectorXd>&) const {
  throw InputError("energy '" + name() + "' does not provide Hessian-vector products");
}

void Energy::values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const {
  for (Eigen::Index j = 0; j < points.cols(); ++j) out(j) = value(points.col(j));
}

QuadraticEnergy::QuadraticEnergy(Eigen::VectorXd mean, double variance) : mean_(std::move(mean)), variance_(variance) {
  if (mean_.size() < 1) throw InputError("gaussian energy needs a nonempty mean");
  if (!(variance_ > 0.0)) throw InputError("gaussian energy needs a positive variance");
}

double QuadraticEnergy::value(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return (y - mean_).squaredNorm() / (2.0 * variance_);
}

Eigen::VectorXd QuadraticEnergy::gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return (y - mean_) / variance_;
}

Eigen::VectorXd QuadraticEnergy::hessian_vector(const Eigen::Ref<const Eigen::VectorXd>&,
                                                const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return v / variance_;
}

void QuadraticEnergy::values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const {
  out = (points.colwise() - mean_).colwise().squaredNorm().transpose() / (2.0 * variance_);
}

DoubleWellEnergy::DoubleWellEnergy(Eigen::Index dim, double scale) : dim_(dim), scale_(scale) {
  if (dim_ < 1) throw InputError("double well needs dim >= 1");
}

double DoubleWellEnergy::value(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return scale_ * (y.array().square() - 1.0).square().sum();
}

Eigen::VectorXd DoubleWellEnergy::gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return (4.0 * scale_ * y.array() * (y.array().square() - 1.0)).matrix();
}

Eigen::VectorXd DoubleWellEnergy::hessian_vector(const Eigen::Ref<const Eigen::VectorXd>& y,
                                                 const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return (scale_ * (12.0 * y.array().square() - 4.0) * v.array()).matrix();
}

void DoubleWellEnergy::values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const {
  out = scale_ * (points.array().square() - 1.0).square().colwise().sum().transpose().matrix();
}

}  // namespace hpid
