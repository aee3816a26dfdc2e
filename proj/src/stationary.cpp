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

#include "hpid/stationary.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace hpid {
namespace {

// F(y) = E(y) + 1/2 y^T Hp y - x^T Bp y, with Hp and Bp diagonal in the
// eigenbasis of the potential. Its minimizer is y<>.
struct Objective {
  const MatrixBeta<double>& params;
  const Energy& energy;
  Eigen::VectorXd h;     // per-axis probe precision
  Eigen::VectorXd bx_e;  // per-axis B_i x_i in the eigenbasis
  Eigen::VectorXd cross; // per-axis B_i

  Eigen::VectorXd apply_h(const Eigen::VectorXd& y) const {
    Eigen::VectorXd ye = params.to_eigenbasis(y);
    ye.array() *= h.array();
    return params.from_eigenbasis(ye);
  }

  double value(const Eigen::VectorXd& y) const {
    const Eigen::VectorXd ye = params.to_eigenbasis(y);
    return energy.value(y) + 0.5 * (h.array() * ye.array().square()).sum() - bx_e.dot(ye);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const {
    return energy.gradient(y) + apply_h(y) - params.from_eigenbasis(bx_e);
  }

  // |grad F| measured in the rescaled coordinates where the target is x.
  double residual(const Eigen::VectorXd& grad) const {
    Eigen::VectorXd ge = params.to_eigenbasis(grad);
    ge.array() /= cross.array();
    return ge.norm();
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const {
    const Eigen::Index d = y.size();
    Eigen::MatrixXd hess(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      hess.col(i) = energy.hessian_vector(y, Eigen::VectorXd::Unit(d, i)) + apply_h(Eigen::VectorXd::Unit(d, i));
    }
    return (hess + hess.transpose()) / 2;
  }
};

Eigen::VectorXd hessian_diagonal(const Objective& f, const Eigen::VectorXd& y) {
  const Eigen::Index d = y.size();
  Eigen::VectorXd diag(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(d, i);
    double energy_term;
    if (f.energy.has_hessian_vector()) {
      energy_term = f.energy.hessian_vector(y, e)(i);
    } else {
      const double step = 1e-5 * (1.0 + std::abs(y(i)));
      energy_term = (f.energy.gradient(y + step * e)(i) - f.energy.gradient(y - step * e)(i)) / (2.0 * step);
    }
    diag(i) = energy_term + f.apply_h(e)(i);
  }
  return diag;
}

}  // namespace

NonuniversalPoint nonuniversal_point(const MatrixBeta<double>& params, double t,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                     const NonuniversalOptions& options) {
  detail::check_backward_time(t);
  if (x.size() != params.dim() || energy.dim() != params.dim()) throw InputError("dimension mismatch");
  if (!energy.has_gradient()) throw InputError("non-universal point requires an energy gradient");

  const Eigen::Index d = params.dim();
  Objective f{params, energy, Eigen::VectorXd(d), Eigen::VectorXd(d), Eigen::VectorXd(d)};
  const Eigen::VectorXd xe = params.to_eigenbasis(Eigen::VectorXd(x));
  Eigen::VectorXd start_e(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double a = axis_root(params.eigvals(i));
    f.cross(i) = drift_prefactors(a, t).c1;
    f.bx_e(i) = f.cross(i) * xe(i);
    if (t > 0.0) {
      f.h(i) = std::exp(log_sinh_over(a, t) - log_sinh_over(a, 1.0 - t) - log_sinh_over(a, 1.0));
    } else {
      f.h(i) = 0.0;
    }
    try {
      start_e(i) = probe_coeffs(a, t).gain * xe(i);
    } catch (const DegenerateProbeError&) {
      start_e(i) = 0.0;
    }
  }

  NonuniversalPoint out;
  Eigen::VectorXd y = params.from_eigenbasis(start_e);
  double fy = f.value(y);
  Eigen::VectorXd grad = f.gradient(y);
  const double tol = options.tolerance * (1.0 + x.norm());
  const bool newton = energy.has_hessian_vector();
  const int max_iter = newton ? options.max_newton_iterations : options.max_gradient_iterations;
  double gd_step = 1.0 / (1.0 + f.h.maxCoeff());

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (f.residual(grad) <= tol) break;
    Eigen::VectorXd direction = -grad;
    double step = gd_step;
    if (newton) {
      Eigen::LLT<Eigen::MatrixXd> llt(f.hessian(y));
      if (llt.info() == Eigen::Success) {
        direction = -llt.solve(grad);
        step = 1.0;
      }
    }
    const double slope = grad.dot(direction);
    bool accepted = false;
    for (int halving = 0; halving <= options.max_halvings; ++halving) {
      const Eigen::VectorXd trial = y + step * direction;
      const double ft = f.value(trial);
      if (std::isfinite(ft) && ft <= fy + 1e-4 * step * slope) {
        y = trial;
        fy = ft;
        accepted = true;
        break;
      }
      step /= 2.0;
    }
    if (!accepted) break;
    if (!newton) gd_step = 2.0 * step;
    grad = f.gradient(y);
  }

  out.residual = f.residual(grad);
  out.converged = out.residual <= tol;
  out.iterations = iter;
  out.y_diamond = y;
  out.hessian_diag_estimate = hessian_diagonal(f, y);
  return out;
}

NonuniversalPoint nonuniversal_point(const ScalarBeta<double>& params, double t,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                     const NonuniversalOptions& options) {
  return nonuniversal_point(isotropic_beta(params.beta, params.dim), t, x, energy, options);
}

LegendreControl legendre_control(const MatrixBeta<double>& params, double t,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                 const NonuniversalOptions& options) {
  LegendreControl out;
  out.point = nonuniversal_point(params, t, x, energy, options);
  const auto pre = general_control_reduction(params, t);
  const Eigen::VectorXd xe = params.to_eigenbasis(Eigen::VectorXd(x));
  const Eigen::VectorXd ye = params.to_eigenbasis(out.point.y_diamond);
  out.drift = params.from_eigenbasis(Eigen::VectorXd(pre.c1.array() * (ye.array() - pre.c2.array() * xe.array())));
  return out;
}

LegendreControl legendre_control(const ScalarBeta<double>& params, double t,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, const Energy& energy,
                                 const NonuniversalOptions& options) {
  return legendre_control(isotropic_beta(params.beta, params.dim), t, x, energy, options);
}

}  // namespace hpid
