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
#include "hpid/errors.hpp"
#include "hpid/sde.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace hpid;

namespace {

class NanAfter final : public ControlEvaluator {
 public:
  explicit NanAfter(double t_bad) : t_bad_(t_bad) {}
  Eigen::Index dim() const override { return 1; }
  const MatrixBeta<double>& beta() const override { return params_; }
  ControlOutput evaluate(double t, const Eigen::Ref<const Eigen::VectorXd>& x, CounterRng&) const override {
    ControlOutput out;
    out.drift = Eigen::VectorXd::Constant(1, t >= t_bad_ ? std::numeric_limits<double>::quiet_NaN() : 0.0);
    out.weighted_state = x;
    return out;
  }
  std::string name() const override { return "nan"; }

 private:
  double t_bad_;
  MatrixBeta<double> params_ = isotropic_beta(0.0, 1);
};

}  // namespace

TEST_CASE("zero control integrates Brownian motion") {
  const ControlPtr zero = make_zero_control(2);
  SdeConfig cfg;
  cfg.n_steps = 50;
  cfg.seed = 11;
  const int n = 4000;
  Eigen::MatrixXd terminals(2, n);
  for (int i = 0; i < n; ++i) terminals.col(i) = integrate(cfg, *zero, 2, i).terminal;
  const Eigen::Vector2d mean = terminals.rowwise().mean();
  const Eigen::Vector2d var = (terminals.colwise() - mean).array().square().rowwise().sum() / (n - 1);
  // Standard errors: 1/sqrt(n) for the mean, sqrt(2/n) for the variance.
  CHECK(mean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(n));
  CHECK((var.array() - 1.0).abs().maxCoeff() < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("the final step lands on the weighted state plus noise when beta is zero") {
  Eigen::MatrixXd rows(3, 1);
  rows << -2.0, 0.5, 3.0;
  const auto target = std::make_shared<EmpiricalTarget>(rows);
  const ControlPtr control = make_empirical_control(isotropic_beta(0.0, 1), target);
  SdeConfig cfg;
  cfg.n_steps = 40;
  cfg.seed = 3;
  int calls = 0;
  double pulled = 0.0, expected = 0.0;
  integrate(cfg, *control, 1, 0, [&](const StepRecord& r) {
    ++calls;
    if (r.k == cfg.n_steps - 1) {
      pulled = r.x(0) + r.control.drift(0) * cfg.step();
      expected = r.control.weighted_state(0);
    }
  });
  CHECK(calls == cfg.n_steps);
  CHECK(pulled == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single-sample bridge ends near its endpoint") {
  const auto target = std::make_shared<EmpiricalTarget>(Eigen::RowVector2d(1.5, -0.5));
  SdeConfig cfg;
  cfg.n_steps = 400;
  cfg.seed = 2;
  for (double beta : {0.0, 1.0}) {
    const ControlPtr control = make_empirical_control(isotropic_beta(beta, 2), target);
    const Trajectory tr = integrate(cfg, *control, 2, 5);
    // The last increment alone has standard deviation 1/sqrt(K) per axis.
    CHECK((tr.terminal - Eigen::Vector2d(1.5, -0.5)).norm() < 6.0 / std::sqrt(cfg.n_steps));
  }
}

TEST_CASE("trajectories are deterministic in (seed, index)") {
  const auto energy = std::make_shared<DoubleWellEnergy>(1);
  UhisConfig uc;
  uc.n_is = 64;
  const ControlPtr control = make_uhis_control(isotropic_beta(0.5, 1), uc, energy);
  SdeConfig cfg;
  cfg.n_steps = 30;
  cfg.seed = 99;
  const Trajectory a = integrate(cfg, *control, 1, 4);
  const Trajectory b = integrate(cfg, *control, 1, 4);
  const Trajectory c = integrate(cfg, *control, 1, 5);
  CHECK(a.terminal(0) == b.terminal(0));
  CHECK(a.terminal(0) != c.terminal(0));
  cfg.seed = 100;
  CHECK(integrate(cfg, *control, 1, 4).terminal(0) != a.terminal(0));
}

TEST_CASE("recording grid and time range") {
  const ControlPtr zero = make_zero_control(1);
  SdeConfig cfg;
  cfg.n_steps = 20;
  cfg.record_every = 7;
  cfg.record_weighted_state = true;
  cfg.early_exit = true;
  const Trajectory tr = integrate(cfg, *zero, 1);
  REQUIRE(tr.times.size() == 4);  // k = 0, 7, 14, 19
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times[1] == doctest::Approx(7.0 / 20));
  CHECK(tr.times.back() == doctest::Approx(1.0 - 1.0 / 20));
  CHECK(tr.states.size() == 4);
  CHECK(tr.weighted_states.size() == 4);
  CHECK(tr.ess_series.size() == 4);
  REQUIRE(tr.early_exit.has_value());
  CHECK(tr.early_exit->isApprox(tr.states.back()));
  CHECK(tr.states.front().norm() == 0.0);
  for (double t : tr.times) CHECK(t < 1.0);
}

TEST_CASE("weighted states are omitted unless requested") {
  SdeConfig cfg;
  cfg.n_steps = 10;
  const Trajectory tr = integrate(cfg, *make_zero_control(1), 1);
  CHECK(tr.weighted_states.empty());
  CHECK_FALSE(tr.early_exit.has_value());
  CHECK(tr.times.size() == 10);
}

TEST_CASE("non-finite drift raises IntegrationError with the step") {
  SdeConfig cfg;
  cfg.n_steps = 10;
  NanAfter bad(0.3);
  try {
    integrate(cfg, bad, 1);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.step() == 3);
    CHECK(std::isfinite(e.state_norm()));
  }
}

TEST_CASE("configuration checks") {
  SdeConfig cfg;
  cfg.n_steps = 1;
  CHECK_THROWS_AS(integrate(cfg, *make_zero_control(1), 1), ConfigError);
  cfg.n_steps = 10;
  cfg.record_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.record_every = 1;
  CHECK_THROWS_AS(integrate(cfg, *make_zero_control(2), 1), InputError);
}
