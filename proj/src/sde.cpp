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

#include "hpid/sde.hpp"

#include "hpid/errors.hpp"
#include "hpid/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hpid {

void SdeConfig::validate() const {
  if (n_steps < 2) throw ConfigError("n_steps must be at least 2");
  if (record_every < 1 || record_every > n_steps) throw ConfigError("record_every must lie in [1, n_steps]");
}

Trajectory integrate(const SdeConfig& cfg, const ControlEvaluator& control, Eigen::Index dim,
                     std::uint64_t trajectory_index, const StepObserver& observer) {
  cfg.validate();
  if (dim < 1 || control.dim() != dim) throw InputError("control dimension mismatch");

  const int K = cfg.n_steps;
  const double dt = cfg.step();
  const double sqrt_dt = std::sqrt(dt);

  Trajectory traj;
  traj.index = trajectory_index;
  traj.min_ess = std::numeric_limits<double>::infinity();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd next(dim);
  Eigen::VectorXd xi(dim);
  for (int k = 0; k < K; ++k) {
    const double t = static_cast<double>(k) * dt;
    CounterRng probe_rng = make_rng(cfg.seed, trajectory_index, static_cast<std::uint64_t>(k), Stream::kProbe);
    const ControlOutput u = control.evaluate(t, x, probe_rng);
    if (!u.drift.allFinite()) throw IntegrationError("non-finite drift", k, x.norm());

    CounterRng noise_rng = make_rng(cfg.seed, trajectory_index, static_cast<std::uint64_t>(k), Stream::kIncrement);
    fill_normal(noise_rng, xi);
    next = x + u.drift * dt + sqrt_dt * xi;
    if (!next.allFinite()) throw IntegrationError("non-finite state", k + 1, next.norm());

    traj.min_ess = std::min(traj.min_ess, u.ess);
    const bool last = k == K - 1;
    if (k % cfg.record_every == 0 || last) {
      traj.times.push_back(t);
      traj.states.push_back(x);
      traj.ess_series.push_back(u.ess);
      if (cfg.record_weighted_state) traj.weighted_states.push_back(u.weighted_state);
    }
    if (last) {
      traj.final_max_weight = u.max_weight;
      if (cfg.early_exit) traj.early_exit = u.weighted_state;
    }
    if (observer) observer(StepRecord{k, t, x, u, next});
    x.swap(next);
  }
  traj.terminal = x;
  return traj;
}

}  // namespace hpid
