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

#include "hpid/control.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace hpid {

struct SdeConfig {
  int n_steps = 200;
  std::uint64_t seed = 0;
  int record_every = 1;
  bool record_weighted_state = false;
  /// Also keep xhat at the last drift time as an alternative terminal sample.
  bool early_exit = false;

  void validate() const;
  double step() const { return 1.0 / n_steps; }
};

struct Trajectory {
  std::uint64_t index = 0;
  std::vector<double> times;  ///< drift times t_k of the recorded steps
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> weighted_states;  ///< empty unless requested
  std::vector<double> ess_series;
  Eigen::VectorXd terminal;
  std::optional<Eigen::VectorXd> early_exit;
  double min_ess = 0.0;
  double final_max_weight = 0.0;  ///< largest weight at t = 1 - 1/K
};

/// One Euler-Maruyama step x -> next taken at drift time t.
struct StepRecord {
  int k;
  double t;
  const Eigen::VectorXd& x;
  const ControlOutput& control;
  const Eigen::VectorXd& next;
};

using StepObserver = std::function<void(const StepRecord&)>;

/// Integrates dx = u(t, x) dt + dW from x(0) = 0 on the uniform grid t_k = k / K.
/// Increments and probe noise come from streams keyed by (seed, index, k).
Trajectory integrate(const SdeConfig& cfg, const ControlEvaluator& control, Eigen::Index dim,
                     std::uint64_t trajectory_index = 0, const StepObserver& observer = {});

}  // namespace hpid
