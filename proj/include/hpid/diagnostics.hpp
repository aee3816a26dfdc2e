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

#include "hpid/random.hpp"
#include "hpid/sde.hpp"
#include "hpid/targets.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <vector>

namespace hpid {

/// Correlations of x(t) and xhat(t) with the terminal x(1).
///
/// corr_* averages the per-trajectory ratios x(t).x(1) / |x(1)|^2.
/// pooled_* divides the ensemble mean of x(t).x(1) by the ensemble mean of |x(1)|^2.
struct AutocorrSeries {
  std::vector<double> times;
  std::vector<double> corr_state;
  std::vector<double> corr_weighted;
  std::vector<double> pooled_state;
  std::vector<double> pooled_weighted;
  long n_trajectories = 0;
};

struct AutocorrResult {
  AutocorrSeries ensemble;
  std::vector<AutocorrSeries> per_trajectory;
};

/// Requires trajectories recorded with weighted states on a common time grid.
AutocorrResult autocorrelation(const std::vector<Trajectory>& trajs);

void write_autocorr_csv(const std::filesystem::path& path, const AutocorrResult& result);

struct ModeHistogram {
  std::vector<long> counts;
  std::vector<double> expected;
  long total = 0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;

  /// chi^2_dof quantile at level 1 - alpha.
  double critical_value(double alpha = 0.01) const;
  bool rejected(double alpha = 0.01) const { return chi2 > critical_value(alpha); }
  double min_fraction() const;
};

/// Nearest-center assignment of the rows of `terminals`, tested against the mixture weights.
ModeHistogram mode_assignment(const Eigen::Ref<const Eigen::MatrixXd>& terminals, const GaussianMixtureEnergy& m);

void write_modes_csv(const std::filesystem::path& path, const ModeHistogram& hist, const GaussianMixtureEnergy& m);

/// First time the series reaches `threshold`, linearly interpolated between
/// recorded points. Empty when it never does.
std::optional<double> crossing_time(const std::vector<double>& times, const std::vector<double>& values,
                                    double threshold);

/// Crossing time of corr_weighted (the default) or corr_state.
std::optional<double> transition_time(const AutocorrSeries& series, double threshold = 0.5, bool weighted = true);

struct TransitionReport {
  double threshold = 0.5;
  std::optional<double> weighted;
  std::optional<double> state;
  /// Bootstrap draws of t_weighted - t_state over resampled trajectories.
  std::vector<double> gap_draws;
  double gap_lower = 0.0;  ///< 2.5% quantile
  double gap_upper = 0.0;  ///< 97.5% quantile
  double gap_upper_one_sided = 0.0;  ///< 95% quantile
};

/// Bootstrap over trajectories of the difference of ensemble transition
/// times. Resamples that never cross count as crossing at t = 1.
TransitionReport transition_report(const AutocorrResult& result, double threshold, int n_boot, CounterRng rng);

void write_transition_json(const std::filesystem::path& path, const TransitionReport& report);

/// Reads a trajectory_<i>.csv written by the sampler.
Trajectory load_trajectory_csv(const std::filesystem::path& path);

}  // namespace hpid
