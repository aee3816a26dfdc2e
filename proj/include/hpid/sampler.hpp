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
#include "hpid/matrix_kernels.hpp"
#include "hpid/sde.hpp"
#include "hpid/targets.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hpid {

enum class ControlMode { kUhis, kLegendre, kEmpirical, kQuadrature, kZero };

std::string to_string(ControlMode mode);
ControlMode parse_control_mode(const std::string& text);

/// Quadratic potential as given by the user: one scalar, a diagonal, or a full
/// symmetric matrix. Resolved against the target dimension at run time.
struct BetaSpec {
  enum class Kind { kScalar, kDiagonal, kMatrix };
  Kind kind = Kind::kScalar;
  std::vector<double> values{0.0};

  static BetaSpec scalar(double beta) { return {Kind::kScalar, {beta}}; }
  MatrixBeta<double> resolve(Eigen::Index dim) const;
  std::string describe() const;
};

struct RunConfig {
  /// Energy mode: either a programmatic energy or a registered name.
  EnergyPtr energy;
  std::string energy_name;
  EnergyParams energy_params;
  /// Empirical mode.
  std::shared_ptr<const EmpiricalTarget> empirical;
  std::filesystem::path dataset;

  BetaSpec beta;
  long n_samples = 1000;
  SdeConfig sde;
  UhisConfig uhis;
  NonuniversalOptions legendre;
  QuadratureGrid quadrature;
  ControlMode control = ControlMode::kUhis;

  std::filesystem::path output_dir;  ///< empty: nothing is written
  bool write_trajectories = false;
  bool keep_trajectories = false;  ///< keep full Trajectory objects in the summary
  int threads = 1;

  /// Canonical config text and its hash, echoed into summary.json.
  std::string config_echo;
  std::string config_hash;

  bool energy_mode() const { return control != ControlMode::kEmpirical; }
};

/// Loads the dataset or builds the named energy when only names are given.
/// Throws ConfigError when the config is inconsistent.
void resolve_targets(RunConfig& cfg);
void validate(const RunConfig& cfg);

/// Builds the evaluator for the resolved config.
ControlPtr make_control(const RunConfig& cfg);

struct TrajectoryMeta {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  double min_ess = 0.0;
  double final_max_weight = 0.0;
  double log_weight = 0.0;  ///< path importance weight, energy mode only
};

struct ZEstimate {
  double value = 0.0;   ///< mean of the path weights
  double standard_error = 0.0;  ///< sample standard deviation / sqrt(S)
  double log_value = 0.0;
  double log_weight_sd = 0.0;
  /// (1/S) sum exp(-E(y_s)) over the terminals, reported for reference.
  double terminal_mean = 0.0;
};

struct RunSummary {
  Eigen::MatrixXd terminals;  ///< S x d
  std::optional<Eigen::MatrixXd> early_exit;
  std::optional<ZEstimate> z;
  std::vector<TrajectoryMeta> meta;
  std::vector<Trajectory> trajectories;  ///< filled when keep_trajectories is set
  std::string config_hash;
};

/// Simulates n_samples independent trajectories. Each trajectory i uses the
/// streams keyed by (sde.seed, i), so results do not depend on `threads`.
/// Any failing trajectory aborts the run; when an output directory is set a
/// partial manifest is written before the error is rethrown.
RunSummary run(RunConfig cfg);

/// Stable accumulator for the path importance weight
///   log w = -E(x_K) - log G+(1; x_K; 0)
///         + sum_k [log G+(dt; x_{k+1}; x_k) - log N(x_{k+1}; x_k + u_k dt, dt I)]
/// whose expectation under the simulated process is Z.
class PathWeight {
 public:
  PathWeight(const MatrixBeta<double>& params, double dt);
  void step(const Eigen::VectorXd& x, const Eigen::VectorXd& drift, const Eigen::VectorXd& next);
  double finish(const Eigen::VectorXd& terminal, double energy) const;
  double accumulated() const { return log_w_; }

 private:
  const MatrixBeta<double>* params_;
  double dt_;
  double log_w_ = 0.0;
};

/// Mean and standard error of exp(log_w) computed in the log domain.
ZEstimate estimate_z(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                     const Eigen::Ref<const Eigen::VectorXd>& terminal_energies);

struct SweepRow {
  std::string sweep;  ///< "steps" or "samples"
  int steps = 0;
  long samples = 0;
  std::vector<double> values;  ///< one Z estimate per repeat
  double mean = 0.0, median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
  double iqr() const { return q3 - q1; }
};

/// Repeats independent runs over each steps setting (samples fixed at
/// cfg.n_samples) and each samples setting (steps fixed at cfg.sde.n_steps).
std::vector<SweepRow> estimate_z_convergence(const RunConfig& cfg, const std::vector<int>& steps_list,
                                             const std::vector<long>& samples_list, int n_repeats);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

/// Linear-interpolation quantile of unsorted data, p in [0, 1].
double quantile(std::vector<double> values, double p);

}  // namespace hpid
