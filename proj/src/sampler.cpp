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

#include "hpid/sampler.hpp"

#include "hpid/errors.hpp"
#include "hpid/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace hpid {

std::string to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::kUhis: return "uhis";
    case ControlMode::kLegendre: return "legendre";
    case ControlMode::kEmpirical: return "empirical";
    case ControlMode::kQuadrature: return "oracle";
    case ControlMode::kZero: return "zero";
  }
  return "unknown";
}

ControlMode parse_control_mode(const std::string& text) {
  if (text == "uhis") return ControlMode::kUhis;
  if (text == "legendre") return ControlMode::kLegendre;
  if (text == "empirical") return ControlMode::kEmpirical;
  if (text == "oracle" || text == "quadrature") return ControlMode::kQuadrature;
  if (text == "zero") return ControlMode::kZero;
  throw ConfigError("unknown control mode '" + text + "' (expected uhis, legendre, empirical, oracle or zero)");
}

MatrixBeta<double> BetaSpec::resolve(Eigen::Index dim) const {
  try {
    switch (kind) {
      case Kind::kScalar:
        if (values.size() != 1) throw ConfigError("scalar beta needs one value");
        return isotropic_beta(values[0], dim);
      case Kind::kDiagonal: {
        if (static_cast<Eigen::Index>(values.size()) != dim) {
          throw ConfigError("diagonal beta needs " + std::to_string(dim) + " values");
        }
        const Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(values.data(), dim);
        return decompose(Eigen::MatrixXd(diag.asDiagonal()));
      }
      case Kind::kMatrix: {
        if (static_cast<Eigen::Index>(values.size()) != dim * dim) {
          throw ConfigError("matrix beta needs " + std::to_string(dim * dim) + " values");
        }
        return decompose(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                             values.data(), dim, dim)
                             .eval());
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid beta: ") + e.what());
  }
  throw ConfigError("invalid beta kind");
}

std::string BetaSpec::describe() const {
  std::ostringstream out;
  out << (kind == Kind::kScalar ? "scalar" : kind == Kind::kDiagonal ? "diagonal" : "matrix") << ":";
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

void resolve_targets(RunConfig& cfg) {
  if (cfg.control == ControlMode::kEmpirical) {
    if (!cfg.empirical) {
      if (cfg.dataset.empty()) throw ConfigError("empirical control needs a dataset");
      try {
        cfg.empirical = std::make_shared<const EmpiricalTarget>(load_dataset(cfg.dataset));
      } catch (const FormatError&) {
        throw;
      } catch (const InputError& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (!cfg.energy) {
    if (cfg.energy_name.empty()) throw ConfigError("energy mode needs an energy name");
    cfg.energy = make_energy(cfg.energy_name, cfg.energy_params);
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.n_samples < 1) throw ConfigError("samples must be at least 1");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  cfg.sde.validate();
  const bool has_energy = static_cast<bool>(cfg.energy);
  const bool has_data = static_cast<bool>(cfg.empirical);
  if (has_energy == has_data) throw ConfigError("exactly one of energy and dataset must be given");
  if (cfg.control == ControlMode::kEmpirical && !has_data) throw ConfigError("empirical control needs a dataset");
  if (cfg.control != ControlMode::kEmpirical && cfg.control != ControlMode::kZero && !has_energy) {
    throw ConfigError(to_string(cfg.control) + " control needs an energy target");
  }
  if (cfg.control == ControlMode::kUhis) cfg.uhis.validate();
  if (cfg.control == ControlMode::kQuadrature && cfg.energy->dim() > 2) {
    throw ConfigError("oracle control supports d = 1 or 2 only");
  }
  if (cfg.control == ControlMode::kLegendre && !cfg.energy->has_gradient()) {
    throw ConfigError("legendre control needs an energy with a gradient");
  }
}

ControlPtr make_control(const RunConfig& cfg) {
  const Eigen::Index dim = cfg.energy ? cfg.energy->dim() : cfg.empirical->dim();
  MatrixBeta<double> params = cfg.beta.resolve(dim);
  switch (cfg.control) {
    case ControlMode::kUhis: {
      UhisConfig uhis = cfg.uhis;
      if (uhis.seed == 0) uhis.seed = cfg.sde.seed;
      return make_uhis_control(std::move(params), uhis, cfg.energy);
    }
    case ControlMode::kLegendre: return make_legendre_control(std::move(params), cfg.energy, cfg.legendre);
    case ControlMode::kEmpirical: return make_empirical_control(std::move(params), cfg.empirical);
    case ControlMode::kQuadrature: return make_quadrature_control(std::move(params), cfg.energy, cfg.quadrature);
    case ControlMode::kZero: return make_zero_control(dim);
  }
  throw ConfigError("invalid control mode");
}

PathWeight::PathWeight(const MatrixBeta<double>& params, double dt) : params_(&params), dt_(dt) {}

void PathWeight::step(const Eigen::VectorXd& x, const Eigen::VectorXd& drift, const Eigen::VectorXd& next) {
  const double d = static_cast<double>(x.size());
  const double proposal =
      -(next - x - drift * dt_).squaredNorm() / (2.0 * dt_) - d / 2.0 * (log_two_pi<double>() + std::log(dt_));
  log_w_ += log_g_plus_general(*params_, dt_, next, x) - proposal;
}

double PathWeight::finish(const Eigen::VectorXd& terminal, double energy) const {
  return log_w_ - energy - log_g_plus_general(*params_, 1.0, terminal, Eigen::VectorXd::Zero(terminal.size()).eval());
}

ZEstimate estimate_z(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                     const Eigen::Ref<const Eigen::VectorXd>& terminal_energies) {
  const Eigen::Index n = log_weights.size();
  if (n < 1 || terminal_energies.size() != n) throw InputError("Z estimate needs matching, nonempty inputs");
  ZEstimate z;
  const double log_n = std::log(static_cast<double>(n));
  z.log_value = log_sum_exp(log_weights.array()) - log_n;
  z.value = std::exp(z.log_value);
  // Standard error of the mean of w = exp(log_w), scaled by the largest weight.
  const double top = log_weights.maxCoeff();
  const Eigen::ArrayXd scaled = (log_weights.array() - top).exp();
  if (n > 1) {
    const double var = (scaled - scaled.mean()).square().sum() / static_cast<double>(n - 1);
    z.standard_error = std::exp(top) * std::sqrt(var / static_cast<double>(n));
    const double mean_log = log_weights.mean();
    z.log_weight_sd = std::sqrt((log_weights.array() - mean_log).square().sum() / static_cast<double>(n - 1));
  }
  z.terminal_mean = std::exp(log_sum_exp((-terminal_energies).array()) - log_n);
  return z;
}

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  const Eigen::Index d = traj.terminal.size();
  const bool weighted = !traj.weighted_states.empty();
  out << "t";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  if (weighted) {
    for (Eigen::Index i = 0; i < d; ++i) out << ",xhat" << i;
  }
  out << ",ess\n";
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    out << traj.times[r];
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << traj.states[r](i);
    if (weighted) {
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << traj.weighted_states[r](i);
    }
    out << ',' << traj.ess_series[r] << '\n';
  }
  // Terminal row: state at t = 1, no drift evaluated there.
  out << 1.0;
  for (Eigen::Index i = 0; i < d; ++i) out << ',' << traj.terminal(i);
  if (weighted) {
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << traj.terminal(i);
  }
  out << ",nan\n";
}

json summary_json(const RunConfig& cfg, const RunSummary& summary) {
  json j;
  j["config"] = cfg.config_echo;
  j["config_hash"] = cfg.config_hash;
  j["control"] = to_string(cfg.control);
  j["beta"] = cfg.beta.describe();
  j["samples"] = cfg.n_samples;
  j["dim"] = summary.terminals.cols();
  j["steps"] = cfg.sde.n_steps;
  j["seed"] = cfg.sde.seed;
  if (cfg.control == ControlMode::kUhis) j["n_is"] = cfg.uhis.n_is;
  if (summary.z) {
    const ZEstimate& z = *summary.z;
    j["z"] = {{"estimate", z.value},
              {"stderr", z.standard_error},
              {"log_estimate", z.log_value},
              {"log_weight_sd", z.log_weight_sd},
              {"terminal_mean_exp_neg_energy", z.terminal_mean}};
    if (const auto* mix = dynamic_cast<const GaussianMixtureEnergy*>(cfg.energy.get())) {
      j["z"]["oracle"] = mixture_partition_oracle(*mix);
    }
  }
  json metas = json::array();
  for (const auto& m : summary.meta) {
    json row = {{"index", m.index}, {"seed", m.seed}, {"steps", m.steps}, {"min_ess", m.min_ess},
                {"final_max_weight", m.final_max_weight}};
    if (summary.z) row["log_weight"] = m.log_weight;
    metas.push_back(std::move(row));
  }
  j["trajectories"] = std::move(metas);
  j["files"] = {"summary.json", "terminals.bin"};
  if (summary.early_exit) j["files"].push_back("early_exit.bin");
  if (cfg.write_trajectories) j["files"].push_back("trajectory_<i>.csv");
  return j;
}

}  // namespace

RunSummary run(RunConfig cfg) {
  resolve_targets(cfg);
  validate(cfg);
  const ControlPtr control = make_control(cfg);
  const Eigen::Index dim = control->dim();
  const long S = cfg.n_samples;
  const bool energy_mode = static_cast<bool>(cfg.energy);

  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  RunSummary summary;
  summary.config_hash = cfg.config_hash;
  summary.terminals.resize(S, dim);
  if (cfg.sde.early_exit) summary.early_exit = Eigen::MatrixXd(S, dim);
  summary.meta.resize(static_cast<std::size_t>(S));
  if (cfg.keep_trajectories) summary.trajectories.resize(static_cast<std::size_t>(S));
  Eigen::VectorXd log_weights(S), energies(S);

  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  long failed_index = -1;
  std::vector<char> done(static_cast<std::size_t>(S), 0);

  auto worker = [&] {
    while (!failed.load()) {
      const long i = next.fetch_add(1);
      if (i >= S) return;
      try {
        const auto idx = static_cast<std::uint64_t>(i);
        std::optional<PathWeight> weight;
        StepObserver observer;
        if (energy_mode) {
          weight.emplace(control->beta(), cfg.sde.step());
          observer = [&weight](const StepRecord& r) { weight->step(r.x, r.control.drift, r.next); };
        }
        Trajectory traj = integrate(cfg.sde, *control, dim, idx, observer);
        summary.terminals.row(i) = traj.terminal.transpose();
        if (summary.early_exit) summary.early_exit->row(i) = traj.early_exit->transpose();
        TrajectoryMeta& meta = summary.meta[static_cast<std::size_t>(i)];
        meta = {idx, cfg.sde.seed, cfg.sde.n_steps, traj.min_ess, traj.final_max_weight, 0.0};
        if (energy_mode) {
          energies(i) = cfg.energy->value(traj.terminal);
          log_weights(i) = weight->finish(traj.terminal, energies(i));
          meta.log_weight = log_weights(i);
        }
        if (cfg.write_trajectories && !cfg.output_dir.empty()) {
          write_trajectory_csv(cfg.output_dir / ("trajectory_" + std::to_string(i) + ".csv"), traj);
        }
        if (cfg.keep_trajectories) summary.trajectories[static_cast<std::size_t>(i)] = std::move(traj);
        done[static_cast<std::size_t>(i)] = 1;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
          failed_index = i;
        }
        failed = true;
      }
    }
  };

  const int threads = static_cast<int>(std::min<long>(cfg.threads, S));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  }

  if (error) {
    if (!cfg.output_dir.empty()) {
      json manifest;
      manifest["status"] = "aborted";
      manifest["failed_trajectory"] = failed_index;
      try {
        std::rethrow_exception(error);
      } catch (const std::exception& e) {
        manifest["error"] = e.what();
      }
      json completed = json::array();
      for (long i = 0; i < S; ++i) {
        if (done[static_cast<std::size_t>(i)]) completed.push_back(i);
      }
      manifest["completed_trajectories"] = std::move(completed);
      manifest["config"] = cfg.config_echo;
      manifest["config_hash"] = cfg.config_hash;
      write_text(cfg.output_dir / "partial.json", manifest.dump(2) + "\n");
    }
    std::rethrow_exception(error);
  }

  if (energy_mode) summary.z = estimate_z(log_weights, energies);

  if (!cfg.output_dir.empty()) {
    write_dataset(cfg.output_dir / "terminals.bin", summary.terminals);
    if (summary.early_exit) write_dataset(cfg.output_dir / "early_exit.bin", *summary.early_exit);
    write_text(cfg.output_dir / "summary.json", summary_json(cfg, summary).dump(2) + "\n");
  }
  return summary;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

SweepRow sweep_setting(const RunConfig& base, const std::string& sweep, int steps, long samples, int n_repeats,
                       std::uint64_t setting) {
  SweepRow row;
  row.sweep = sweep;
  row.steps = steps;
  row.samples = samples;
  for (int r = 0; r < n_repeats; ++r) {
    RunConfig cfg = base;
    cfg.sde.n_steps = steps;
    cfg.n_samples = samples;
    cfg.output_dir.clear();
    cfg.write_trajectories = false;
    cfg.keep_trajectories = false;
    cfg.sde.seed = CounterRng::mix(CounterRng::mix(base.sde.seed ^ (setting << 32)) + static_cast<std::uint64_t>(r));
    cfg.uhis.seed = cfg.sde.seed;
    const RunSummary s = run(std::move(cfg));
    if (!s.z) throw ConfigError("Z sweeps need an energy target");
    row.values.push_back(s.z->value);
  }
  row.mean = 0.0;
  for (double v : row.values) row.mean += v / static_cast<double>(row.values.size());
  row.median = quantile(row.values, 0.5);
  row.q1 = quantile(row.values, 0.25);
  row.q3 = quantile(row.values, 0.75);
  row.min = *std::min_element(row.values.begin(), row.values.end());
  row.max = *std::max_element(row.values.begin(), row.values.end());
  return row;
}

}  // namespace

std::vector<SweepRow> estimate_z_convergence(const RunConfig& cfg, const std::vector<int>& steps_list,
                                             const std::vector<long>& samples_list, int n_repeats) {
  if (n_repeats < 1) throw ConfigError("repeats must be at least 1");
  if (steps_list.empty() && samples_list.empty()) throw ConfigError("sweep lists are empty");
  std::vector<SweepRow> rows;
  std::uint64_t setting = 1;
  for (int steps : steps_list) {
    rows.push_back(sweep_setting(cfg, "steps", steps, cfg.n_samples, n_repeats, setting++));
  }
  for (long samples : samples_list) {
    rows.push_back(sweep_setting(cfg, "samples", cfg.sde.n_steps, samples, n_repeats, setting++));
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "sweep,steps,samples,repeats,mean,median,q1,q3,iqr,min,max\n";
  for (const auto& r : rows) {
    out << r.sweep << ',' << r.steps << ',' << r.samples << ',' << r.values.size() << ',' << r.mean << ','
        << r.median << ',' << r.q1 << ',' << r.q3 << ',' << r.iqr() << ',' << r.min << ',' << r.max << '\n';
  }
}

}  // namespace hpid
