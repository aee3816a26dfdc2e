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

// Command-line front end.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or input
// error, 3 integration failure.

#include "hpid/config.hpp"
#include "hpid/diagnostics.hpp"
#include "hpid/errors.hpp"
#include "hpid/sampler.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <thread>

namespace {

using namespace hpid;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIntegration = 3;

/// Flags shared by the sampling subcommands; each one maps onto a config key.
struct Overrides {
  std::string config;
  std::optional<std::string> beta, steps, n_is, samples, seed, out, control, data;
  bool record_weighted = false;
  bool write_trajectories = false;
  std::vector<std::string> set;
  int threads = 0;

  ConfigTree tree() const {
    ConfigTree t = config.empty() ? ConfigTree{} : read_config(config);
    auto put = [&t](const char* key, const std::optional<std::string>& v) {
      if (v) apply_override(t, key, *v);
    };
    put("beta.value", beta);
    if (beta) {
      t["beta"].erase("diagonal");
      t["beta"].erase("matrix");
    }
    put("sde.steps", steps);
    put("uhis.n_is", n_is);
    put("run.samples", samples);
    put("run.seed", seed);
    put("run.output", out);
    put("run.control", control);
    if (data) {
      t["target"].clear();
      apply_override(t, "target.dataset", *data);
    }
    if (record_weighted) {
      apply_override(t, "sde.record_weighted", "true");
      apply_override(t, "run.write_trajectories", "true");
    }
    if (write_trajectories) apply_override(t, "run.write_trajectories", "true");
    for (const auto& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + kv + "'");
      apply_override(t, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return t;
  }
};

void add_sampling_flags(CLI::App* app, Overrides& o, bool energy) {
  app->add_option("--beta", o.beta, "Scalar potential strength");
  app->add_option("--steps", o.steps, "Time discretization K");
  app->add_option("--samples", o.samples, "Number of trajectories S");
  app->add_option("--seed", o.seed, "Seed for all randomness");
  app->add_option("--out", o.out, "Output directory");
  if (energy) {
    app->add_option("--n-is", o.n_is, "Importance samples per control evaluation");
    app->add_option("--control", o.control, "uhis, legendre or oracle")
        ->check(CLI::IsMember({"uhis", "legendre", "oracle"}));
    app->add_flag("--write-trajectories", o.write_trajectories, "Write trajectory_<i>.csv files");
  }
  app->add_option("--set", o.set, "Override any config key: section.key=value");
}

int threads_or_default(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

RunConfig prepare(const Overrides& o) {
  ConfigTree tree = o.tree();
  if (o.threads > 0 || !tree["run"].count("threads")) {
    apply_override(tree, "run.threads", std::to_string(threads_or_default(o.threads)));
  }
  // Threads change neither results nor identity, so keep them out of the echo.
  RunConfig cfg = build_run_config(tree);
  const int threads = cfg.threads;
  tree["run"].erase("threads");
  cfg.config_echo = canonical_text(tree);
  cfg.config_hash = content_hash(cfg.config_echo);
  cfg.threads = threads;
  return cfg;
}

void print_summary(const RunConfig& cfg, const RunSummary& s) {
  std::cout << "samples " << s.terminals.rows() << " dim " << s.terminals.cols() << " control "
            << to_string(cfg.control) << " config " << s.config_hash << "\n";
  if (s.z) {
    std::printf("Z %.6g +- %.3g (log-weight sd %.3g)\n", s.z->value, s.z->standard_error, s.z->log_weight_sd);
    if (const auto* mix = dynamic_cast<const GaussianMixtureEnergy*>(cfg.energy.get())) {
      const ModeHistogram h = mode_assignment(s.terminals, *mix);
      std::printf("Z oracle %.6g; mode chi2 %.3f (dof %d, p %.3g), smallest mode share %.3f\n",
                  mixture_partition_oracle(*mix), h.chi2, h.dof, h.p_value, h.min_fraction());
    }
  }
  if (!cfg.output_dir.empty()) std::cout << "wrote " << cfg.output_dir.string() << "\n";
}

int cmd_sample(const Overrides& o, bool empirical) {
  RunConfig cfg = prepare(o);
  if (empirical && cfg.control != ControlMode::kEmpirical) throw ConfigError("sample-empirical needs a dataset");
  if (!empirical && cfg.control == ControlMode::kEmpirical) {
    throw ConfigError("sample-energy cannot run empirical control; use sample-empirical");
  }
  resolve_targets(cfg);
  const RunSummary s = run(cfg);
  print_summary(cfg, s);
  return kExitOk;
}

int cmd_estimate_z(const Overrides& o, const std::optional<std::string>& steps_list,
                   const std::optional<std::string>& samples_list, const std::optional<std::string>& repeats) {
  Overrides local = o;
  if (steps_list) local.set.push_back("sweep.steps=" + *steps_list);
  if (samples_list) local.set.push_back("sweep.samples=" + *samples_list);
  if (repeats) local.set.push_back("sweep.repeats=" + *repeats);
  RunConfig cfg = prepare(local);
  const SweepSpec spec = build_sweep_spec(local.tree());
  resolve_targets(cfg);
  validate(cfg);
  if (!cfg.energy) throw ConfigError("estimate-z needs an energy target");
  const std::vector<SweepRow> rows = estimate_z_convergence(cfg, spec.steps, spec.samples, spec.repeats);
  std::cout << "sweep steps samples median q1 q3 iqr\n";
  for (const auto& r : rows) {
    std::printf("%s %d %ld %.6g %.6g %.6g %.4g\n", r.sweep.c_str(), r.steps, r.samples, r.median, r.q1, r.q3,
                r.iqr());
  }
  if (const auto* mix = dynamic_cast<const GaussianMixtureEnergy*>(cfg.energy.get())) {
    std::printf("Z oracle %.6g\n", mixture_partition_oracle(*mix));
  }
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_sweep_csv(cfg.output_dir / "z_sweep.csv", rows);
    std::ofstream(cfg.output_dir / "z_sweep_config.ini") << cfg.config_echo;
    std::cout << "wrote " << (cfg.output_dir / "z_sweep.csv").string() << "\n";
  }
  return kExitOk;
}

int cmd_diagnose(const std::string& run_dir, const std::optional<std::string>& out_dir, double threshold,
                 int bootstrap, std::uint64_t seed) {
  const std::filesystem::path dir(run_dir);
  if (!std::filesystem::is_directory(dir)) throw ConfigError("run directory not found: " + run_dir);
  const std::filesystem::path out = out_dir ? std::filesystem::path(*out_dir) : dir;
  std::filesystem::create_directories(out);

  std::vector<std::pair<long, std::filesystem::path>> files;
  const std::regex pattern("trajectory_([0-9]+)\\.csv");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) files.emplace_back(std::stol(m[1]), entry.path());
  }
  std::sort(files.begin(), files.end());

  if (!files.empty()) {
    std::vector<Trajectory> trajs;
    for (const auto& [index, path] : files) trajs.push_back(load_trajectory_csv(path));
    const AutocorrResult ac = autocorrelation(trajs);
    write_autocorr_csv(out / "autocorr.csv", ac);
    const TransitionReport rep = transition_report(ac, threshold, bootstrap, make_rng(seed, 0, 0, Stream::kBootstrap));
    write_transition_json(out / "transition.json", rep);
    std::printf("trajectories %zu; transition t_weighted %s t_state %s\n", trajs.size(),
                rep.weighted ? std::to_string(*rep.weighted).c_str() : "not reached",
                rep.state ? std::to_string(*rep.state).c_str() : "not reached");
    if (!rep.gap_draws.empty()) std::printf("bootstrap gap 95%% upper %.4f\n", rep.gap_upper_one_sided);
  } else {
    std::cout << "no trajectory files; skipping autocorrelation\n";
  }

  // Mode histogram when the run used a mixture energy.
  const std::filesystem::path summary_path = dir / "summary.json";
  const std::filesystem::path terminals_path = dir / "terminals.bin";
  if (std::filesystem::exists(summary_path) && std::filesystem::exists(terminals_path)) {
    std::ifstream in(summary_path);
    const auto j = nlohmann::json::parse(in);
    RunConfig cfg = build_run_config(parse_config(j.at("config").get<std::string>()));
    if (!cfg.energy_name.empty()) {
      resolve_targets(cfg);
      if (const auto* mix = dynamic_cast<const GaussianMixtureEnergy*>(cfg.energy.get())) {
        const EmpiricalTarget terminals = load_dataset(terminals_path);
        const ModeHistogram h = mode_assignment(terminals.samples, *mix);
        write_modes_csv(out / "modes.csv", h, *mix);
        std::printf("modes chi2 %.3f dof %d p %.3g smallest share %.3f\n", h.chi2, h.dof, h.p_value,
                    h.min_fraction());
      }
    }
  }
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

int cmd_oracle_check(const Overrides& o, int points) {
  RunConfig cfg = prepare(o);
  resolve_targets(cfg);
  if (!cfg.energy) throw ConfigError("oracle-check needs an energy target");
  if (cfg.energy->dim() > 2) throw ConfigError("oracle-check supports d = 1 or 2 only");
  if (points < 1) throw ConfigError("--points must be positive");
  const MatrixBeta<double> params = cfg.beta.resolve(cfg.energy->dim());
  const Eigen::Index d = cfg.energy->dim();

  std::ofstream csv;
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    csv.open(cfg.output_dir / "oracle_check.csv");
    csv.precision(17);
    csv << "t,x0,u_oracle0,u_uhis0,rel_error\n";
  }
  double worst = 0.0;
  std::cout << "t x0 u_oracle0 u_uhis0 rel_error\n";
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.5 : 0.05 + 0.9 * i / (points - 1);
    const double x0 = (i % 2 ? -1.0 : 1.0) * (t + 0.75 * std::sqrt(t * (1.0 - t)));
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(d, x0);
    const Eigen::VectorXd ref = quadrature_control(params, t, x, *cfg.energy, cfg.quadrature);
    CounterRng rng = make_rng(cfg.sde.seed, static_cast<std::uint64_t>(i), 0, Stream::kProbe);
    const Eigen::VectorXd est = uhis_control(params, cfg.uhis, t, x, *cfg.energy, rng).drift;
    const double err = (est - ref).norm() / std::max(ref.norm(), 0.05);
    worst = std::max(worst, err);
    std::printf("%.4f %.6f %.6f %.6f %.3e\n", t, x0, ref(0), est(0), err);
    if (csv) csv << t << ',' << x0 << ',' << ref(0) << ',' << est(0) << ',' << err << '\n';
  }
  std::printf("max relative control error %.3e\n", worst);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling by harmonic path integral control"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "hpid 0.1.0");

  Overrides energy_o, empirical_o, sweep_o, oracle_o;
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: all cores)")->envname("HPID_THREADS");

  CLI::App* sample_energy = app.add_subcommand("sample-energy", "Sample an energy target");
  sample_energy->add_option("--config", energy_o.config, "Config file")->required()->check(CLI::ExistingFile);
  add_sampling_flags(sample_energy, energy_o, true);

  CLI::App* sample_empirical = app.add_subcommand("sample-empirical", "Sample from a dataset of target vectors");
  sample_empirical->add_option("--config", empirical_o.config, "Config file")->check(CLI::ExistingFile);
  sample_empirical->add_option("--data", empirical_o.data, "Dataset (.bin or .csv)")->required();
  sample_empirical->add_flag("--record-weighted", empirical_o.record_weighted,
                             "Record weighted states and write trajectory_<i>.csv");
  add_sampling_flags(sample_empirical, empirical_o, false);

  CLI::App* estimate_z = app.add_subcommand("estimate-z", "Z estimates over steps and samples sweeps");
  estimate_z->add_option("--config", sweep_o.config, "Config file")->required()->check(CLI::ExistingFile);
  add_sampling_flags(estimate_z, sweep_o, true);
  std::optional<std::string> steps_list, samples_list, repeats;
  estimate_z->add_option("--steps-list", steps_list, "Comma-separated K values");
  estimate_z->add_option("--samples-list", samples_list, "Comma-separated S values");
  estimate_z->add_option("--repeats", repeats, "Independent runs per setting");

  CLI::App* diagnose = app.add_subcommand("diagnose", "Autocorrelation, transition time and mode histogram");
  std::string run_dir;
  std::optional<std::string> diag_out;
  double threshold = 0.5;
  int bootstrap = 1000;
  std::uint64_t diag_seed = 0;
  diagnose->add_option("--run", run_dir, "Output directory of a sampling run")->required();
  diagnose->add_option("--out", diag_out, "Where to write diagnostics (default: the run directory)");
  diagnose->add_option("--threshold", threshold, "Transition threshold");
  diagnose->add_option("--bootstrap", bootstrap, "Bootstrap resamples")->check(CLI::NonNegativeNumber);
  diagnose->add_option("--seed", diag_seed, "Bootstrap seed");

  CLI::App* oracle = app.add_subcommand("oracle-check", "Compare UHIS control with quadrature in 1D/2D");
  oracle->add_option("--config", oracle_o.config, "Config file")->required()->check(CLI::ExistingFile);
  add_sampling_flags(oracle, oracle_o, true);
  int points = 20;
  oracle->add_option("--points", points, "Number of (t, x) points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (Overrides* o : {&energy_o, &empirical_o, &sweep_o, &oracle_o}) o->threads = threads;
    if (*sample_energy) return cmd_sample(energy_o, false);
    if (*sample_empirical) {
      empirical_o.control = "empirical";
      return cmd_sample(empirical_o, true);
    }
    if (*estimate_z) return cmd_estimate_z(sweep_o, steps_list, samples_list, repeats);
    if (*diagnose) return cmd_diagnose(run_dir, diag_out, threshold, bootstrap, diag_seed);
    if (*oracle) return cmd_oracle_check(oracle_o, points);
  } catch (const IntegrationError& e) {
    std::cerr << "integration failure: " << e.what() << "\n";
    return kExitIntegration;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
