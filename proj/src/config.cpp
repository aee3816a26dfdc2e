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

#include "hpid/config.hpp"

#include "hpid/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hpid {

ConfigTree parse_config(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  ConfigTree tree;
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw ConfigError("key '" + section + "' must appear inside a [section]");
    auto& keys = tree[section];
    for (const auto& [key, value] : body) keys[key] = value.data();
  }
  return tree;
}

ConfigTree read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_override(ConfigTree& tree, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw ConfigError("override '" + dotted_key + "' must look like section.key");
  }
  tree[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = value;
}

std::string canonical_text(const ConfigTree& tree) {
  std::string out;
  for (const auto& [section, keys] : tree) {
    out += "[" + section + "]\n";
    for (const auto& [key, value] : keys) out += key + " = " + value + "\n";
  }
  return out;
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

class Reader {
 public:
  Reader(const ConfigTree& tree, std::string section) : section_(std::move(section)) {
    const auto it = tree.find(section_);
    if (it != tree.end()) keys_ = &it->second;
  }

  bool has(const std::string& key) const { return keys_ && keys_->count(key); }

  std::string text(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    return has(key) ? keys_->at(key) : fallback;
  }

  template <typename T>
  T number(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const std::string& s = keys_->at(key);
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError(section_ + "." + key + ": expected " + (std::is_integral_v<T> ? "an integer" : "a number") +
                        ", got '" + s + "'");
    }
    return v;
  }

  bool flag(const std::string& key, bool fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const std::string& s = keys_->at(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(section_ + "." + key + ": expected a boolean, got '" + s + "'");
  }

  template <typename T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    std::string s = keys_->at(key);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<T> out;
    std::string token;
    while (in >> token) {
      T v{};
      const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw ConfigError(section_ + "." + key + ": bad list entry '" + token + "'");
      }
      out.push_back(v);
    }
    if (out.empty()) throw ConfigError(section_ + "." + key + ": empty list");
    return out;
  }

  /// Rejects keys the schema does not know.
  void finish() const {
    if (!keys_) return;
    for (const auto& [key, value] : *keys_) {
      if (!used_.count(key)) throw ConfigError("unknown key " + section_ + "." + key);
    }
  }

  const std::map<std::string, std::string>* keys() const { return keys_; }

 private:
  std::string section_;
  const std::map<std::string, std::string>* keys_ = nullptr;
  std::set<std::string> used_;
};

const std::set<std::string> kSections{"run", "target", "beta", "sde", "uhis", "legendre", "quadrature", "sweep",
                                      "diagnose"};

}  // namespace

RunConfig build_run_config(const ConfigTree& tree) {
  for (const auto& [section, keys] : tree) {
    if (!kSections.count(section)) throw ConfigError("unknown section [" + section + "]");
  }
  RunConfig cfg;

  Reader run(tree, "run");
  cfg.control = parse_control_mode(run.text("control", "uhis"));
  cfg.n_samples = run.number<long>("samples", 1000);
  cfg.sde.seed = run.number<std::uint64_t>("seed", 0);
  cfg.threads = run.number<int>("threads", 1);
  cfg.output_dir = run.text("output", "");
  cfg.write_trajectories = run.flag("write_trajectories", false);
  run.finish();

  Reader target(tree, "target");
  if (target.has("energy") && target.has("dataset")) throw ConfigError("target: give either energy or dataset");
  cfg.energy_name = target.text("energy", "");
  cfg.dataset = target.text("dataset", "");
  if (target.keys()) {
    for (const auto& [key, value] : *target.keys()) {
      if (key != "energy" && key != "dataset") cfg.energy_params.set(key, value);
    }
  }
  if (!cfg.dataset.empty() && !cfg.energy_params.values().empty()) {
    throw ConfigError("target: energy parameters given together with a dataset");
  }

  Reader beta(tree, "beta");
  const int given = beta.has("value") + beta.has("diagonal") + beta.has("matrix");
  if (given > 1) throw ConfigError("beta: give one of value, diagonal, matrix");
  if (beta.has("diagonal")) {
    cfg.beta = {BetaSpec::Kind::kDiagonal, beta.list<double>("diagonal", {})};
  } else if (beta.has("matrix")) {
    cfg.beta = {BetaSpec::Kind::kMatrix, beta.list<double>("matrix", {})};
  } else {
    cfg.beta = BetaSpec::scalar(beta.number<double>("value", 0.0));
  }
  for (double v : cfg.beta.values) {
    if (!std::isfinite(v)) throw ConfigError("beta: entries must be finite");
  }
  if (cfg.beta.kind != BetaSpec::Kind::kMatrix) {
    for (double v : cfg.beta.values) {
      if (v < 0.0) throw ConfigError("beta: entries must be non-negative");
    }
  }
  beta.finish();

  Reader sde(tree, "sde");
  cfg.sde.n_steps = sde.number<int>("steps", 200);
  cfg.sde.record_every = sde.number<int>("record_every", 1);
  cfg.sde.record_weighted_state = sde.flag("record_weighted", false);
  cfg.sde.early_exit = sde.flag("early_exit", false);
  sde.finish();

  Reader uhis(tree, "uhis");
  cfg.uhis.n_is = uhis.number<int>("n_is", 10000);
  cfg.uhis.reuse_probe_noise = uhis.flag("reuse_probe_noise", false);
  cfg.uhis.min_probe_time = uhis.number<double>("min_probe_time", 0.0);
  cfg.uhis.fallback_probe_scale = uhis.number<double>("fallback_probe_scale", 1.0);
  cfg.uhis.fallback_when_wider = uhis.flag("fallback_when_wider", false);
  cfg.uhis.probe_precision_scale = uhis.number<double>("probe_precision_scale", 1.0);
  uhis.finish();

  Reader leg(tree, "legendre");
  cfg.legendre.max_newton_iterations = leg.number<int>("max_newton_iterations", 50);
  cfg.legendre.max_gradient_iterations = leg.number<int>("max_gradient_iterations", 5000);
  cfg.legendre.max_halvings = leg.number<int>("max_halvings", 30);
  cfg.legendre.tolerance = leg.number<double>("tolerance", 1e-8);
  leg.finish();

  Reader quad(tree, "quadrature");
  cfg.quadrature.lower = quad.number<double>("lower", -8.0);
  cfg.quadrature.upper = quad.number<double>("upper", 8.0);
  cfg.quadrature.points = quad.number<int>("points", 4001);
  cfg.quadrature.boundary_tolerance = quad.number<double>("boundary_tolerance", 1e-8);
  quad.finish();

  // Validated by their own builders.
  build_sweep_spec(tree);
  build_diagnose_spec(tree);

  cfg.config_echo = canonical_text(tree);
  cfg.config_hash = content_hash(cfg.config_echo);
  if (cfg.n_samples < 1) throw ConfigError("run.samples must be at least 1");
  if (cfg.threads < 1) throw ConfigError("run.threads must be at least 1");
  cfg.sde.validate();
  if (cfg.control == ControlMode::kUhis) cfg.uhis.validate();
  if (cfg.energy_name.empty() && cfg.dataset.empty()) throw ConfigError("target: energy or dataset is required");
  if (cfg.control == ControlMode::kEmpirical && cfg.dataset.empty()) {
    throw ConfigError("empirical control needs target.dataset");
  }
  if (cfg.control != ControlMode::kEmpirical && cfg.control != ControlMode::kZero && cfg.energy_name.empty()) {
    throw ConfigError(to_string(cfg.control) + " control needs target.energy");
  }
  return cfg;
}

SweepSpec build_sweep_spec(const ConfigTree& tree) {
  Reader r(tree, "sweep");
  SweepSpec spec;
  spec.steps = r.list<int>("steps", spec.steps);
  spec.samples = r.list<long>("samples", spec.samples);
  spec.repeats = r.number<int>("repeats", spec.repeats);
  r.finish();
  if (spec.repeats < 1) throw ConfigError("sweep.repeats must be at least 1");
  for (int s : spec.steps) {
    if (s < 2) throw ConfigError("sweep.steps entries must be at least 2");
  }
  for (long s : spec.samples) {
    if (s < 1) throw ConfigError("sweep.samples entries must be at least 1");
  }
  return spec;
}

DiagnoseSpec build_diagnose_spec(const ConfigTree& tree) {
  Reader r(tree, "diagnose");
  DiagnoseSpec spec;
  spec.threshold = r.number<double>("threshold", spec.threshold);
  spec.bootstrap = r.number<int>("bootstrap", spec.bootstrap);
  r.finish();
  if (spec.bootstrap < 0) throw ConfigError("diagnose.bootstrap must be non-negative");
  return spec;
}

}  // namespace hpid
