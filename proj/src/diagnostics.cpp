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

#include "hpid/diagnostics.hpp"

#include "hpid/errors.hpp"
#include "hpid/sampler.hpp"

#include <json.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hpid {
namespace {

// n_traj x T matrices of the per-trajectory normalized correlations, plus the
// raw inner products and squared terminal norms for the pooled form.
struct CorrTable {
  std::vector<double> times;
  Eigen::MatrixXd state, weighted;          // ratios
  Eigen::MatrixXd state_raw, weighted_raw;  // inner products
  Eigen::VectorXd terminal_sq;
};

CorrTable build_table(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw InputError("autocorrelation needs at least one trajectory");
  CorrTable tab;
  tab.times = trajs.front().times;
  const auto n = static_cast<Eigen::Index>(trajs.size());
  const auto T = static_cast<Eigen::Index>(tab.times.size());
  if (T == 0) throw InputError("trajectories have no recorded steps");
  tab.state.resize(n, T);
  tab.weighted.resize(n, T);
  tab.state_raw.resize(n, T);
  tab.weighted_raw.resize(n, T);
  tab.terminal_sq.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Trajectory& tr = trajs[static_cast<std::size_t>(r)];
    if (tr.weighted_states.size() != tr.times.size()) {
      throw ConfigError("autocorrelation needs trajectories recorded with weighted states");
    }
    if (tr.times != tab.times) throw InputError("trajectories use different recording grids");
    const double sq = tr.terminal.squaredNorm();
    if (!(sq > 0.0)) throw InputError("terminal state has zero norm");
    tab.terminal_sq(r) = sq;
    for (Eigen::Index k = 0; k < T; ++k) {
      tab.state_raw(r, k) = tr.states[static_cast<std::size_t>(k)].dot(tr.terminal);
      tab.weighted_raw(r, k) = tr.weighted_states[static_cast<std::size_t>(k)].dot(tr.terminal);
    }
    tab.state.row(r) = tab.state_raw.row(r) / sq;
    tab.weighted.row(r) = tab.weighted_raw.row(r) / sq;
  }
  return tab;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

AutocorrResult autocorrelation(const std::vector<Trajectory>& trajs) {
  const CorrTable tab = build_table(trajs);
  AutocorrResult out;
  AutocorrSeries& e = out.ensemble;
  e.times = tab.times;
  e.n_trajectories = static_cast<long>(trajs.size());
  e.corr_state = to_vector(tab.state.colwise().mean().transpose());
  e.corr_weighted = to_vector(tab.weighted.colwise().mean().transpose());
  const double mean_sq = tab.terminal_sq.mean();
  e.pooled_state = to_vector(tab.state_raw.colwise().mean().transpose() / mean_sq);
  e.pooled_weighted = to_vector(tab.weighted_raw.colwise().mean().transpose() / mean_sq);
  for (Eigen::Index r = 0; r < tab.state.rows(); ++r) {
    AutocorrSeries s;
    s.times = tab.times;
    s.n_trajectories = 1;
    s.corr_state = to_vector(tab.state.row(r).transpose());
    s.corr_weighted = to_vector(tab.weighted.row(r).transpose());
    s.pooled_state = s.corr_state;
    s.pooled_weighted = s.corr_weighted;
    out.per_trajectory.push_back(std::move(s));
  }
  return out;
}

void write_autocorr_csv(const std::filesystem::path& path, const AutocorrResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "series,t,corr_state,corr_weighted,pooled_state,pooled_weighted\n";
  auto emit = [&out](const std::string& label, const AutocorrSeries& s) {
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      out << label << ',' << s.times[k] << ',' << s.corr_state[k] << ',' << s.corr_weighted[k] << ','
          << s.pooled_state[k] << ',' << s.pooled_weighted[k] << '\n';
    }
  };
  emit("ensemble", result.ensemble);
  for (std::size_t i = 0; i < result.per_trajectory.size(); ++i) {
    emit("trajectory_" + std::to_string(i), result.per_trajectory[i]);
  }
}

double ModeHistogram::critical_value(double alpha) const {
  if (dof < 1) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::chi_squared(dof), 1.0 - alpha);
}

double ModeHistogram::min_fraction() const {
  if (total == 0) return 0.0;
  return static_cast<double>(*std::min_element(counts.begin(), counts.end())) / static_cast<double>(total);
}

ModeHistogram mode_assignment(const Eigen::Ref<const Eigen::MatrixXd>& terminals, const GaussianMixtureEnergy& m) {
  if (terminals.rows() == 0) throw InputError("mode assignment needs at least one terminal");
  if (terminals.cols() != m.dim()) throw InputError("terminal dimension mismatch");
  ModeHistogram h;
  const Eigen::Index M = m.modes();
  h.counts.assign(static_cast<std::size_t>(M), 0);
  for (Eigen::Index s = 0; s < terminals.rows(); ++s) {
    Eigen::Index best = 0;
    (m.centers().rowwise() - terminals.row(s)).rowwise().squaredNorm().minCoeff(&best);
    ++h.counts[static_cast<std::size_t>(best)];
  }
  h.total = terminals.rows();
  int positive = 0;
  for (Eigen::Index k = 0; k < M; ++k) {
    const double e = m.weights()(k) * static_cast<double>(h.total);
    h.expected.push_back(e);
    if (e > 0.0) {
      const double diff = static_cast<double>(h.counts[static_cast<std::size_t>(k)]) - e;
      h.chi2 += diff * diff / e;
      ++positive;
    }
  }
  h.dof = positive - 1;
  h.p_value = h.dof >= 1 ? boost::math::cdf(boost::math::complement(boost::math::chi_squared(h.dof), h.chi2)) : 1.0;
  return h;
}

void write_modes_csv(const std::filesystem::path& path, const ModeHistogram& hist, const GaussianMixtureEnergy& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "mode";
  for (Eigen::Index i = 0; i < m.dim(); ++i) out << ",center" << i;
  out << ",count,expected,fraction\n";
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < m.dim(); ++i) out << ',' << m.centers()(static_cast<Eigen::Index>(k), i);
    out << ',' << hist.counts[k] << ',' << hist.expected[k] << ','
        << static_cast<double>(hist.counts[k]) / static_cast<double>(hist.total) << '\n';
  }
  out << "# chi2=" << hist.chi2 << " dof=" << hist.dof << " p=" << hist.p_value << '\n';
}

std::optional<double> crossing_time(const std::vector<double>& times, const std::vector<double>& values,
                                    double threshold) {
  if (times.empty() || times.size() != values.size()) throw InputError("crossing time needs a nonempty series");
  if (values[0] >= threshold) return times[0];
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] >= threshold) {
      const double frac = (threshold - values[k - 1]) / (values[k] - values[k - 1]);
      return times[k - 1] + frac * (times[k] - times[k - 1]);
    }
  }
  return std::nullopt;
}

std::optional<double> transition_time(const AutocorrSeries& series, double threshold, bool weighted) {
  return crossing_time(series.times, weighted ? series.corr_weighted : series.corr_state, threshold);
}

TransitionReport transition_report(const AutocorrResult& result, double threshold, int n_boot, CounterRng rng) {
  TransitionReport rep;
  rep.threshold = threshold;
  rep.weighted = transition_time(result.ensemble, threshold, true);
  rep.state = transition_time(result.ensemble, threshold, false);
  const auto n = static_cast<Eigen::Index>(result.per_trajectory.size());
  if (n_boot < 1 || n == 0) return rep;

  const auto T = static_cast<Eigen::Index>(result.ensemble.times.size());
  Eigen::MatrixXd state(n, T), weighted(n, T);
  for (Eigen::Index r = 0; r < n; ++r) {
    const AutocorrSeries& s = result.per_trajectory[static_cast<std::size_t>(r)];
    state.row(r) = Eigen::Map<const Eigen::RowVectorXd>(s.corr_state.data(), T);
    weighted.row(r) = Eigen::Map<const Eigen::RowVectorXd>(s.corr_weighted.data(), T);
  }
  boost::random::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::RowVectorXd mean_state(T), mean_weighted(T);
  std::vector<double> ms(static_cast<std::size_t>(T)), mw(static_cast<std::size_t>(T));
  for (int b = 0; b < n_boot; ++b) {
    mean_state.setZero();
    mean_weighted.setZero();
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index j = pick(rng);
      mean_state += state.row(j);
      mean_weighted += weighted.row(j);
    }
    for (Eigen::Index k = 0; k < T; ++k) {
      ms[static_cast<std::size_t>(k)] = mean_state(k) / static_cast<double>(n);
      mw[static_cast<std::size_t>(k)] = mean_weighted(k) / static_cast<double>(n);
    }
    const double tw = crossing_time(result.ensemble.times, mw, threshold).value_or(1.0);
    const double ts = crossing_time(result.ensemble.times, ms, threshold).value_or(1.0);
    rep.gap_draws.push_back(tw - ts);
  }
  rep.gap_lower = quantile(rep.gap_draws, 0.025);
  rep.gap_upper = quantile(rep.gap_draws, 0.975);
  rep.gap_upper_one_sided = quantile(rep.gap_draws, 0.95);
  return rep;
}

void write_transition_json(const std::filesystem::path& path, const TransitionReport& report) {
  nlohmann::json j;
  j["threshold"] = report.threshold;
  j["t_weighted"] = report.weighted ? nlohmann::json(*report.weighted) : nlohmann::json("not reached");
  j["t_state"] = report.state ? nlohmann::json(*report.state) : nlohmann::json("not reached");
  if (!report.gap_draws.empty()) {
    j["bootstrap"] = {{"draws", report.gap_draws.size()},
                      {"gap_q025", report.gap_lower},
                      {"gap_q95", report.gap_upper_one_sided},
                      {"gap_q975", report.gap_upper}};
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Trajectory load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty trajectory file", 1);
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string field;
    while (std::getline(hs, field, ',')) header.push_back(field);
  }
  const auto xs = std::count_if(header.begin(), header.end(), [](const std::string& h) { return h.rfind("x", 0) == 0 && h.rfind("xhat", 0) != 0; });
  const auto hats = std::count_if(header.begin(), header.end(), [](const std::string& h) { return h.rfind("xhat", 0) == 0; });
  if (header.empty() || header.front() != "t" || header.back() != "ess" || xs < 1 || (hats != 0 && hats != xs)) {
    throw FormatError("unexpected trajectory header", 1);
  }
  const Eigen::Index d = xs;
  Trajectory traj;
  std::size_t row = 1;
  bool have_terminal = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) {
      if (field == "nan") {
        v.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double x = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw FormatError("row " + std::to_string(row) + ": invalid number", row);
      }
      v.push_back(x);
    }
    if (v.size() != header.size()) throw FormatError("row " + std::to_string(row) + " has the wrong field count", row);
    const Eigen::VectorXd state = Eigen::Map<const Eigen::VectorXd>(v.data() + 1, d);
    if (v[0] == 1.0) {
      traj.terminal = state;
      have_terminal = true;
      continue;
    }
    traj.times.push_back(v[0]);
    traj.states.push_back(state);
    if (hats) traj.weighted_states.push_back(Eigen::Map<const Eigen::VectorXd>(v.data() + 1 + d, d));
    traj.ess_series.push_back(v.back());
  }
  if (!have_terminal) throw FormatError("trajectory file has no terminal row", row);
  return traj;
}

}  // namespace hpid
