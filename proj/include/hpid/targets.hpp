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
#include "hpid/energy.hpp"
#include "hpid/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace hpid {

/// E(y) = -log sum_k w_k exp(-|y - mu_k|^2 / (2 sigma2)). The Gaussian
/// normalizer is left out, so Z = sum_k w_k (2 pi sigma2)^(d/2).
class GaussianMixtureEnergy final : public Energy {
 public:
  /// `centers` is M x d; weights default to uniform.
  GaussianMixtureEnergy(Eigen::MatrixXd centers, double sigma2, Eigen::VectorXd weights = {});

  Eigen::Index dim() const override { return centers_.cols(); }
  double value(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_gradient() const override { return true; }
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const override;
  bool has_hessian_vector() const override { return true; }
  Eigen::VectorXd hessian_vector(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& v) const override;
  void values(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Ref<Eigen::VectorXd> out) const override;
  std::string name() const override { return "mixture"; }

  const Eigen::MatrixXd& centers() const { return centers_; }
  double sigma2() const { return sigma2_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index modes() const { return centers_.rows(); }

  /// Posterior responsibilities of the components at y.
  Eigen::VectorXd responsibilities(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  /// Exact draws from the normalized density, one per row.
  Eigen::MatrixXd sample(Eigen::Index count, CounterRng& rng) const;

 private:
  Eigen::MatrixXd centers_;
  double sigma2_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd log_weights_;
};

/// side x side centers in the plane with the given spacing, centered at the
/// origin, uniform weights.
GaussianMixtureEnergy grid_mixture(int side = 3, double spacing = 5.0, double sigma2 = 0.5);

double mixture_partition_oracle(const GaussianMixtureEnergy& m);

/// Writes the binary dataset format: "HPID", u32 version, u64 S, u64 d, then
/// S*d little-endian float64 values in row-major order.
void write_dataset(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& rows);

/// One vector per line, comma separated, full round-trip precision.
void write_csv_dataset(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& rows);

/// Reads either format; ".csv" selects CSV, anything else the binary format.
EmpiricalTarget load_dataset(const std::filesystem::path& path);

inline constexpr std::uint32_t kDatasetVersion = 1;

/// String parameters for named energies, as they appear in a config file.
class EnergyParams {
 public:
  EnergyParams() = default;
  explicit EnergyParams(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  /// Whitespace- or comma-separated list of reals.
  std::vector<double> get_list(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

using EnergyFactory = std::function<EnergyPtr(const EnergyParams&)>;

/// Built-ins: mixture, double_well, gaussian, constant.
void register_energy(const std::string& name, EnergyFactory factory);
EnergyPtr make_energy(const std::string& name, const EnergyParams& params);
std::vector<std::string> energy_names();

}  // namespace hpid
