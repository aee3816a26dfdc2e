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

#include "hpid/targets.hpp"

#include "hpid/errors.hpp"
#include "hpid/numerics.hpp"

#include <boost/random/discrete_distribution.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>

namespace hpid {

GaussianMixtureEnergy::GaussianMixtureEnergy(Eigen::MatrixXd centers, double sigma2, Eigen::VectorXd weights)
    : centers_(std::move(centers)), sigma2_(sigma2), weights_(std::move(weights)) {
  if (centers_.rows() < 1 || centers_.cols() < 1) throw InputError("mixture needs at least one center");
  if (!centers_.allFinite()) throw InputError("mixture centers must be finite");
  if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_)) throw InputError("mixture variance must be positive");
  if (weights_.size() == 0) weights_ = Eigen::VectorXd::Constant(centers_.rows(), 1.0 / centers_.rows());
  if (weights_.size() != centers_.rows()) throw InputError("mixture weights and centers disagree in count");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite()) throw InputError("mixture weights must be >= 0");
  if (std::abs(weights_.sum() - 1.0) > 1e-9) throw InputError("mixture weights must sum to 1");
  log_weights_ = weights_.array().log().matrix();
}

namespace {

// Component log-terms log w_k - |y - mu_k|^2 / (2 sigma2).
Eigen::VectorXd component_terms(const Eigen::MatrixXd& centers, const Eigen::VectorXd& log_weights, double sigma2,
                                const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != centers.cols()) throw InputError("point dimension mismatch");
  return log_weights - (centers.rowwise() - y.transpose()).rowwise().squaredNorm() / (2.0 * sigma2);
}

}  // namespace

double GaussianMixtureEnergy::value(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return -log_sum_exp(component_terms(centers_, log_weights_, sigma2_, y).array());
}

Eigen::VectorXd GaussianMixtureEnergy::responsibilities(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  Eigen::ArrayXd r;
  softmax(component_terms(centers_, log_weights_, sigma2_, y).array(), r);
  return r.matrix();
}

Eigen::VectorXd GaussianMixtureEnergy::gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const Eigen::VectorXd r = responsibilities(y);
  return (y - centers_.transpose() * r) / sigma2_;
}

Eigen::VectorXd GaussianMixtureEnergy::hessian_vector(const Eigen::Ref<const Eigen::VectorXd>& y,
                                                      const Eigen::Ref<const Eigen::VectorXd>& v) const {
  // Hess E = I / s2 - Cov_r(mu) / s2^2.
  const Eigen::VectorXd r = responsibilities(y);
  const Eigen::VectorXd mean = centers_.transpose() * r;
  const Eigen::VectorXd proj = centers_ * v;
  const double mean_proj = mean.dot(v);
  const Eigen::VectorXd cov_v = centers_.transpose() * (r.array() * (proj.array() - mean_proj)).matrix();
  return v / sigma2_ - cov_v / (sigma2_ * sigma2_);
}

void GaussianMixtureEnergy::values(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                   Eigen::Ref<Eigen::VectorXd> out) const {
  const Eigen::Index n = points.cols();
  const Eigen::Index d = points.rows();
  if (d != dim() || out.size() != n) throw InputError("batch shape mismatch");
  const Eigen::Index m = modes();
  thread_local Eigen::ArrayXXd terms;  // n x M, contiguous per component
  terms.resize(n, m);
  const double inv = 1.0 / (2.0 * sigma2_);
  for (Eigen::Index k = 0; k < m; ++k) {
    auto col = terms.col(k);
    col = (points.row(0).transpose().array() - centers_(k, 0)).square();
    for (Eigen::Index i = 1; i < d; ++i) col += (points.row(i).transpose().array() - centers_(k, i)).square();
    col = log_weights_(k) - col * inv;
  }
  Eigen::ArrayXd top = terms.col(0);
  for (Eigen::Index k = 1; k < m; ++k) top = top.max(terms.col(k));
  Eigen::ArrayXd total = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index k = 0; k < m; ++k) total += (terms.col(k) - top).exp();
  out = -(top + total.log()).matrix();
}

Eigen::MatrixXd GaussianMixtureEnergy::sample(Eigen::Index count, CounterRng& rng) const {
  if (count < 0) throw InputError("negative sample count");
  boost::random::discrete_distribution<int> pick(weights_.data(), weights_.data() + weights_.size());
  Eigen::MatrixXd out(count, dim());
  Eigen::VectorXd z(dim());
  const double sd = std::sqrt(sigma2_);
  for (Eigen::Index s = 0; s < count; ++s) {
    const int k = pick(rng);
    fill_normal(rng, z);
    out.row(s) = centers_.row(k) + sd * z.transpose();
  }
  return out;
}

GaussianMixtureEnergy grid_mixture(int side, double spacing, double sigma2) {
  if (side < 1) throw InputError("grid side must be positive");
  Eigen::MatrixXd centers(side * side, 2);
  const double offset = spacing * (side - 1) / 2.0;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      centers(i * side + j, 0) = spacing * i - offset;
      centers(i * side + j, 1) = spacing * j - offset;
    }
  }
  return GaussianMixtureEnergy(centers, sigma2);
}

double mixture_partition_oracle(const GaussianMixtureEnergy& m) {
  return m.weights().sum() * std::pow(2.0 * M_PI * m.sigma2(), m.dim() / 2.0);
}

namespace {

constexpr char kMagic[4] = {'H', 'P', 'I', 'D'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

template <typename T>
void put_le(std::string& buf, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  buf.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& buf, std::size_t offset) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, buf.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

bool is_csv(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

EmpiricalTarget parse_binary(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("truncated header", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected HPID", 0);
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kDatasetVersion) throw FormatError("unsupported version " + std::to_string(version), 4);
  const auto count = get_le<std::uint64_t>(bytes, 8);
  const auto dim = get_le<std::uint64_t>(bytes, 16);
  if (count == 0) throw FormatError("dataset declares zero samples", 8);
  if (dim == 0) throw FormatError("dataset declares zero dimensions", 16);
  const std::uint64_t limit = (bytes.size() - kHeaderBytes) / 8;
  if (count > limit || dim > limit || count * dim != (bytes.size() - kHeaderBytes) / 8 ||
      (bytes.size() - kHeaderBytes) % 8 != 0) {
    throw FormatError("declared shape " + std::to_string(count) + " x " + std::to_string(dim) +
                          " does not match payload of " + std::to_string(bytes.size() - kHeaderBytes) + " bytes",
                      kHeaderBytes);
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::size_t offset = kHeaderBytes;
  for (Eigen::Index s = 0; s < rows.rows(); ++s) {
    for (Eigen::Index i = 0; i < rows.cols(); ++i, offset += 8) {
      rows(s, i) = get_le<double>(bytes, offset);
      if (!std::isfinite(rows(s, i))) throw FormatError("non-finite value", offset);
    }
  }
  return EmpiricalTarget(std::move(rows));
}

EmpiricalTarget parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      std::size_t lo = start, hi = end;
      while (lo < hi && std::isspace(static_cast<unsigned char>(line[lo]))) ++lo;
      while (hi > lo && std::isspace(static_cast<unsigned char>(line[hi - 1]))) --hi;
      double v = 0.0;
      const auto res = std::from_chars(line.data() + lo, line.data() + hi, v);
      if (lo == hi || res.ec != std::errc() || res.ptr != line.data() + hi || !std::isfinite(v)) {
        throw FormatError("row " + std::to_string(row) + ": invalid number '" + line.substr(lo, hi - lo) + "'", row);
      }
      values.push_back(v);
      if (end == line.size()) break;
      start = end + 1;
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw FormatError("row " + std::to_string(row) + " has " + std::to_string(values.size()) + " fields, expected " +
                            std::to_string(rows.front().size()),
                        row);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw FormatError("no rows", 0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t s = 0; s < rows.size(); ++s) {
    out.row(static_cast<Eigen::Index>(s)) = Eigen::Map<const Eigen::RowVectorXd>(rows[s].data(), out.cols());
  }
  return EmpiricalTarget(std::move(out));
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  std::string buf;
  buf.reserve(kHeaderBytes + 8 * static_cast<std::size_t>(rows.size()));
  buf.append(kMagic, 4);
  put_le<std::uint32_t>(buf, kDatasetVersion);
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(rows.rows()));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(rows.cols()));
  for (Eigen::Index s = 0; s < rows.rows(); ++s) {
    for (Eigen::Index i = 0; i < rows.cols(); ++i) put_le<double>(buf, rows(s, i));
  }
  write_file(path, buf);
}

void write_csv_dataset(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  std::string buf;
  char num[32];
  for (Eigen::Index s = 0; s < rows.rows(); ++s) {
    for (Eigen::Index i = 0; i < rows.cols(); ++i) {
      if (i > 0) buf.push_back(',');
      const auto res = std::to_chars(num, num + sizeof(num), rows(s, i));
      buf.append(num, res.ptr);
    }
    buf.push_back('\n');
  }
  write_file(path, buf);
}

EmpiricalTarget load_dataset(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return is_csv(path) ? parse_csv(bytes) : parse_binary(bytes);
}

double EnergyParams::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v = 0.0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("energy parameter '" + key + "' is not a number: " + s);
  }
  return v;
}

long EnergyParams::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("energy parameter '" + key + "' is not an integer: " + s);
  }
  return v;
}

std::vector<double> EnergyParams::get_list(const std::string& key) const {
  std::vector<double> out;
  const auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::string text = it->second;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw ConfigError("energy parameter '" + key + "' has a bad entry: " + token);
    }
    out.push_back(v);
  }
  return out;
}

namespace {

Eigen::Index positive_dim(const EnergyParams& p, long fallback) {
  const long d = p.get_int("dim", fallback);
  if (d < 1) throw ConfigError("energy dim must be positive");
  return d;
}

EnergyPtr make_mixture(const EnergyParams& p) {
  const double sigma2 = p.get_double("sigma2", 0.5);
  if (!p.has("centers")) {
    const long side = p.get_int("grid_side", 3);
    if (side < 1) throw ConfigError("grid_side must be positive");
    return std::make_shared<GaussianMixtureEnergy>(grid_mixture(static_cast<int>(side), p.get_double("spacing", 5.0), sigma2));
  }
  const Eigen::Index d = positive_dim(p, 2);
  const std::vector<double> flat = p.get_list("centers");
  if (flat.empty() || flat.size() % static_cast<std::size_t>(d) != 0) {
    throw ConfigError("mixture centers must hold a multiple of dim values");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(flat.size()) / d;
  Eigen::MatrixXd centers = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), m, d);
  Eigen::VectorXd weights;
  if (p.has("weights")) {
    const std::vector<double> w = p.get_list("weights");
    weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  try {
    return std::make_shared<GaussianMixtureEnergy>(std::move(centers), sigma2, std::move(weights));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

EnergyPtr make_gaussian(const EnergyParams& p) {
  const Eigen::Index d = positive_dim(p, 1);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  if (p.has("mean")) {
    const std::vector<double> m = p.get_list("mean");
    if (static_cast<Eigen::Index>(m.size()) != d) throw ConfigError("gaussian mean must have dim entries");
    mean = Eigen::Map<const Eigen::VectorXd>(m.data(), d);
  }
  const double variance = p.get_double("variance", 1.0);
  if (!(variance > 0.0)) throw ConfigError("gaussian variance must be positive");
  return std::make_shared<QuadraticEnergy>(std::move(mean), variance);
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, EnergyFactory> factories{
      {"mixture", make_mixture},
      {"gaussian", make_gaussian},
      {"double_well",
       [](const EnergyParams& p) -> EnergyPtr {
         return std::make_shared<DoubleWellEnergy>(positive_dim(p, 1), p.get_double("scale", 1.0));
       }},
      {"constant",
       [](const EnergyParams& p) -> EnergyPtr {
         return std::make_shared<ConstantEnergy>(positive_dim(p, 1), p.get_double("level", 0.0));
       }},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_energy(const std::string& name, EnergyFactory factory) {
  if (name.empty() || !factory) throw InputError("energy registration needs a name and a factory");
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories[name] = std::move(factory);
}

EnergyPtr make_energy(const std::string& name, const EnergyParams& params) {
  EnergyFactory factory;
  {
    Registry& r = registry();
    std::lock_guard lock(r.mutex);
    const auto it = r.factories.find(name);
    if (it == r.factories.end()) throw ConfigError("unknown energy '" + name + "'");
    factory = it->second;
  }
  return factory(params);
}

std::vector<std::string> energy_names() {
  Registry& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> out;
  for (const auto& [name, f] : r.factories) out.push_back(name);
  return out;
}

}  // namespace hpid
