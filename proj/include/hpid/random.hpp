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

#include <Eigen/Core>
#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <limits>

namespace hpid {

/// Counter-based stream: SplitMix64 whose starting state is a hash of the key
/// (seed, trajectory, step, stream). Streams with distinct keys are independent
/// for all practical purposes and can be created anywhere without coordination.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t trajectory = 0, std::uint64_t step = 0, std::uint64_t stream = 0)
      : state_(mix(mix(mix(mix(seed) ^ trajectory) ^ (step * 0x9e3779b97f4a7c15ULL)) ^ (stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Fills `out` with independent standard normal draws.
template <typename Derived>
void fill_normal(CounterRng& rng, Eigen::DenseBase<Derived>& out) {
  boost::random::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal(rng);
  }
}

/// Stream identifiers so that different consumers of one (trajectory, step) key never overlap.
enum class Stream : std::uint64_t { kIncrement = 1, kProbe = 2, kBootstrap = 3, kSynthetic = 4 };

inline CounterRng make_rng(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step, Stream stream) {
  return CounterRng(seed, trajectory, step, static_cast<std::uint64_t>(stream));
}

}  // namespace hpid
