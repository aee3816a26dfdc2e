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

#include "hpid/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hpid {

/// section -> key -> raw value.
using ConfigTree = std::map<std::string, std::map<std::string, std::string>>;

ConfigTree parse_config(const std::string& text);
ConfigTree read_config(const std::filesystem::path& path);

/// Sets "section.key" to `value`, overriding the file.
void apply_override(ConfigTree& tree, const std::string& dotted_key, const std::string& value);

/// Sorted sections and keys, one "key = value" per line. Parsing this text
/// gives back the same tree.
std::string canonical_text(const ConfigTree& tree);

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string content_hash(const std::string& text);

/// Checks every key against the schema and converts it. [target] keys other
/// than energy/dataset are passed to the energy factory untouched.
RunConfig build_run_config(const ConfigTree& tree);

struct SweepSpec {
  std::vector<int> steps{25, 50, 100, 200};
  std::vector<long> samples{250, 500, 1000};
  int repeats = 10;
};

SweepSpec build_sweep_spec(const ConfigTree& tree);

struct DiagnoseSpec {
  double threshold = 0.5;
  int bootstrap = 1000;
};

DiagnoseSpec build_diagnose_spec(const ConfigTree& tree);

}  // namespace hpid
