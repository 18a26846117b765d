// Copyright 2026 The ILA Authors.
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ila/model.hpp"
#include "ila/objective.hpp"
#include "ila/synth.hpp"

namespace ila {

inline constexpr std::uint64_t kTestSplitStream = 0x7E57;

/// Everything a run needs, read from a plain-text key=value file.
///
/// Blank lines and lines starting with '#' are ignored. Unknown or repeated
/// keys are errors. The clip geometry (frames, height, width) is shared by
/// the model and the synthetic task. `serialize` writes every key, so a
/// results file carrying it is enough to repeat the run.
struct RunConfig {
  ModelConfig model;
  LossConfig loss;
  OptimizerConfig optim;       // optim.total_steps is the `steps` key
  SynthTaskSpec synth;         // synth.seed is the `data_seed` key
  std::size_t batch = 32;
  std::uint64_t seed = 0;      // model init and batch sampling
  std::size_t threads = 0;     // 0 = all hardware threads
  std::size_t train_samples = 2048;
  std::size_t test_samples = 512;
  std::size_t log_every = 10;  // training-log stride in steps
  /// Steps per ablation run; 0 uses `steps`.
  std::size_t ablation_steps = 0;
  /// Seeds per ablation variant (seed, seed+1, ...).
  std::size_t ablation_seeds = 1;

  std::size_t steps() const { return optim.total_steps; }
  /// Synthetic task spec with the shared clip geometry filled in; the test
  /// split draws from derive_seed(data_seed, kTestSplitStream).
  SynthTaskSpec task(bool test_split = false) const;
  /// Throws ConfigError (wrapping the underlying cause) on invalid values.
  void validate() const;
};

/// Throws ConfigError with the offending line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& cfg);

/// "all", "none", a range "a-b", or a comma list "1,3,4"; 1-based.
std::vector<std::size_t> parse_block_list(const std::string& text, std::size_t depth);
std::string format_block_list(const std::vector<std::size_t>& blocks);

/// Documented defaults, one key per line with a comment.
std::string default_config_text();

}  // namespace ila
