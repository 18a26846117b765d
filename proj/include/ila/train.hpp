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

// Training, evaluation and ablation drivers.
//
// Every clip in a batch gets its own tape and its gradients land in a slot
// indexed by batch position; slots are then summed in that order. Results
// are therefore bit-identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ila/config.hpp"
#include "ila/metrics.hpp"
#include "ila/model.hpp"
#include "ila/synth.hpp"

namespace ila {

struct SampleLoss {
  double total = 0.0, sim = 0.0, align = 0.0;
};

/// Loss of one clip; when `grads` is non-null it receives one gradient per
/// parameter (zeros for parameters the loss does not reach).
SampleLoss sample_loss(const IlaModel& model, const Tensor& clip, std::size_t label,
                       const LossConfig& loss, std::vector<Tensor>* grads);

struct StepRecord {
  std::size_t step = 0;  // 1-based
  double total = 0.0, sim = 0.0, align = 0.0;  // batch means
  double lr = 0.0;
};

struct TrainReport {
  std::vector<StepRecord> log;  // every log_every-th step and the last one
  double seconds = 0.0;
};

/// One JSON object per line: {"step","total","sim","align","lr"}.
std::string to_json_line(const StepRecord& r);

/// Trains in place for cfg.steps() steps. Each step draws cfg.batch clips
/// uniformly with replacement from a stream seeded by cfg.seed. `on_record`
/// is called for every logged step.
TrainReport train(IlaModel& model, const RunConfig& cfg, const Dataset& data,
                  const std::function<void(const StepRecord&)>& on_record = {});

struct EvalReport {
  std::size_t samples = 0;
  double top1 = 0.0;
  double top5 = 0.0;
  std::vector<std::vector<double>> scores;
};

EvalReport evaluate(const IlaModel& model, const Dataset& data, std::size_t threads = 0);

/// Class scores of one clip, no gradients.
std::vector<double> predict(const IlaModel& model, const Tensor& clip);

/// Mean exact EMD between the last block's patch tokens of adjacent frames,
/// per clip and overall. Throws EmptyDataset.
EmdReport mi_probe(const IlaModel& model, const Dataset& data, std::size_t threads = 0);

/// Git blob hash: SHA-1 of "blob <size>\0" followed by the bytes.
std::string git_blob_sha1(std::span<const std::uint8_t> bytes);
std::string file_sha1(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Ablations.

struct AblationVariant {
  std::string name;
  RunConfig config;
};

/// Axis names: strategy, blocks, mi_variant, gamma. Throws ConfigError.
std::vector<AblationVariant> ablation_variants(const RunConfig& base, const std::string& axis);
const std::vector<std::string>& ablation_axes();

struct AblationRow {
  std::string axis, variant;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double final_loss = 0.0;
  double top1 = 0.0;
  double emd_mean = 0.0;
};

/// Trains and evaluates every variant of `axis` for each of
/// base.ablation_seeds seeds on the same data.
std::vector<AblationRow> run_ablation(
    const RunConfig& base, const std::string& axis, const Dataset& train_data,
    const Dataset& test_data, bool probe_emd,
    const std::function<void(const AblationRow&)>& on_row = {});

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

}  // namespace ila
