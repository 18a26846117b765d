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
#include <span>
#include <vector>

#include "ila/model.hpp"

namespace ila {

inline constexpr double kCosineEps = 1e-8;

struct LossConfig {
  double gamma = 0.1;            // alignment loss weight
  double label_smoothing = 0.0;  // in [0, 1)

  void validate() const;
};

/// Cross-entropy of softmax(scores) against a smoothed one-hot target: the
/// label keeps 1 - eps and the other classes share eps equally.
Var similarity_loss(const Var& scores, std::size_t label, double label_smoothing = 0.0);

/// Cosine similarity of two [1, d] or [d] vectors; the norm product is
/// clamped below at kCosineEps.
Var cosine(const Var& a, const Var& b);

/// l_a = -sum_blocks sum_{t>=1} cos(m[b][t], m[b][t-1]).
/// Returns an exact zero constant when there are no tokens; tokens must then
/// come with a tape via `tape`.
Var alignment_loss(const std::vector<std::vector<Var>>& mi_tokens, Tape& tape);

/// sim + gamma * align.
Var total_loss(const Var& sim, const Var& align, double gamma);

struct OptimizerConfig {
  double lr = 1e-3;
  double min_lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::size_t warmup_steps = 100;
  std::size_t total_steps = 2000;
};

/// Linear warmup from 0 to `lr` over `warmup_steps`, then cosine decay to
/// `min_lr` at `total_steps`.
double learning_rate(const OptimizerConfig& cfg, std::size_t step);

/// AdamW with bias correction and decoupled weight decay. Decay applies only
/// to parameters of rank >= 2 (weight matrices and kernels).
class AdamW {
 public:
  explicit AdamW(OptimizerConfig cfg) : cfg_(cfg) {}

  /// Applies one update at the learning rate of the current step and returns
  /// that rate. Throws ShapeMismatch if grads do not line up with params.
  double step(ParameterSet& params, std::span<const Tensor> grads);

  std::size_t steps_taken() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace ila
