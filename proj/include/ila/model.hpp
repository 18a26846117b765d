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
#include <span>
#include <string>
#include <vector>

#include "ila/alignment.hpp"
#include "ila/parameters.hpp"

namespace ila {

enum class LossMode { CosineText, CrossEntropy };

std::string to_string(LossMode m);
LossMode parse_loss_mode(const std::string& name);

struct ModelConfig {
  std::size_t frames = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t patch = 8;
  std::size_t dim = 64;
  std::size_t depth = 4;
  std::size_t heads = 4;
  /// 1-based indices of blocks that run alignment.
  std::vector<std::size_t> aligned_blocks{1, 2, 3, 4};
  AlignConfig align;
  LossMode loss_mode = LossMode::CosineText;
  double temperature = 0.07;
  std::size_t num_classes = 8;

  std::size_t grid_h() const { return height / patch; }
  std::size_t grid_w() const { return width / patch; }
  std::size_t patches() const { return grid_h() * grid_w(); }
  std::size_t patch_dim() const { return patch * patch * 3; }
  /// True when block `block` (1-based) runs any MI variant other than None.
  bool block_aligned(std::size_t block) const;
  /// Throws BadParams on any violated invariant.
  void validate() const;
};

/// Parameter handles of one IST block.
struct IstBlockParams {
  ParamId ln1_g, ln1_b;
  ParamId qkv_w, qkv_b, out_w, out_b;
  ParamId ln2_g, ln2_b;
  ParamId fc1_w, fc1_b, fc2_w, fc2_b;
  std::vector<ParamId> conv_w, conv_b;  // point predictor (aligned blocks only)
  std::vector<ParamId> norm_g, norm_b;
};

struct BlockOutput {
  std::vector<Var> frames;
  ClipAlignment alignment;
  /// Rows entering the spatial attention of each frame.
  std::size_t attention_tokens = 0;
};

struct ForwardResult {
  std::vector<Var> tokens;  // final per-frame token grids [(hw+1), d]
  Var video;                // [d]
  Var scores;               // [num_classes]
  /// MI tokens per aligned block (in block order), one [1, d] per frame.
  std::vector<std::vector<Var>> mi_tokens;
  std::vector<BlockOutput> blocks;
};

/// cos(v, c_k) / tau for every row c_k of `table` [K, d]; v is [d].
/// Throws ZeroVector if v or a row of the table is exactly zero.
Var cosine_scores(const Var& v, const Var& table, double tau);

/// The full network: patch embedding, a stack of IST blocks, a temporal
/// attention head over the class tokens, and either a class-embedding table
/// (cosine scores) or a linear classifier.
class IlaModel {
 public:
  /// Fresh model with the documented initialization, drawn from `seed`.
  IlaModel(ModelConfig cfg, std::uint64_t seed);
  /// Model over existing parameters; names and shapes must match `cfg`.
  IlaModel(ModelConfig cfg, ParameterSet params);

  const ModelConfig& config() const { return cfg_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params() { return params_; }

  /// clip is [T, H, W, 3] with pixels in [0, 1]; `bound` comes from params().bind.
  ForwardResult forward(Tape& tape, std::span<const Var> bound, const Tensor& clip) const;

  std::vector<Var> patch_embed(Tape& tape, std::span<const Var> bound,
                               const Tensor& clip) const;
  /// `block` is 0-based here.
  BlockOutput ist_block(std::span<const Var> frames, std::span<const Var> bound,
                        std::size_t block) const;
  Var video_repr(std::span<const Var> frames, std::span<const Var> bound) const;
  Var class_scores(const Var& video, std::span<const Var> bound) const;

  nn::MsaWeights block_msa(std::span<const Var> bound, std::size_t block) const;
  PointPredictorWeights block_predictor(std::span<const Var> bound, std::size_t block) const;

 private:
  void declare(std::uint64_t seed, bool initialize, const ParameterSet* existing);

  ModelConfig cfg_;
  ParameterSet params_;
  ParamId embed_w_{}, pos_{}, cls_{};
  std::vector<IstBlockParams> blocks_;
  ParamId head_ln_g_{}, head_ln_b_{};
  ParamId head_qkv_w_{}, head_qkv_b_{}, head_out_w_{}, head_out_b_{};
  ParamId class_table_{}, cls_head_w_{}, cls_head_b_{};
};

/// Splits a [T, H, W, 3] clip into per-frame patch matrices [hw, P*P*3],
/// flattening each patch in (row, column, channel) order.
std::vector<Tensor> patchify(const Tensor& clip, std::size_t patch);

}  // namespace ila
