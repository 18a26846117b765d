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

// Implicit mask-based frame alignment.
//
// For a frame pair (z_t, z_r) a small convolution stack looks at both token
// maps at once and predicts one interactive point per frame in [-1,1]^2.
// Each point spawns a radial mask over the h x w patch grid,
//
//   w(u) = eta                              if s <= delta
//        = max(0, eta - beta * (s - delta)) otherwise,   s = |u - p|_2,
//
// the mask reweights that frame's patch tokens, and the weighted tokens are
// averaged into a single mutual-information (MI) token. Token grids keep the
// class token in row 0 and the h*w patch tokens, row-major, in rows 1..hw.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ila/nn.hpp"

namespace ila {

enum class AlignStrategy { Adjacent, AlignFirst, AlignMiddle };
enum class MiVariant { PoolConcat, ElementwiseAdd, DirectConcat, AvgPoolNoAlign, None };
enum class ConvDepth { Standard, Deep };

std::string to_string(AlignStrategy s);
std::string to_string(MiVariant v);
std::string to_string(ConvDepth d);
AlignStrategy parse_strategy(const std::string& name);
MiVariant parse_mi_variant(const std::string& name);
ConvDepth parse_conv_depth(const std::string& name);

struct MaskParams {
  double eta = 1.0;
  double delta = 0.3;
  double beta = 1.0;

  /// Throws InvalidParams unless eta > 0, delta >= 0, beta >= 0.
  void validate() const;
};

struct AlignConfig {
  AlignStrategy strategy = AlignStrategy::Adjacent;
  MiVariant mi_variant = MiVariant::PoolConcat;
  ConvDepth conv_depth = ConvDepth::Standard;
  MaskParams mask;
  /// Channel width inside the point predictor; 0 selects max(8, d/16).
  std::size_t hidden = 0;

  std::size_t hidden_width(std::size_t d) const;
  bool uses_predictor() const;
  bool produces_mi_tokens() const { return mi_variant != MiVariant::None; }
};

struct InteractivePoint {
  double x = 0.0;  // column direction
  double y = 0.0;  // row direction
};

/// Patch-centre coordinates of grid cell (i, j) mapped onto [-1,1]^2.
InteractivePoint grid_position(std::size_t i, std::size_t j, std::size_t h, std::size_t w);

/// Mask weight at distance `s` from the interactive point.
double mask_weight(double s, const MaskParams& p);

struct AlignMask {
  std::size_t height = 0, width = 0;
  std::vector<double> weights;  // row-major h x w
  MaskParams params;

  double at(std::size_t i, std::size_t j) const { return weights[i * width + j]; }
};

AlignMask make_mask(const InteractivePoint& p, std::size_t h, std::size_t w,
                    const MaskParams& params);

/// Differentiable mask: point [2] -> weights [h*w].
Var mask_on_tape(const Var& point, std::size_t h, std::size_t w, const MaskParams& params);

/// Convolution stack predicting the two interactive points of a pair.
/// `convs` has 2 (standard) or 4 (deep) layers; `norms` holds the group-norm
/// gain/bias that follow every conv except the last.
struct PointPredictorWeights {
  std::vector<nn::ConvWeights> convs;
  std::vector<std::pair<Var, Var>> norms;
};

/// Kernel shapes of the predictor for token width d: one entry per conv,
/// {out, in, 3, 3}.
std::vector<Shape> predictor_conv_shapes(std::size_t d, const AlignConfig& cfg);

/// Patch rows of a token grid [(hw+1), d] as a feature map [d, h, w].
Var patch_feature_map(const Var& tokens, std::size_t h, std::size_t w);

/// Points (x, y) for frame t and its partner, each [2] with |coord| <= 1.
std::pair<Var, Var> predict_points(const Var& z_t, const Var& z_r, std::size_t h,
                                   std::size_t w, const PointPredictorWeights& weights);

struct PairArtifacts {
  Var point_t, point_r;      // [2]
  Var mask_t, mask_r;        // [hw]
  Var aligned_t, aligned_r;  // [hw, d]
  Var mi_t, mi_r;            // [1, d]
};

PairArtifacts align_pair(const Var& z_t, const Var& z_r, std::size_t h, std::size_t w,
                         const AlignConfig& cfg, const PointPredictorWeights& weights);

/// Frame paired with frame t (0-based) under `strategy`; never t itself.
std::size_t partner(std::size_t t, std::size_t frames, AlignStrategy strategy);

struct ClipAlignment {
  /// One [1, d] token per frame for every variant except None. For the
  /// ElementwiseAdd and DirectConcat variants this is the pooled aligned
  /// feature, kept for the alignment loss.
  std::vector<Var> mi_tokens;
  /// Per-frame aligned patch rows [hw, d]; empty for AvgPoolNoAlign/None.
  std::vector<Var> aligned;
  /// Pair t holds frame t aligned against partner(t).
  std::vector<PairArtifacts> pairs;
};

ClipAlignment mi_tokens_for_clip(std::span<const Var> frames, std::size_t h, std::size_t w,
                                 const AlignConfig& cfg, const PointPredictorWeights& weights);

}  // namespace ila
