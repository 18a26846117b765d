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

#include "ila/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "ila/errors.hpp"

namespace ila {

std::string to_string(AlignStrategy s) {
  switch (s) {
    case AlignStrategy::Adjacent: return "Adjacent";
    case AlignStrategy::AlignFirst: return "AlignFirst";
    case AlignStrategy::AlignMiddle: return "AlignMiddle";
  }
  return "?";
}

std::string to_string(MiVariant v) {
  switch (v) {
    case MiVariant::PoolConcat: return "PoolConcat";
    case MiVariant::ElementwiseAdd: return "ElementwiseAdd";
    case MiVariant::DirectConcat: return "DirectConcat";
    case MiVariant::AvgPoolNoAlign: return "AvgPoolNoAlign";
    case MiVariant::None: return "None";
  }
  return "?";
}

std::string to_string(ConvDepth d) { return d == ConvDepth::Standard ? "standard" : "deep"; }

AlignStrategy parse_strategy(const std::string& name) {
  for (auto s : {AlignStrategy::Adjacent, AlignStrategy::AlignFirst, AlignStrategy::AlignMiddle}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown align strategy '" + name + "'");
}

MiVariant parse_mi_variant(const std::string& name) {
  for (auto v : {MiVariant::PoolConcat, MiVariant::ElementwiseAdd, MiVariant::DirectConcat,
                 MiVariant::AvgPoolNoAlign, MiVariant::None}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown MI variant '" + name + "'");
}

ConvDepth parse_conv_depth(const std::string& name) {
  if (name == "standard") return ConvDepth::Standard;
  if (name == "deep") return ConvDepth::Deep;
  throw ConfigError("unknown conv depth '" + name + "'");
}

void MaskParams::validate() const {
  if (!(eta > 0.0) || !(delta >= 0.0) || !(beta >= 0.0)) {
    throw InvalidParams("mask needs eta > 0, delta >= 0, beta >= 0 (got eta=" +
                        std::to_string(eta) + ", delta=" + std::to_string(delta) +
                        ", beta=" + std::to_string(beta) + ")");
  }
}

std::size_t AlignConfig::hidden_width(std::size_t d) const {
  return hidden != 0 ? hidden : std::max<std::size_t>(8, d / 16);
}

bool AlignConfig::uses_predictor() const {
  return mi_variant == MiVariant::PoolConcat || mi_variant == MiVariant::ElementwiseAdd ||
         mi_variant == MiVariant::DirectConcat;
}

InteractivePoint grid_position(std::size_t i, std::size_t j, std::size_t h, std::size_t w) {
  return {-1.0 + static_cast<double>(2 * j + 1) / static_cast<double>(w),
          -1.0 + static_cast<double>(2 * i + 1) / static_cast<double>(h)};
}

double mask_weight(double s, const MaskParams& p) {
  const double excess = s + (-p.delta);
  const double decayed = p.eta + (-p.beta) * (excess > 0.0 ? excess : 0.0);
  return decayed > 0.0 ? decayed : 0.0;
}

AlignMask make_mask(const InteractivePoint& p, std::size_t h, std::size_t w,
                    const MaskParams& params) {
  params.validate();
  AlignMask mask{h, w, std::vector<double>(h * w), params};
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const InteractivePoint u = grid_position(i, j, h, w);
      const double dx = p.x - u.x, dy = p.y - u.y;
      mask.weights[i * w + j] = mask_weight(std::sqrt(dx * dx + dy * dy), params);
    }
  }
  return mask;
}

Var mask_on_tape(const Var& point, std::size_t h, std::size_t w, const MaskParams& params) {
  params.validate();
  if (point.shape() != Shape{2}) throw ShapeMismatch("mask point " + to_string(point.shape()));
  Tape& tape = *point.tape();
  const std::size_t n = h * w;
  Tensor ux({n}), uy({n});
  {
    auto xs = ux.mutable_data();
    auto ys = uy.mutable_data();
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const InteractivePoint u = grid_position(i, j, h, w);
        xs[i * w + j] = u.x;
        ys[i * w + j] = u.y;
      }
    }
  }
  Var dx = sub(broadcast(slice(point, 0, 0, 1), {n}), tape.constant(ux));
  Var dy = sub(broadcast(slice(point, 0, 1, 2), {n}), tape.constant(uy));
  Var s = sqrt(add(mul(dx, dx), mul(dy, dy)));
  Var excess = relu(add_scalar(s, -params.delta));
  return relu(add_scalar(scale(excess, -params.beta), params.eta));
}

std::vector<Shape> predictor_conv_shapes(std::size_t d, const AlignConfig& cfg) {
  const std::size_t c = cfg.hidden_width(d);
  std::vector<Shape> shapes{{c, 2 * d, 3, 3}};
  if (cfg.conv_depth == ConvDepth::Deep) {
    shapes.push_back({c, c, 3, 3});
    shapes.push_back({c, c, 3, 3});
  }
  shapes.push_back({4, c, 3, 3});
  return shapes;
}

Var patch_feature_map(const Var& tokens, std::size_t h, std::size_t w) {
  const Shape& s = tokens.shape();
  if (s.size() != 2 || s[0] != h * w + 1) {
    throw ShapeMismatch("token grid " + to_string(s) + " does not hold " +
                        std::to_string(h * w) + " patches plus a class token");
  }
  const std::size_t d = s[1];
  return reshape(transpose(slice(tokens, 0, 1, h * w + 1)), {d, h, w});
}

std::pair<Var, Var> predict_points(const Var& z_t, const Var& z_r, std::size_t h,
                                   std::size_t w, const PointPredictorWeights& weights) {
  if (z_t.shape() != z_r.shape()) {
    throw ShapeMismatch("frame pair " + to_string(z_t.shape()) + " vs " +
                        to_string(z_r.shape()));
  }
  if (weights.convs.size() < 2 || weights.norms.size() + 1 != weights.convs.size()) {
    throw ShapeMismatch("point predictor needs n convs and n-1 norms");
  }
  const Var maps[] = {patch_feature_map(z_t, h, w), patch_feature_map(z_r, h, w)};
  Var x = concat(maps, 0);
  for (std::size_t i = 0; i + 1 < weights.convs.size(); ++i) {
    x = relu(nn::group_norm(nn::conv(x, weights.convs[i]), weights.norms[i].first,
                            weights.norms[i].second));
  }
  Var coords = tanh(nn::global_avg_pool(nn::conv(x, weights.convs.back())));
  if (coords.shape() != Shape{4}) {
    throw ShapeMismatch("point predictor must end in 4 channels, got " +
                        to_string(coords.shape()));
  }
  return {slice(coords, 0, 0, 2), slice(coords, 0, 2, 4)};
}

namespace {

Var apply_mask(const Var& tokens, const Var& mask, std::size_t h, std::size_t w) {
  const std::size_t hw = h * w, d = tokens.shape()[1];
  Var patches = slice(tokens, 0, 1, hw + 1);
  return mul(broadcast(reshape(mask, {hw, 1}), {hw, d}), patches);
}

}  // namespace

PairArtifacts align_pair(const Var& z_t, const Var& z_r, std::size_t h, std::size_t w,
                         const AlignConfig& cfg, const PointPredictorWeights& weights) {
  PairArtifacts art;
  std::tie(art.point_t, art.point_r) = predict_points(z_t, z_r, h, w, weights);
  art.mask_t = mask_on_tape(art.point_t, h, w, cfg.mask);
  art.mask_r = mask_on_tape(art.point_r, h, w, cfg.mask);
  art.aligned_t = apply_mask(z_t, art.mask_t, h, w);
  art.aligned_r = apply_mask(z_r, art.mask_r, h, w);
  art.mi_t = mean(art.aligned_t, 0);
  art.mi_r = mean(art.aligned_r, 0);
  return art;
}

std::size_t partner(std::size_t t, std::size_t frames, AlignStrategy strategy) {
  if (frames < 2) throw BadIndex("alignment needs at least 2 frames");
  if (t >= frames) {
    throw BadIndex("frame " + std::to_string(t) + " out of range for " +
                   std::to_string(frames) + " frames");
  }
  switch (strategy) {
    case AlignStrategy::Adjacent: return t == 0 ? 1 : t - 1;
    case AlignStrategy::AlignFirst: return t == 0 ? 1 : 0;
    case AlignStrategy::AlignMiddle: {
      const std::size_t mid = (frames + 1) / 2 - 1;
      if (t != mid) return mid;
      return mid == 0 ? 1 : mid - 1;
    }
  }
  throw BadIndex("unknown strategy");
}

ClipAlignment mi_tokens_for_clip(std::span<const Var> frames, std::size_t h, std::size_t w,
                                 const AlignConfig& cfg, const PointPredictorWeights& weights) {
  if (frames.size() < 2) {
    throw TooFewFrames("alignment needs at least 2 frames, got " +
                       std::to_string(frames.size()));
  }
  ClipAlignment out;
  if (cfg.mi_variant == MiVariant::None) return out;
  if (cfg.mi_variant == MiVariant::AvgPoolNoAlign) {
    for (const Var& z : frames) out.mi_tokens.push_back(mean(slice(z, 0, 1, h * w + 1), 0));
    return out;
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::size_t r = partner(t, frames.size(), cfg.strategy);
    PairArtifacts art = align_pair(frames[t], frames[r], h, w, cfg, weights);
    out.mi_tokens.push_back(art.mi_t);
    out.aligned.push_back(art.aligned_t);
    out.pairs.push_back(std::move(art));
  }
  return out;
}

}  // namespace ila
