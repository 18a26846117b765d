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

#include "ila/model.hpp"

#include <algorithm>
#include <cmath>

#include "ila/errors.hpp"
#include "ila/rng.hpp"

namespace ila {

std::string to_string(LossMode m) {
  return m == LossMode::CosineText ? "CosineText" : "CrossEntropy";
}

LossMode parse_loss_mode(const std::string& name) {
  if (name == "CosineText") return LossMode::CosineText;
  if (name == "CrossEntropy") return LossMode::CrossEntropy;
  throw ConfigError("unknown loss mode '" + name + "'");
}

bool ModelConfig::block_aligned(std::size_t block) const {
  return align.mi_variant != MiVariant::None &&
         std::find(aligned_blocks.begin(), aligned_blocks.end(), block) != aligned_blocks.end();
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw BadParams(why); };
  if (frames < 1 || height < 1 || width < 1 || patch < 1 || dim < 1 || depth < 1 || heads < 1)
    fail("all model extents must be positive");
  if (height % patch != 0 || width % patch != 0)
    fail("image size " + std::to_string(height) + "x" + std::to_string(width) +
         " is not divisible by patch " + std::to_string(patch));
  if (dim % heads != 0)
    fail("width " + std::to_string(dim) + " not divisible by " + std::to_string(heads) + " heads");
  for (std::size_t b : aligned_blocks) {
    if (b < 1 || b > depth)
      fail("aligned block " + std::to_string(b) + " outside 1.." + std::to_string(depth));
  }
  if (!aligned_blocks.empty() && align.mi_variant != MiVariant::None && frames < 2)
    fail("alignment needs at least 2 frames");
  if (!(temperature > 0.0)) fail("temperature must be positive");
  if (num_classes < 2) fail("need at least 2 classes");
  align.mask.validate();
}

namespace {

enum class Init { Normal, Zeros, Ones };

constexpr double kInitStd = 0.02;

Tensor make_init(const Shape& shape, Init init, SplitMix64& rng) {
  switch (init) {
    case Init::Zeros: return Tensor::zeros(shape);
    case Init::Ones: return Tensor::full(shape, 1.0);
    case Init::Normal: {
      Tensor t(shape);
      for (double& v : t.mutable_data()) v = rng.truncated_normal(kInitStd);
      return t;
    }
  }
  return Tensor(shape);
}

}  // namespace

IlaModel::IlaModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  declare(seed, true, nullptr);
}

IlaModel::IlaModel(ModelConfig cfg, ParameterSet params) : cfg_(std::move(cfg)) {
  cfg_.validate();
  declare(0, false, &params);
}

void IlaModel::declare(std::uint64_t seed, bool initialize, const ParameterSet* existing) {
  SplitMix64 rng(seed);
  auto def = [&](const std::string& name, const Shape& shape, Init init) -> ParamId {
    if (initialize) return params_.add(name, make_init(shape, init, rng));
    const auto id = existing->find(name);
    if (!id) throw BadParams("checkpoint lacks parameter '" + name + "'");
    const Tensor& t = existing->value(*id);
    if (t.shape() != shape) {
      throw BadParams("parameter '" + name + "' has shape " + to_string(t.shape()) +
                      ", expected " + to_string(shape));
    }
    return params_.add(name, t);
  };

  const std::size_t d = cfg_.dim, hw = cfg_.patches();
  embed_w_ = def("embed.w", {cfg_.patch_dim(), d}, Init::Normal);
  pos_ = def("embed.pos", {hw + 1, d}, Init::Normal);
  cls_ = def("embed.cls", {d}, Init::Normal);

  blocks_.clear();
  for (std::size_t l = 1; l <= cfg_.depth; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    IstBlockParams b;
    b.ln1_g = def(p + "ln1.g", {d}, Init::Ones);
    b.ln1_b = def(p + "ln1.b", {d}, Init::Zeros);
    b.qkv_w = def(p + "attn.qkv.w", {d, 3 * d}, Init::Normal);
    b.qkv_b = def(p + "attn.qkv.b", {3 * d}, Init::Zeros);
    b.out_w = def(p + "attn.out.w", {d, d}, Init::Normal);
    b.out_b = def(p + "attn.out.b", {d}, Init::Zeros);
    b.ln2_g = def(p + "ln2.g", {d}, Init::Ones);
    b.ln2_b = def(p + "ln2.b", {d}, Init::Zeros);
    b.fc1_w = def(p + "mlp.fc1.w", {d, nn::kMlpRatio * d}, Init::Normal);
    b.fc1_b = def(p + "mlp.fc1.b", {nn::kMlpRatio * d}, Init::Zeros);
    b.fc2_w = def(p + "mlp.fc2.w", {nn::kMlpRatio * d, d}, Init::Normal);
    b.fc2_b = def(p + "mlp.fc2.b", {d}, Init::Zeros);
    if (cfg_.block_aligned(l) && cfg_.align.uses_predictor()) {
      const auto shapes = predictor_conv_shapes(d, cfg_.align);
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        const std::string c = p + "align.conv" + std::to_string(i + 1) + ".";
        const bool last = i + 1 == shapes.size();
        // The last layer starts at zero so every point starts at the grid centre.
        b.conv_w.push_back(def(c + "w", shapes[i], last ? Init::Zeros : Init::Normal));
        b.conv_b.push_back(def(c + "b", {shapes[i][0]}, Init::Zeros));
        if (!last) {
          const std::string n = p + "align.norm" + std::to_string(i + 1) + ".";
          b.norm_g.push_back(def(n + "g", {shapes[i][0]}, Init::Ones));
          b.norm_b.push_back(def(n + "b", {shapes[i][0]}, Init::Zeros));
        }
      }
    }
    blocks_.push_back(std::move(b));
  }

  head_ln_g_ = def("head.ln.g", {d}, Init::Ones);
  head_ln_b_ = def("head.ln.b", {d}, Init::Zeros);
  head_qkv_w_ = def("head.attn.qkv.w", {d, 3 * d}, Init::Normal);
  head_qkv_b_ = def("head.attn.qkv.b", {3 * d}, Init::Zeros);
  head_out_w_ = def("head.attn.out.w", {d, d}, Init::Normal);
  head_out_b_ = def("head.attn.out.b", {d}, Init::Zeros);
  if (cfg_.loss_mode == LossMode::CosineText) {
    class_table_ = def("classes.table", {cfg_.num_classes, d}, Init::Normal);
  } else {
    cls_head_w_ = def("classifier.w", {d, cfg_.num_classes}, Init::Normal);
    cls_head_b_ = def("classifier.b", {cfg_.num_classes}, Init::Zeros);
  }
  if (!initialize && existing->size() != params_.size()) {
    throw BadParams("checkpoint holds " + std::to_string(existing->size()) +
                    " parameters, model expects " + std::to_string(params_.size()));
  }
}

std::vector<Tensor> patchify(const Tensor& clip, std::size_t patch) {
  const Shape& s = clip.shape();
  if (s.size() != 4 || s[3] != 3 || s[1] % patch != 0 || s[2] % patch != 0) {
    throw ShapeMismatch("clip " + to_string(s) + " is not [T,H,W,3] with extents divisible by " +
                        std::to_string(patch));
  }
  const std::size_t frames = s[0], H = s[1], W = s[2];
  const std::size_t gh = H / patch, gw = W / patch, pd = patch * patch * 3;
  auto px = clip.data();
  std::vector<Tensor> out;
  out.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    Tensor m({gh * gw, pd});
    auto md = m.mutable_data();
    for (std::size_t gi = 0; gi < gh; ++gi) {
      for (std::size_t gj = 0; gj < gw; ++gj) {
        double* row = md.data() + (gi * gw + gj) * pd;
        for (std::size_t py = 0; py < patch; ++py) {
          const double* src = px.data() + ((t * H + gi * patch + py) * W + gj * patch) * 3;
          std::copy_n(src, patch * 3, row + py * patch * 3);
        }
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Var> IlaModel::patch_embed(Tape& tape, std::span<const Var> bound,
                                       const Tensor& clip) const {
  const Shape expected{cfg_.frames, cfg_.height, cfg_.width, 3};
  if (clip.shape() != expected) {
    throw ShapeMismatch("clip " + to_string(clip.shape()) + ", model expects " +
                        to_string(expected));
  }
  const std::size_t d = cfg_.dim, hw = cfg_.patches();
  const Var& pos = bound[pos_];
  Var cls_row = add(reshape(bound[cls_], {1, d}), slice(pos, 0, 0, 1));
  Var patch_pos = slice(pos, 0, 1, hw + 1);
  std::vector<Var> frames;
  for (const Tensor& patches : patchify(clip, cfg_.patch)) {
    Var tokens = add(matmul(tape.constant(patches), bound[embed_w_]), patch_pos);
    const Var rows[] = {cls_row, tokens};
    frames.push_back(concat(rows, 0));
  }
  return frames;
}

nn::MsaWeights IlaModel::block_msa(std::span<const Var> bound, std::size_t block) const {
  const IstBlockParams& b = blocks_.at(block);
  return {bound[b.qkv_w], bound[b.qkv_b], bound[b.out_w], bound[b.out_b], cfg_.heads};
}

PointPredictorWeights IlaModel::block_predictor(std::span<const Var> bound,
                                                std::size_t block) const {
  const IstBlockParams& b = blocks_.at(block);
  PointPredictorWeights w;
  for (std::size_t i = 0; i < b.conv_w.size(); ++i) {
    w.convs.push_back({bound[b.conv_w[i]], bound[b.conv_b[i]], 1, 1});
  }
  for (std::size_t i = 0; i < b.norm_g.size(); ++i) {
    w.norms.emplace_back(bound[b.norm_g[i]], bound[b.norm_b[i]]);
  }
  return w;
}

BlockOutput IlaModel::ist_block(std::span<const Var> frames, std::span<const Var> bound,
                                std::size_t block) const {
  if (block >= cfg_.depth) throw BadIndex("block " + std::to_string(block) + " out of range");
  const IstBlockParams& b = blocks_[block];
  const std::size_t hw = cfg_.patches(), d = cfg_.dim;
  const nn::MsaWeights attn = block_msa(bound, block);
  const nn::MlpWeights mlp{bound[b.fc1_w], bound[b.fc1_b], bound[b.fc2_w], bound[b.fc2_b]};

  BlockOutput out;
  const bool aligned = cfg_.block_aligned(block + 1);
  const MiVariant variant = aligned ? cfg_.align.mi_variant : MiVariant::None;
  if (aligned) {
    out.alignment = mi_tokens_for_clip(frames, cfg_.grid_h(), cfg_.grid_w(), cfg_.align,
                                       cfg_.align.uses_predictor()
                                           ? block_predictor(bound, block)
                                           : PointPredictorWeights{});
  }

  for (std::size_t t = 0; t < frames.size(); ++t) {
    Var z = frames[t];
    Var x = z;
    switch (variant) {
      case MiVariant::PoolConcat:
      case MiVariant::AvgPoolNoAlign: {
        const Var rows[] = {z, out.alignment.mi_tokens[t]};
        x = concat(rows, 0);
        break;
      }
      case MiVariant::DirectConcat: {
        const Var rows[] = {z, out.alignment.aligned[t]};
        x = concat(rows, 0);
        break;
      }
      case MiVariant::ElementwiseAdd: {
        const Var rows[] = {z.tape()->constant(Tensor::zeros({1, d})), out.alignment.aligned[t]};
        z = add(z, concat(rows, 0));
        x = z;
        break;
      }
      case MiVariant::None: break;
    }
    out.attention_tokens = x.shape()[0];
    Var attended = add(x, nn::msa(nn::layer_norm(x, bound[b.ln1_g], bound[b.ln1_b]), attn));
    Var kept = attended.shape()[0] == hw + 1 ? attended : slice(attended, 0, 0, hw + 1);
    out.frames.push_back(
        add(kept, nn::mlp(nn::layer_norm(kept, bound[b.ln2_g], bound[b.ln2_b]), mlp)));
  }
  return out;
}

Var IlaModel::video_repr(std::span<const Var> frames, std::span<const Var> bound) const {
  std::vector<Var> cls_rows;
  cls_rows.reserve(frames.size());
  for (const Var& z : frames) cls_rows.push_back(slice(z, 0, 0, 1));
  Var cls = cls_rows.size() == 1 ? cls_rows[0] : concat(cls_rows, 0);
  const nn::MsaWeights head{bound[head_qkv_w_], bound[head_qkv_b_], bound[head_out_w_],
                            bound[head_out_b_], cfg_.heads};
  Var mixed = nn::msa(nn::layer_norm(cls, bound[head_ln_g_], bound[head_ln_b_]), head);
  return reshape(mean(mixed, 0), {cfg_.dim});
}

Var cosine_scores(const Var& v, const Var& table, double tau) {
  if (!(tau > 0.0)) throw InvalidParams("temperature must be positive");
  if (v.shape().size() != 1 || table.shape().size() != 2 || table.shape()[1] != v.shape()[0]) {
    throw ShapeMismatch("cosine scores: v " + to_string(v.shape()) + ", table " +
                        to_string(table.shape()));
  }
  const std::size_t k = table.shape()[0], d = v.shape()[0];
  Var v_norm = sqrt(sum(mul(v, v)));
  if (v_norm.value().item() == 0.0) throw ZeroVector("video representation is zero");
  Var row_norm = sqrt(sum(mul(table, table), 1));
  for (double n : row_norm.value().data()) {
    if (n == 0.0) throw ZeroVector("class embedding row is zero");
  }
  Var v_hat = div(reshape(v, {d, 1}), broadcast(reshape(v_norm, {1, 1}), {d, 1}));
  Var table_hat = div(table, broadcast(row_norm, {k, d}));
  return scale(reshape(matmul(table_hat, v_hat), {k}), 1.0 / tau);
}

Var IlaModel::class_scores(const Var& video, std::span<const Var> bound) const {
  if (cfg_.loss_mode == LossMode::CosineText) {
    return cosine_scores(video, bound[class_table_], cfg_.temperature);
  }
  return reshape(nn::linear(reshape(video, {1, cfg_.dim}), bound[cls_head_w_], bound[cls_head_b_]),
                 {cfg_.num_classes});
}

ForwardResult IlaModel::forward(Tape& tape, std::span<const Var> bound,
                                const Tensor& clip) const {
  if (bound.size() != params_.size()) {
    throw ShapeMismatch("bound " + std::to_string(bound.size()) + " parameters, model has " +
                        std::to_string(params_.size()));
  }
  ForwardResult r;
  r.tokens = patch_embed(tape, bound, clip);
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    BlockOutput b = ist_block(r.tokens, bound, l);
    r.tokens = b.frames;
    if (!b.alignment.mi_tokens.empty()) r.mi_tokens.push_back(b.alignment.mi_tokens);
    r.blocks.push_back(std::move(b));
  }
  r.video = video_repr(r.tokens, bound);
  r.scores = class_scores(r.video, bound);
  return r;
}

}  // namespace ila
