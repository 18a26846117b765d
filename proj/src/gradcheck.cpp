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


#include "ila/gradcheck.hpp"

#include <cmath>

#include "ila/objective.hpp"
#include "ila/rng.hpp"

namespace ila {
namespace {

double eval(const ScalarFn& f, std::span<const Tensor> inputs) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.constant(t));
  return f(tape, leaves).value().item();
}

/// Fixed pseudo-random weights for reducing an op output to a scalar; the
/// same shape always yields the same weights.
Var project(const Var& out) {
  SplitMix64 rng(0x9E11 + out.value().size());
  std::vector<double> w(out.value().size());
  for (double& x : w) x = 2.0 * rng.uniform() - 1.0;
  return sum(mul(out, out.tape()->constant(Tensor(out.shape(), std::move(w)))));
}

struct Sampler {
  SplitMix64 rng;

  Tensor uniform(Shape s, double lo, double hi) {
    Tensor t(std::move(s));
    for (double& x : t.mutable_data()) x = lo + (hi - lo) * rng.uniform();
    return t;
  }
  Tensor normal(Shape s, double sigma = 1.0) {
    Tensor t(std::move(s));
    for (double& x : t.mutable_data()) x = sigma * rng.normal();
    return t;
  }
  /// Uniform in [-1, 1] but at least `gap` away from `kink`.
  Tensor away_from(Shape s, double kink, double gap) {
    Tensor t(std::move(s));
    for (double& x : t.mutable_data()) {
      do {
        x = kink + 2.0 * rng.uniform() - 1.0;
      } while (std::abs(x - kink) < gap);
    }
    return t;
  }
};

struct Case {
  std::string name;
  std::vector<Tensor> inputs;
  ScalarFn fn;
};

nn::MsaWeights msa_from(std::span<const Var> v, std::size_t first, std::size_t heads) {
  return {v[first], v[first + 1], v[first + 2], v[first + 3], heads};
}

PointPredictorWeights predictor_from(std::span<const Var> v, std::size_t first) {
  PointPredictorWeights w;
  w.convs.push_back({v[first], v[first + 1], 1, 1});
  w.norms.emplace_back(v[first + 2], v[first + 3]);
  w.convs.push_back({v[first + 4], v[first + 5], 1, 1});
  return w;
}

std::vector<Case> make_cases(Sampler& s) {
  std::vector<Case> c;
  auto unary = [&](std::string name, Tensor x, Var (*op)(const Var&)) {
    c.push_back({std::move(name), {std::move(x)},
                 [op](Tape&, std::span<const Var> v) { return project(op(v[0])); }});
  };

  c.push_back({"matmul", {s.normal({3, 4}), s.normal({4, 5})},
               [](Tape&, std::span<const Var> v) { return project(matmul(v[0], v[1])); }});
  unary("transpose", s.normal({3, 4}), &transpose);
  c.push_back({"reshape", {s.normal({2, 6})},
               [](Tape&, std::span<const Var> v) { return project(reshape(v[0], {3, 4})); }});
  c.push_back({"concat_axis0", {s.normal({2, 3}), s.normal({1, 3})},
               [](Tape&, std::span<const Var> v) { return project(concat(v, 0)); }});
  c.push_back({"concat_axis1", {s.normal({2, 3}), s.normal({2, 2})},
               [](Tape&, std::span<const Var> v) { return project(concat(v, 1)); }});
  c.push_back({"slice", {s.normal({4, 5})},
               [](Tape&, std::span<const Var> v) { return project(slice(v[0], 1, 1, 4)); }});
  c.push_back({"broadcast", {s.normal({1, 3})},
               [](Tape&, std::span<const Var> v) { return project(broadcast(v[0], {4, 3})); }});
  c.push_back({"add", {s.normal({3, 4}), s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(add(v[0], v[1])); }});
  c.push_back({"sub", {s.normal({3, 4}), s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(sub(v[0], v[1])); }});
  c.push_back({"mul", {s.normal({3, 4}), s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(mul(v[0], v[1])); }});
  c.push_back({"div", {s.normal({3, 4}), s.uniform({3, 4}, 0.5, 2.0)},
               [](Tape&, std::span<const Var> v) { return project(div(v[0], v[1])); }});
  c.push_back({"mul_fanout", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(mul(v[0], v[0])); }});
  unary("neg", s.normal({3, 4}), &neg);
  c.push_back({"scale", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(scale(v[0], 2.5)); }});
  c.push_back({"add_scalar", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(add_scalar(v[0], -0.7)); }});
  unary("tanh", s.normal({3, 4}), &tanh);
  unary("relu", s.away_from({3, 4}, 0.0, 0.01), &relu);
  unary("exp", s.normal({3, 4}), &exp);
  unary("log", s.uniform({3, 4}, 0.5, 2.0), &log);
  unary("sqrt", s.uniform({3, 4}, 0.5, 2.0), &sqrt);
  unary("sigmoid", s.normal({3, 4}), &sigmoid);
  c.push_back({"clamp_min", {s.away_from({3, 4}, 0.3, 0.01)},
               [](Tape&, std::span<const Var> v) { return project(clamp_min(v[0], 0.3)); }});
  c.push_back({"sum", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return scale(sum(v[0]), 1.3); }});
  c.push_back({"sum_axis0", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(sum(v[0], 0)); }});
  c.push_back({"sum_axis1", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(sum(v[0], 1)); }});
  c.push_back({"mean", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return scale(mean(v[0]), 1.3); }});
  c.push_back({"mean_axis0", {s.normal({3, 4})},
               [](Tape&, std::span<const Var> v) { return project(mean(v[0], 0)); }});
  unary("softmax_vector", s.normal({5}), &softmax);
  unary("softmax_rows", s.normal({3, 4}), &softmax);
  unary("log_softmax", s.normal({3, 4}), &log_softmax);
  c.push_back({"conv2d", {s.normal({2, 5, 5}), s.normal({3, 2, 3, 3}), s.normal({3})},
               [](Tape&, std::span<const Var> v) { return project(conv2d(v[0], v[1], v[2], 1, 1)); }});
  c.push_back({"conv2d_stride2", {s.normal({2, 5, 5}), s.normal({3, 2, 3, 3}), s.normal({3})},
               [](Tape&, std::span<const Var> v) { return project(conv2d(v[0], v[1], v[2], 2, 1)); }});

  c.push_back({"linear", {s.normal({3, 4}), s.normal({4, 5}), s.normal({5})},
               [](Tape&, std::span<const Var> v) { return project(nn::linear(v[0], v[1], v[2])); }});
  c.push_back({"layer_norm", {s.normal({3, 6}), s.normal({6}), s.normal({6})},
               [](Tape&, std::span<const Var> v) {
                 return project(nn::layer_norm(v[0], v[1], v[2]));
               }});
  unary("quick_gelu", s.normal({3, 4}), &nn::quick_gelu);
  c.push_back({"msa", {s.normal({5, 4}), s.normal({4, 12}, 0.5), s.normal({12}), s.normal({4, 4}), s.normal({4})},
               [](Tape&, std::span<const Var> v) { return project(nn::msa(v[0], msa_from(v, 1, 2))); }});
  c.push_back({"msa_single_token", {s.normal({1, 4}), s.normal({4, 12}), s.normal({12}), s.normal({4, 4}), s.normal({4})},
               [](Tape&, std::span<const Var> v) { return project(nn::msa(v[0], msa_from(v, 1, 2))); }});
  c.push_back({"mlp", {s.normal({3, 4}), s.normal({4, 16}), s.normal({16}), s.normal({16, 4}), s.normal({4})},
               [](Tape&, std::span<const Var> v) {
                 return project(nn::mlp(v[0], {v[1], v[2], v[3], v[4]}));
               }});
  c.push_back({"group_norm", {s.normal({3, 4, 4}), s.normal({3}), s.normal({3})},
               [](Tape&, std::span<const Var> v) { return project(nn::group_norm(v[0], v[1], v[2])); }});
  c.push_back({"global_avg_pool", {s.normal({3, 4, 4})},
               [](Tape&, std::span<const Var> v) { return project(nn::global_avg_pool(v[0])); }});

  const MaskParams mask;
  c.push_back({"mask", {s.uniform({2}, -0.9, 0.9)},
               [mask](Tape&, std::span<const Var> v) { return project(mask_on_tape(v[0], 4, 4, mask)); }});
  // Predictor over a 2x2 grid with d=8: convs 16->8 and 8->4.
  auto predictor_inputs = [&] {
    return std::vector<Tensor>{s.normal({5, 8}),          s.normal({5, 8}),
                               s.normal({8, 16, 3, 3}, 0.3), s.normal({8}),
                               s.uniform({8}, 0.5, 1.5),   s.normal({8}),
                               s.normal({4, 8, 3, 3}, 0.3), s.normal({4})};
  };
  c.push_back({"predict_points", predictor_inputs(), [](Tape&, std::span<const Var> v) {
                 auto [pt, pr] = predict_points(v[0], v[1], 2, 2, predictor_from(v, 2));
                 return add(project(pt), scale(project(pr), 0.5));
               }});
  for (MiVariant variant : {MiVariant::PoolConcat, MiVariant::ElementwiseAdd,
                            MiVariant::DirectConcat, MiVariant::AvgPoolNoAlign}) {
    AlignConfig cfg;
    cfg.mi_variant = variant;
    c.push_back({"align_pair_" + to_string(variant), predictor_inputs(),
                 [cfg](Tape&, std::span<const Var> v) {
                   const PairArtifacts a = align_pair(v[0], v[1], 2, 2, cfg, predictor_from(v, 2));
                   Var out = project(a.mi_t);
                   out = add(out, scale(project(a.mi_r), 0.7));
                   if (a.aligned_t.valid()) out = add(out, project(a.aligned_t));
                   return out;
                 }});
  }

  c.push_back({"cosine", {s.normal({1, 6}), s.normal({1, 6})},
               [](Tape&, std::span<const Var> v) { return cosine(v[0], v[1]); }});
  c.push_back({"similarity_loss", {s.normal({8})},
               [](Tape&, std::span<const Var> v) { return similarity_loss(v[0], 3, 0.1); }});
  c.push_back({"alignment_loss",
               {s.normal({1, 6}), s.normal({1, 6}), s.normal({1, 6}), s.normal({1, 6})},
               [](Tape& tape, std::span<const Var> v) {
                 return alignment_loss({{v[0], v[1]}, {v[2], v[3]}}, tape);
               }});
  c.push_back({"cosine_scores", {s.normal({6}), s.normal({4, 6})},
               [](Tape&, std::span<const Var> v) { return project(cosine_scores(v[0], v[1], 0.5)); }});
  return c;
}

}  // namespace

double gradient_error(const ScalarFn& f, std::span<const Tensor> inputs, double eps) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
  const Gradients g = tape.backward(f(tape, leaves));

  double diff2 = 0.0, an2 = 0.0, fd2 = 0.0;
  std::vector<Tensor> work(inputs.begin(), inputs.end());
  for (std::size_t k = 0; k < work.size(); ++k) {
    auto analytic = g[leaves[k]].data();
    for (std::size_t i = 0; i < work[k].size(); ++i) {
      const double x0 = inputs[k][i];
      work[k].mutable_data()[i] = x0 + eps;
      const double up = eval(f, work);
      work[k].mutable_data()[i] = x0 - eps;
      const double down = eval(f, work);
      work[k].mutable_data()[i] = x0;
      const double fd = (up - down) / (2.0 * eps);
      diff2 += (fd - analytic[i]) * (fd - analytic[i]);
      an2 += analytic[i] * analytic[i];
      fd2 += fd * fd;
    }
  }
  const double denom = std::sqrt(std::max(an2, fd2));
  return denom == 0.0 ? 0.0 : std::sqrt(diff2) / denom;
}

std::vector<GradCheckResult> check_ops(std::uint64_t seed) {
  Sampler s{SplitMix64(derive_seed(seed, 0x0F5))};
  std::vector<GradCheckResult> out;
  for (const auto& c : make_cases(s)) {
    const double err = gradient_error(c.fn, c.inputs);
    out.push_back({c.name, err, kOpTolerance, err < kOpTolerance});
  }
  return out;
}

ModelConfig gradcheck_model_config(const AlignConfig& align) {
  ModelConfig m;
  m.frames = 2;
  m.height = 8;
  m.width = 8;
  m.patch = 4;
  m.dim = 8;
  m.depth = 1;
  m.heads = 2;
  m.aligned_blocks = {1};
  m.align = align;
  m.num_classes = 4;
  m.temperature = 0.5;
  return m;
}

GradCheckResult check_model(std::uint64_t seed, const AlignConfig& align) {
  const ModelConfig cfg = gradcheck_model_config(align);
  IlaModel model(cfg, seed);
  Sampler s{SplitMix64(derive_seed(seed, 0xE2E))};
  // Fresh models start with a zero final predictor conv; redraw everything
  // so the alignment path carries gradient.
  std::vector<Tensor> inputs;
  for (ParamId p = 0; p < model.params().size(); ++p) {
    inputs.push_back(s.normal(model.params().value(p).shape(), 0.4));
  }
  const Tensor clip = s.uniform({cfg.frames, cfg.height, cfg.width, 3}, 0.0, 1.0);
  const std::size_t label = s.rng.below(cfg.num_classes);
  const LossConfig loss{0.5, 0.1};
  ScalarFn f = [&](Tape& tape, std::span<const Var> bound) {
    const ForwardResult r = model.forward(tape, bound, clip);
    return total_loss(similarity_loss(r.scores, label, loss.label_smoothing),
                      alignment_loss(r.mi_tokens, tape), loss.gamma);
  };
  const double err = gradient_error(f, inputs);
  return {"model_" + to_string(align.mi_variant) + "_" + to_string(align.strategy), err,
          kModelTolerance, err < kModelTolerance};
}

}  // namespace ila
