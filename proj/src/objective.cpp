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

#include "ila/objective.hpp"

#include <cmath>
#include <numbers>

#include "ila/errors.hpp"

namespace ila {

void LossConfig::validate() const {
  if (!(gamma >= 0.0)) throw InvalidParams("gamma must be non-negative");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw InvalidParams("label smoothing must lie in [0, 1)");
  }
}

Var similarity_loss(const Var& scores, std::size_t label, double label_smoothing) {
  if (scores.shape().size() != 1) throw ShapeMismatch("scores " + to_string(scores.shape()));
  const std::size_t k = scores.shape()[0];
  if (label >= k) {
    throw BadLabel("label " + std::to_string(label) + " with " + std::to_string(k) + " classes");
  }
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw InvalidParams("label smoothing must lie in [0, 1)");
  }
  Tensor target({k});
  auto y = target.mutable_data();
  const double off = k > 1 ? label_smoothing / static_cast<double>(k - 1) : 0.0;
  for (std::size_t i = 0; i < k; ++i) y[i] = i == label ? 1.0 - label_smoothing : off;
  Var logp = log_softmax(scores);
  return neg(sum(mul(logp, scores.tape()->constant(target))));
}

Var cosine(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch("cosine of " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  Var dot = sum(mul(a, b));
  // One sqrt of the product: for a == b this is exactly dot, so cos(a, a) == 1.
  Var norms = sqrt(mul(sum(mul(a, a)), sum(mul(b, b))));
  return div(dot, clamp_min(norms, kCosineEps));
}

Var alignment_loss(const std::vector<std::vector<Var>>& mi_tokens, Tape& tape) {
  std::vector<Var> terms;
  for (const auto& block : mi_tokens) {
    for (std::size_t t = 1; t < block.size(); ++t) terms.push_back(cosine(block[t], block[t - 1]));
  }
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return neg(total);
}

Var total_loss(const Var& sim, const Var& align, double gamma) {
  if (!(gamma >= 0.0)) throw InvalidParams("gamma must be non-negative");
  return add(sim, scale(align, gamma));
}

double learning_rate(const OptimizerConfig& cfg, std::size_t step) {
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
    return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (cfg.total_steps <= cfg.warmup_steps) return cfg.lr;
  const double progress =
      std::min(1.0, static_cast<double>(step - cfg.warmup_steps) /
                        static_cast<double>(cfg.total_steps - cfg.warmup_steps));
  return cfg.min_lr +
         0.5 * (cfg.lr - cfg.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

double AdamW::step(ParameterSet& params, std::span<const Tensor> grads) {
  if (grads.size() != params.size()) {
    throw ShapeMismatch(std::to_string(grads.size()) + " gradients for " +
                        std::to_string(params.size()) + " parameters");
  }
  if (m_.empty()) {
    for (ParamId id = 0; id < params.size(); ++id) {
      m_.emplace_back(params.value(id).size(), 0.0);
      v_.emplace_back(params.value(id).size(), 0.0);
    }
  }
  const double lr = learning_rate(cfg_, t_);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (ParamId id = 0; id < params.size(); ++id) {
    Tensor& p = params.value(id);
    if (grads[id].shape() != p.shape()) {
      throw ShapeMismatch("gradient " + to_string(grads[id].shape()) + " for parameter '" +
                          params.name(id) + "' " + to_string(p.shape()));
    }
    const double decay = p.rank() >= 2 ? cfg_.weight_decay : 0.0;
    auto w = p.mutable_data();
    auto g = grads[id].data();
    auto& m = m_[id];
    auto& v = v_[id];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
      w[i] -= lr * (update + decay * w[i]);
    }
  }
  return lr;
}

}  // namespace ila
