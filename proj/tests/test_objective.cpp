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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ila/errors.hpp"
#include "ila/gradcheck.hpp"
#include "ila/objective.hpp"
#include "ila/train.hpp"
#include "test_util.hpp"

using namespace ila;
using ila::testing::random_tensor;

namespace {

double sim(std::initializer_list<double> scores, std::size_t label, double eps) {
  Tape tape;
  Tensor s({scores.size()}, scores);
  return similarity_loss(tape.constant(s), label, eps).value().item();
}

double align_of(const std::vector<std::vector<Tensor>>& tokens) {
  Tape tape;
  std::vector<std::vector<Var>> vars;
  for (const auto& block : tokens) {
    vars.emplace_back();
    for (const Tensor& t : block) vars.back().push_back(tape.constant(t));
  }
  return alignment_loss(vars, tape).value().item();
}

RunConfig tiny_run() {
  RunConfig cfg;
  cfg.model.frames = 4;
  cfg.model.height = cfg.model.width = 16;
  cfg.model.patch = 8;
  cfg.model.dim = 16;
  cfg.model.depth = 1;
  cfg.model.heads = 2;
  cfg.model.aligned_blocks = {1};
  cfg.synth.shape_size = 4;
  cfg.synth.speed = 6;
  cfg.batch = 4;
  cfg.optim.total_steps = 10;
  cfg.optim.warmup_steps = 2;
  cfg.log_every = 1;
  return cfg;
}

}  // namespace

TEST_CASE("similarity loss hand values") {
  CHECK(std::abs(sim({0, 0}, 0, 0.0) - std::numbers::ln2) < 1e-15);
  CHECK(sim({30, 0}, 0, 0.0) < 1e-12);
  const double expected = 0.9 * std::log1p(std::exp(-1.0)) + 0.1 * std::log1p(std::exp(1.0));
  CHECK(std::abs(sim({1, 0}, 0, 0.1) - expected) < 1e-14);
  CHECK(std::abs(expected - 0.41326) < 1e-5);
  CHECK_THROWS_AS(sim({1, 0}, 2, 0.0), BadLabel);
  CHECK_THROWS_AS(sim({1, 0}, 0, 1.0), InvalidParams);
}

TEST_CASE("alignment loss hand values") {
  const Tensor a({1, 2}, {0.3, -0.2});
  CHECK(std::abs(align_of({{a, a, a}, {a, a, a}}) + 4.0) < 1e-14);
  const Tensor x({1, 2}, {1, 0}), y({1, 2}, {0, 1}), z({1, 2}, {1, 1});
  CHECK(std::abs(align_of({{x, y, x}})) < 1e-15);
  CHECK(std::abs(align_of({{x, z}}) + 0.70710678118654752) < 1e-15);
  Tape tape;
  CHECK(alignment_loss({}, tape).value().item() == 0.0);
}

TEST_CASE("alignment loss stays within its bound") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t A = 1 + rng.below(4), T = 2 + rng.below(5), d = 1 + rng.below(6);
    std::vector<std::vector<Tensor>> tokens(A);
    for (auto& block : tokens)
      for (std::size_t t = 0; t < T; ++t) block.push_back(random_tensor({1, d}, rng));
    const double l = align_of(tokens), bound = static_cast<double>(A * (T - 1));
    CHECK(l >= -bound - 1e-12);
    CHECK(l <= bound + 1e-12);
  }
}

TEST_CASE("alignment loss gradient and d(total)/d(gamma)") {
  SplitMix64 rng(4);
  std::vector<Tensor> inputs;
  for (int i = 0; i < 6; ++i) inputs.push_back(random_tensor({1, 5}, rng));
  ScalarFn f = [](Tape& tape, std::span<const Var> in) {
    return alignment_loss({{in[0], in[1], in[2]}, {in[3], in[4], in[5]}}, tape);
  };
  CHECK(gradient_error(f, inputs) < 1e-4);

  Tape tape;
  const Var s = tape.constant(Tensor::scalar(0.5));
  const Var a = tape.constant(Tensor::scalar(-4.0));
  CHECK(std::abs(total_loss(s, a, 0.1).value().item() - 0.1) < 1e-15);
  CHECK(total_loss(s, a, 0.0).value().item() == 0.5);
  const double h = 1e-3, g0 = 0.3;
  const double fd = (total_loss(s, a, g0 + h).value().item() - total_loss(s, a, g0 - h).value().item()) / (2 * h);
  CHECK(std::abs(fd - (-4.0)) < 1e-9);
  const double l1 = total_loss(s, a, 1.0).value().item(), l2 = total_loss(s, a, 2.0).value().item(),
               l3 = total_loss(s, a, 3.0).value().item();
  CHECK(std::abs((l3 - l2) - (l2 - l1)) < 1e-12);
  CHECK_THROWS_AS(total_loss(s, a, -0.1), InvalidParams);
}

TEST_CASE("learning-rate schedule") {
  OptimizerConfig c;
  c.lr = 1e-3;
  c.min_lr = 1e-5;
  c.warmup_steps = 100;
  c.total_steps = 1100;
  CHECK(learning_rate(c, 0) == 0.0);
  CHECK(learning_rate(c, 50) == doctest::Approx(5e-4));
  CHECK(learning_rate(c, 100) == 1e-3);
  CHECK(learning_rate(c, 600) == doctest::Approx(0.5 * (1e-3 + 1e-5)));
  CHECK(learning_rate(c, 1100) == doctest::Approx(1e-5));
  for (std::size_t s = 101; s < 1100; ++s) CHECK(learning_rate(c, s) <= learning_rate(c, s - 1));
}

TEST_CASE("AdamW steps") {
  OptimizerConfig c;
  c.lr = 0.1;
  c.warmup_steps = 0;
  c.total_steps = 1;
  c.weight_decay = 0.0;
  ParameterSet p;
  p.add("w", Tensor::scalar(1.0));
  AdamW opt(c);
  const Tensor g[] = {Tensor::scalar(1.0)};
  opt.step(p, g);
  CHECK(std::abs(p.value(0).item() - (1.0 - 0.1 / (1.0 + 1e-8))) < 1e-12);

  ParameterSet q;
  q.add("m", Tensor({2, 2}, {1, 2, 3, 4}));
  AdamW zero(c);
  const Tensor z[] = {Tensor({2, 2})};
  zero.step(q, z);
  CHECK(q.value(0)[3] == 4.0);

  // Decay only touches matrices.
  OptimizerConfig d = c;
  d.weight_decay = 0.5;
  ParameterSet r;
  r.add("m", Tensor({1, 1}, {2.0}));
  r.add("b", Tensor({1}, {2.0}));
  AdamW decay(d);
  const Tensor zz[] = {Tensor({1, 1}), Tensor({1})};
  decay.step(r, zz);
  CHECK(r.value(0)[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
  CHECK(r.value(1)[0] == 2.0);
  const Tensor wrong[] = {Tensor({3})};
  CHECK_THROWS_AS(AdamW(c).step(p, wrong), ShapeMismatch);
}

TEST_CASE("training is bit-identical across runs and thread counts") {
  RunConfig cfg = tiny_run();
  const Dataset data = generate(cfg.task(), 16, 1);
  auto run = [&](std::size_t threads) {
    RunConfig c = cfg;
    c.threads = threads;
    IlaModel m(c.model, c.seed);
    const TrainReport r = train(m, c, data);
    return r.log;
  };
  const auto a = run(1), b = run(1), c = run(3);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].total == b[i].total);
    CHECK(a[i].total == c[i].total);
    CHECK(a[i].align == c[i].align);
  }
  CHECK(a.front().lr == 0.0);
}

TEST_CASE("gamma 0 without alignment is the plain baseline") {
  RunConfig cfg = tiny_run();
  cfg.loss.gamma = 0.0;
  cfg.model.align.mi_variant = MiVariant::None;
  const Dataset data = generate(cfg.task(), 8, 1);
  IlaModel m(cfg.model, cfg.seed);
  for (const StepRecord& r : train(m, cfg, data).log) {
    CHECK(r.align == 0.0);
    CHECK(r.total == r.sim);
  }
}

TEST_CASE("training lowers the loss on its own data") {
  RunConfig cfg = tiny_run();
  cfg.optim.total_steps = 40;
  const Dataset data = generate(cfg.task(), 16, 1);
  IlaModel m(cfg.model, cfg.seed);
  auto mean_loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      s += sample_loss(m, data.clip(i), data.samples[i].label, cfg.loss, nullptr).total;
    }
    return s / static_cast<double>(data.size());
  };
  const double before = mean_loss();
  train(m, cfg, data);
  CHECK(mean_loss() < before);
}
