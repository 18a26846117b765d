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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ila/errors.hpp"
#include "ila/metrics.hpp"
#include "ila/train.hpp"
#include "test_util.hpp"

using namespace ila;
using ila::testing::random_tensor;

namespace {

double brute_force_matching(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost[i * n + perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double brute_force_emd(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.dim(0), d = a.dim(1);
  auto unit = [&](const Tensor& x, std::size_t r, std::size_t c) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += x.at(r, k) * x.at(r, k);
    return x.at(r, c) / std::sqrt(s);
  };
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += std::pow(unit(a, i, c) - unit(b, j, c), 2);
      cost[i * n + j] = std::sqrt(s);
    }
  return brute_force_matching(cost, n) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("top-k accuracy") {
  const std::vector<std::vector<double>> s{{0.9, 0.1, 0.0}, {0.2, 0.3, 0.5}, {0.1, 0.7, 0.2}};
  const std::size_t hit[] = {0, 2, 1};
  CHECK(topk_accuracy(s, hit, 1) == 1.0);
  const std::size_t one_right[] = {0, 0, 0};
  CHECK(topk_accuracy(s, one_right, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(topk_accuracy(s, one_right, 3) == 1.0);
  CHECK(topk_accuracy(s, one_right, 2) == doctest::Approx(1.0 / 3.0));
  const std::size_t second[] = {1, 1, 2};
  CHECK(topk_accuracy(s, second, 1) == 0.0);
  CHECK(topk_accuracy(s, second, 2) == 1.0);
  // Ties go to the lower class index.
  const std::vector<std::vector<double>> tie{{0.5, 0.5}};
  const std::size_t zero[] = {0}, one[] = {1};
  CHECK(topk_accuracy(tie, zero, 1) == 1.0);
  CHECK(topk_accuracy(tie, one, 1) == 0.0);
  CHECK_THROWS_AS(topk_accuracy(s, one_right, 0), BadK);
  CHECK_THROWS_AS(topk_accuracy(s, one_right, 4), BadK);
  const std::size_t bad[] = {0, 3, 0};
  CHECK_THROWS_AS(topk_accuracy(s, bad, 1), BadLabel);
  CHECK_THROWS_AS(topk_accuracy(s, zero, 1), SizeMismatch);
  CHECK_THROWS_AS(topk_accuracy({}, std::span<const std::size_t>{}, 1), EmptyDataset);
}

TEST_CASE("assignment solver equals brute force") {
  SplitMix64 rng(1);
  for (std::size_t n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> cost(n * n);
      for (double& c : cost) c = trial % 3 == 0 ? static_cast<double>(rng.below(4)) : rng.uniform();
      const auto match = solve_assignment(cost, n);
      std::vector<std::size_t> sorted = match;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += cost[i * n + match[i]];
      CHECK(std::abs(total - brute_force_matching(cost, n)) < 1e-9);
    }
  }
  CHECK(solve_assignment(std::vector<double>{}, 0).empty());
  CHECK_THROWS_AS(solve_assignment(std::vector<double>(3), 2), SizeMismatch);
}

TEST_CASE("emd hand values and brute force") {
  CHECK(emd_pair(Tensor({1, 2}, {0, 0}), Tensor({1, 2}, {3, 0}), false) == 3.0);
  const Tensor a = random_tensor({5, 4}, 1);
  CHECK(emd_pair(a, a) == 0.0);
  SplitMix64 rng(2);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 25; ++trial) {
      const Tensor x = random_tensor({n, 3}, rng), y = random_tensor({n, 3}, rng);
      CHECK(std::abs(emd_pair(x, y) - brute_force_emd(x, y)) < 1e-9);
    }
  }
  CHECK_THROWS_AS(emd_pair(Tensor({2, 3}), Tensor({3, 3})), SizeMismatch);
}

TEST_CASE("emd is a metric on random sets") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = random_tensor({6, 4}, rng), b = random_tensor({6, 4}, rng),
                 c = random_tensor({6, 4}, rng);
    const double ab = emd_pair(a, b), ba = emd_pair(b, a);
    CHECK(std::abs(ab - ba) < 1e-12);
    CHECK(ab > 0.0);
    CHECK(emd_pair(a, c) <= ab + emd_pair(b, c) + 1e-12);
  }
}

TEST_CASE("mi probe: identical frames give zero, values are non-negative") {
  RunConfig cfg;
  cfg.model.height = cfg.model.width = 16;
  cfg.model.depth = 1;
  cfg.model.dim = 16;
  cfg.model.aligned_blocks = {1};
  cfg.synth.shape_size = 4;
  cfg.synth.speed = 6;
  IlaModel model(cfg.model, 1);
  Dataset data = generate(cfg.task(), 4, 1);
  const EmdReport r = mi_probe(model, data, 1);
  REQUIRE(r.per_video.size() == 4);
  for (double v : r.per_video) CHECK(v >= 0.0);
  CHECK(r.mean > 0.0);

  Dataset constant = data;
  for (auto& s : constant.samples) {
    const std::size_t per = s.pixels.size() / data.frames;
    for (std::size_t t = 1; t < data.frames; ++t)
      std::copy_n(s.pixels.begin(), per, s.pixels.begin() + t * per);
  }
  const EmdReport z = mi_probe(model, constant, 1);
  CHECK(z.mean == 0.0);
  CHECK_THROWS_AS(mi_probe(model, Dataset{}, 1), EmptyDataset);
}

TEST_CASE("cost model hand counts") {
  CHECK(msa_macs(17, 16) == 26656.0);
  CostParams p;
  p.frames = 2;
  p.grid_h = 1;
  p.grid_w = 2;
  p.dim = 4;
  p.depth = 1;
  p.patch = 1;
  // embed 2*2*3*4 + head msa(2,4) + one block of two frames with hw+1 = 3 rows.
  const double embed = 48, head = msa_macs(2, 4);
  const double frame = msa_macs(3, 4) + 8 * 3 * 16;
  CHECK(flops_estimate(Scheme::SpatialOnly, p).macs == embed + head + 2 * frame);
  CHECK(flops_estimate(Scheme::SpatialOnly, p).flops == 2 * (embed + head + 2 * frame));
  CHECK(flops_estimate(Scheme::JointST, p).macs == embed + head + msa_macs(5, 4) + 8 * 5 * 16);

  const CostParams v = CostParams::vit_b32_8f();
  CHECK(asymptotic_cost(Scheme::SpatialOnly, v) == 8.0 * 49 * 49 * 768);
  CHECK(asymptotic_cost(Scheme::ILA, v) == 8.0 * 49 * 9 * 768 + 8.0 * 49 * 49 * 768);
  CHECK(asymptotic_cost(Scheme::JointST, v) == 64.0 * 49 * 49 * 768);
  CHECK(asymptotic_cost(Scheme::DividedST, v) == 64.0 * 49 * 768 + 8.0 * 49 * 49 * 768);

  const double spatial = flops_estimate(Scheme::SpatialOnly, v).flops;
  const double vit_frame = msa_macs(50, 768) + 8.0 * 50 * 768 * 768;
  CHECK(spatial == 2 * (8.0 * 49 * 3072 * 768 + msa_macs(8, 768) + 12 * 8 * vit_frame));
  CHECK(flops_estimate(Scheme::ILA, v).flops / spatial <= 1.15);

  CostParams bad = v;
  bad.dim = 0;
  CHECK_THROWS_AS(flops_estimate(Scheme::ILA, bad), BadParams);
  bad = v;
  bad.frames = -1;
  CHECK_THROWS_AS(asymptotic_cost(Scheme::ATA, bad), BadParams);
}

TEST_CASE("cost model is strictly monotone in T, h, w and d") {
  const CostParams base = CostParams::vit_b32_8f();
  for (Scheme s : all_schemes()) {
    for (double CostParams::*field : {&CostParams::frames, &CostParams::grid_h, &CostParams::grid_w,
                                      &CostParams::dim}) {
      CostParams up = base;
      up.*field += 1;
      CHECK(flops_estimate(s, up).macs > flops_estimate(s, base).macs);
      CHECK(asymptotic_cost(s, up) > asymptotic_cost(s, base));
    }
  }
}
