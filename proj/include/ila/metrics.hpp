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
#include <string>
#include <vector>

#include "ila/tensor.hpp"

namespace ila {

/// Fraction of rows whose label ranks among the k highest scores. Equal
/// scores are ordered by class index, lowest first.
double topk_accuracy(const std::vector<std::vector<double>>& scores,
                     std::span<const std::size_t> labels, std::size_t k);

/// Minimum-cost perfect matching on a square cost matrix (row-major n x n)
/// using the O(n^3) shortest-augmenting-path method with potentials.
/// Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

/// Exact earth mover's distance between two equal-size uniform point clouds
/// a, b [n, d] under the Euclidean ground metric: (1/n) * min-cost matching.
/// Rows are L2-normalized first unless `normalize` is false.
double emd_pair(const Tensor& a, const Tensor& b, bool normalize = true);

struct EmdReport {
  std::vector<double> per_video;  // mean adjacent-frame distance of each clip
  double mean = 0.0;
};

// ---------------------------------------------------------------------------
// Analytical cost model.

enum class Scheme { SpatialOnly, JointST, DividedST, ATA, FrameLevel, ILA };

std::string to_string(Scheme s);
const std::vector<Scheme>& all_schemes();

struct CostParams {
  double frames = 8;
  double grid_h = 7;
  double grid_w = 7;
  double dim = 768;
  double kernel = 3;
  double depth = 12;
  double patch = 32;
  double mlp_ratio = 4;
  /// Point-predictor hidden width; 0 selects max(8, d/16).
  double align_hidden = 0;
  bool deep_conv = false;

  /// ViT-B/32 on 8 frames of 224x224.
  static CostParams vit_b32_8f() { return {}; }
  void validate() const;
};

struct CostReport {
  Scheme scheme;
  double macs = 0.0;        // exact count of executed multiply-accumulates
  double flops = 0.0;       // 2 * macs
  double asymptotic = 0.0;  // leading-order complexity with unit constants
};

/// MACs of one attention layer over n tokens of width d: 4nd^2 + 2n^2 d.
double msa_macs(double n, double d);

/// Throws BadParams unless every parameter is positive.
CostReport flops_estimate(Scheme scheme, const CostParams& p);
double asymptotic_cost(Scheme scheme, const CostParams& p);

}  // namespace ila
