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

#include "ila/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ila/errors.hpp"

namespace ila {

double topk_accuracy(const std::vector<std::vector<double>>& scores,
                     std::span<const std::size_t> labels, std::size_t k) {
  if (scores.size() != labels.size()) {
    throw SizeMismatch(std::to_string(scores.size()) + " score rows for " +
                       std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw EmptyDataset("no predictions to score");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    const auto& row = scores[r];
    if (k == 0 || k > row.size()) {
      throw BadK("k=" + std::to_string(k) + " with " + std::to_string(row.size()) + " classes");
    }
    const std::size_t y = labels[r];
    if (y >= row.size()) throw BadLabel("label " + std::to_string(y) + " out of range");
    std::size_t rank = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] > row[y] || (row[c] == row[y] && c < y)) ++rank;
    }
    if (rank < k) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw SizeMismatch("cost matrix is not n x n");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials u (rows), v (columns); way[] stores the augmenting tree.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

namespace {

std::vector<double> normalized_rows(const Tensor& x, bool normalize) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<double> out(x.data().begin(), x.data().end());
  if (!normalize) return out;
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += out[r * d + c] * out[r * d + c];
    const double norm = std::sqrt(s);
    if (norm == 0.0) continue;
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] /= norm;
  }
  return out;
}

}  // namespace

double emd_pair(const Tensor& a, const Tensor& b, bool normalize) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape() != b.shape()) {
    throw SizeMismatch("token sets " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  const std::size_t n = a.dim(0), d = a.dim(1);
  const auto pa = normalized_rows(a, normalize);
  const auto pb = normalized_rows(b, normalize);
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = pa[i * d + c] - pb[j * d + c];
        s += diff * diff;
      }
      cost[i * n + j] = std::sqrt(s);
    }
  }
  const auto match = solve_assignment(cost, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + match[i]];
  return total / static_cast<double>(n);
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::SpatialOnly: return "SpatialOnly";
    case Scheme::JointST: return "JointST";
    case Scheme::DividedST: return "DividedST";
    case Scheme::ATA: return "ATA";
    case Scheme::FrameLevel: return "FrameLevel";
    case Scheme::ILA: return "ILA";
  }
  return "?";
}

const std::vector<Scheme>& all_schemes() {
  static const std::vector<Scheme> kAll{Scheme::SpatialOnly, Scheme::JointST, Scheme::DividedST,
                                        Scheme::ATA,         Scheme::FrameLevel, Scheme::ILA};
  return kAll;
}

void CostParams::validate() const {
  for (double v : {frames, grid_h, grid_w, dim, kernel, depth, patch, mlp_ratio}) {
    if (!(v > 0.0)) throw BadParams("cost-model parameters must be positive");
  }
  if (align_hidden < 0.0) throw BadParams("align_hidden must be non-negative");
}

double msa_macs(double n, double d) { return 4.0 * n * d * d + 2.0 * n * n * d; }

double asymptotic_cost(Scheme scheme, const CostParams& p) {
  p.validate();
  const double T = p.frames, hw = p.grid_h * p.grid_w, d = p.dim, k = p.kernel;
  const double spatial = T * hw * hw * d;
  switch (scheme) {
    case Scheme::SpatialOnly: return spatial;
    case Scheme::JointST: return T * T * hw * hw * d;
    case Scheme::DividedST: return T * T * hw * d + spatial;
    case Scheme::ATA: return T * hw * hw * hw * d + T * T * hw * d + spatial;
    case Scheme::FrameLevel: return T * T * d + spatial;
    case Scheme::ILA: return T * hw * k * k * d + spatial;
  }
  return 0.0;
}

CostReport flops_estimate(Scheme scheme, const CostParams& p) {
  p.validate();
  const double T = p.frames, hw = p.grid_h * p.grid_w, d = p.dim, L = p.depth;
  auto mlp_rows = [&](double rows) { return 2.0 * p.mlp_ratio * rows * d * d; };

  const double embed = T * hw * (3.0 * p.patch * p.patch) * d;
  const double head = msa_macs(T, d);
  const double spatial_frame = msa_macs(hw + 1, d) + mlp_rows(hw + 1);

  double blocks = 0.0;
  switch (scheme) {
    case Scheme::SpatialOnly:
      blocks = L * T * spatial_frame;
      break;
    case Scheme::JointST:
      blocks = L * (msa_macs(T * hw + 1, d) + mlp_rows(T * hw + 1));
      break;
    case Scheme::DividedST:
      blocks = L * (T * spatial_frame + hw * msa_macs(T, d));
      break;
    case Scheme::ATA: {
      // Patch cost matrix plus the cubic matching for every adjacent pair.
      const double matching = (T - 1) * (hw * hw * d + hw * hw * hw);
      blocks = L * (T * spatial_frame + hw * msa_macs(T, d) + matching);
      break;
    }
    case Scheme::FrameLevel:
      // Per-frame message token: a d x d projection, cross-frame attention
      // over T messages, then one extra token in every spatial attention.
      blocks = L * (T * (msa_macs(hw + 2, d) + mlp_rows(hw + 1) + d * d) + msa_macs(T, d));
      break;
    case Scheme::ILA: {
      const double c = p.align_hidden > 0.0 ? p.align_hidden : std::max(8.0, std::floor(d / 16.0));
      const double kk = p.kernel * p.kernel;
      double conv = c * 2.0 * d * kk * hw + 4.0 * c * kk * hw;
      if (p.deep_conv) conv += 2.0 * c * c * kk * hw;
      // Mask weighting and pooling: one multiply-accumulate per token element each.
      const double masking = 2.0 * hw * d;
      blocks = L * T * (conv + masking + msa_macs(hw + 2, d) + mlp_rows(hw + 1));
      break;
    }
  }
  CostReport r{scheme, embed + head + blocks, 0.0, asymptotic_cost(scheme, p)};
  r.flops = 2.0 * r.macs;
  return r;
}

}  // namespace ila
