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

// Neural building blocks composed from the primitives in ops.hpp.
// None of these add a residual; callers own the skip connections.

#include <cstddef>

#include "ila/ops.hpp"

namespace ila::nn {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr std::size_t kMlpRatio = 4;

/// x [N,in] * w [in,out] + b [out].
Var linear(const Var& x, const Var& w, const Var& b);

/// Per-row normalization of x [N,d] followed by gain/bias [d].
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = kLayerNormEps);

/// x * sigmoid(1.702 x).
Var quick_gelu(const Var& x);

struct MsaWeights {
  Var qkv_w;  // [d, 3d], columns ordered q | k | v, heads contiguous within each
  Var qkv_b;  // [3d]
  Var out_w;  // [d, d]
  Var out_b;  // [d]
  std::size_t heads = 1;
};

/// Multi-head self-attention over the rows of x [N,d], scale 1/sqrt(d/heads).
/// No positional term, so the map is permutation-equivariant in the rows.
Var msa(const Var& x, const MsaWeights& p);

struct MlpWeights {
  Var fc1_w;  // [d, 4d]
  Var fc1_b;
  Var fc2_w;  // [4d, d]
  Var fc2_b;
};

Var mlp(const Var& x, const MlpWeights& p);

struct ConvWeights {
  Var weight;  // [out, in, k, k], k odd
  Var bias;    // [out]
  std::size_t stride = 1;
  std::size_t padding = 1;
};

Var conv(const Var& x, const ConvWeights& p);

/// Single-group normalization of x [C,H,W] over all of its elements, with a
/// per-channel affine gain/bias [C].
Var group_norm(const Var& x, const Var& gain, const Var& bias, double eps = kLayerNormEps);

/// [C,H,W] -> [C].
Var global_avg_pool(const Var& x);

}  // namespace ila::nn
