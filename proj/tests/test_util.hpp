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

// Shared helpers for the unit tests.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ila/rng.hpp"
#include "ila/tensor.hpp"

namespace ila::testing {

inline Tensor random_tensor(Shape shape, SplitMix64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = scale * rng.normal();
  return t;
}

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  SplitMix64 rng(seed);
  return random_tensor(std::move(shape), rng, scale);
}

inline bool all_close(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(std::abs(a[i] - b[i]) <= tol)) return false;
  }
  return true;
}

}  // namespace ila::testing
