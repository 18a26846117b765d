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

// Central finite-difference checks of reverse-mode gradients.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ila/model.hpp"

namespace ila {

inline constexpr double kFiniteDiffStep = 1e-5;
inline constexpr double kOpTolerance = 1e-4;
inline constexpr double kModelTolerance = 1e-3;

/// f maps leaves (one per input tensor, in order) to a scalar.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

/// ||g_backward - g_fd|| / max(||g_backward||, ||g_fd||) over all inputs,
/// with g_fd[i] = (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). Zero when both
/// gradients vanish.
double gradient_error(const ScalarFn& f, std::span<const Tensor> inputs,
                      double eps = kFiniteDiffStep);

struct GradCheckResult {
  std::string name;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Every differentiable op, on random inputs drawn from `seed`. Inputs are
/// kept away from the kinks of relu/clamp so the difference quotient is valid.
std::vector<GradCheckResult> check_ops(std::uint64_t seed);

/// End-to-end: T=2, h=w=2, d=8, L=1, total loss with alignment, every
/// parameter perturbed. Parameters are redrawn at a scale that exercises
/// all nonlinearities.
ModelConfig gradcheck_model_config(const AlignConfig& align = {});
GradCheckResult check_model(std::uint64_t seed, const AlignConfig& align = {});

}  // namespace ila
