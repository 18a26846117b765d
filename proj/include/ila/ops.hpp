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

// Differentiable primitives. Every function records one node on the tape of
// its inputs. Shapes must match exactly; the only implicit expansion is the
// explicit `broadcast` op. Kinks (relu at 0, clamp_min at the bound, sqrt at
// 0) take subgradient 0.

#include <cstddef>
#include <span>
#include <vector>

#include "ila/tape.hpp"

namespace ila {

// Linear algebra and structure.
Var matmul(const Var& a, const Var& b);  // [m,k] x [k,n] -> [m,n]
Var transpose(const Var& x);             // rank 2
Var reshape(const Var& x, Shape shape);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);
/// Expands extents of size 1 to `shape`; ranks must agree.
Var broadcast(const Var& x, Shape shape);

// Elementwise, identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var neg(const Var& x);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double c);
Var tanh(const Var& x);
Var relu(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var sigmoid(const Var& x);
/// max(x, bound) elementwise.
Var clamp_min(const Var& x, double bound);

// Reductions.
Var sum(const Var& x);                    // -> scalar
Var sum(const Var& x, std::size_t axis);  // keeps the axis with extent 1
Var mean(const Var& x);
Var mean(const Var& x, std::size_t axis);

/// Softmax and log-softmax over the last axis (max-subtracted).
Var softmax(const Var& x);
Var log_softmax(const Var& x);

/// Cross-correlation of x [C,H,W] with w [O,C,k,k] plus bias b [O].
Var conv2d(const Var& x, const Var& w, const Var& b, std::size_t stride, std::size_t padding);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }

}  // namespace ila
