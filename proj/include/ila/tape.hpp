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
#include <deque>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "ila/tensor.hpp"

namespace ila {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradients of a scalar with respect to every leaf that requires them.
class Gradients {
 public:
  bool contains(const Var& v) const;
  /// Throws BadIndex when `v` is not a gradient-carrying leaf.
  const Tensor& operator[](const Var& v) const;

 private:
  friend class Tape;
  std::vector<std::optional<Tensor>> grads_;
};

/// Given the gradient of an op's output, returns one gradient per input.
/// Entries for inputs with `needs[i] == false` may be left empty.
using BackwardFn =
    std::function<std::vector<Tensor>(const Tensor& grad_out, const std::vector<bool>& needs)>;

/// Append-only record of operations for reverse-mode differentiation.
///
/// Node ids increase in creation order, so every op's inputs precede it.
/// `backward` walks the nodes in exact reverse order and sums fan-out
/// contributions in that order, which makes repeated passes bit-identical.
/// A tape is single-threaded; use one tape per sample.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records the result of an op. Throws NonFinite if `value` holds NaN/Inf.
  Var record(const char* kind, Tensor value, const std::vector<Var>& inputs,
             BackwardFn backward);

  Gradients backward(const Var& loss) const;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::string_view kind(std::size_t id) const { return nodes_.at(id).kind; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    const char* kind = "leaf";
  };
  std::deque<Node> nodes_;
};

}  // namespace ila
