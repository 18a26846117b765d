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

#include "ila/tape.hpp"

#include "ila/errors.hpp"

namespace ila {

const Tensor& Var::value() const {
  if (!tape_) throw BadIndex("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

bool Gradients::contains(const Var& v) const {
  return v.id() < grads_.size() && grads_[v.id()].has_value();
}

const Tensor& Gradients::operator[](const Var& v) const {
  if (!contains(v)) {
    throw BadIndex("no gradient recorded for node " + std::to_string(v.id()));
  }
  return *grads_[v.id()];
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, requires_grad, "leaf"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* kind, Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NonFinite(std::string(kind) + " produced a non-finite value");
  }
  Node node{std::move(value), {}, nullptr, false, kind};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape() != this) throw BadIndex(std::string(kind) + ": input from another tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || requires_grad(in.id());
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

namespace {

void accumulate(std::optional<Tensor>& slot, Tensor g) {
  if (!slot) {
    slot = std::move(g);
    return;
  }
  auto dst = slot->mutable_data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Gradients Tape::backward(const Var& loss) const {
  if (loss.tape() != this) throw BadIndex("loss belongs to another tape");
  const Node& root = nodes_.at(loss.id());
  if (root.value.size() != 1) {
    throw NotScalar("backward needs a scalar loss, got shape " +
                    to_string(root.value.shape()));
  }
  Gradients out;
  auto& grads = out.grads_;
  grads.resize(nodes_.size());
  if (!root.requires_grad) return out;
  grads[loss.id()] = Tensor::full(root.value.shape(), 1.0);

  std::vector<bool> needs;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward || !grads[i]) continue;
    needs.assign(node.inputs.size(), false);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      needs[k] = nodes_[node.inputs[k]].requires_grad;
    }
    std::vector<Tensor> in_grads = node.backward(*grads[i], needs);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      if (!needs[k]) continue;
      const std::size_t src = node.inputs[k];
      if (in_grads.at(k).shape() != nodes_[src].value.shape()) {
        throw ShapeMismatch(std::string(node.kind) + " backward returned " +
                            to_string(in_grads[k].shape()) + " for input " +
                            to_string(nodes_[src].value.shape()));
      }
      accumulate(grads[src], std::move(in_grads[k]));
    }
    // Interior gradients are no longer needed once propagated.
    if (!node.inputs.empty()) grads[i].reset();
  }
  // Leaves that require gradients but were not reached get zeros.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    if (node.inputs.empty() && node.requires_grad && !grads[i]) {
      grads[i] = Tensor::zeros(node.value.shape());
    }
  }
  return out;
}

}  // namespace ila
