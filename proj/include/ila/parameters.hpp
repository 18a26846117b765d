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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ila/tape.hpp"

namespace ila {

using ParamId = std::size_t;

/// Ordered collection of named parameter tensors.
class ParameterSet {
 public:
  ParamId add(std::string name, Tensor init);

  std::size_t size() const { return values_.size(); }
  std::size_t scalar_count() const;
  const std::string& name(ParamId id) const { return names_.at(id); }
  const Tensor& value(ParamId id) const { return values_.at(id); }
  Tensor& value(ParamId id) { return values_.at(id); }
  std::optional<ParamId> find(const std::string& name) const;

  /// Places every parameter on `tape` as a leaf, in id order.
  std::vector<Var> bind(Tape& tape, bool requires_grad) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// Checkpoint layout (little-endian):
///   "ILAC" | u32 version=1 | u32 meta_len | meta bytes (key=value text)
///   | u32 count | count x { u32 name_len | name | u32 rank | u32 dims[rank]
///   | f64 data[numel] }
struct Checkpoint {
  std::string metadata;
  ParameterSet params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CorruptFile on bad magic, version or length.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ila
