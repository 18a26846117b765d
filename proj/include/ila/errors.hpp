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

#include <stdexcept>
#include <string>

namespace ila {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ILA_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

ILA_DEFINE_ERROR(ShapeMismatch);
ILA_DEFINE_ERROR(NonFinite);
ILA_DEFINE_ERROR(NotScalar);
ILA_DEFINE_ERROR(InvalidParams);
ILA_DEFINE_ERROR(BadIndex);
ILA_DEFINE_ERROR(TooFewFrames);
ILA_DEFINE_ERROR(ZeroVector);
ILA_DEFINE_ERROR(BadLabel);
ILA_DEFINE_ERROR(SizeMismatch);
ILA_DEFINE_ERROR(EmptyDataset);
ILA_DEFINE_ERROR(BadParams);
ILA_DEFINE_ERROR(BadK);
ILA_DEFINE_ERROR(InfeasibleSpec);
ILA_DEFINE_ERROR(CorruptFile);
ILA_DEFINE_ERROR(ConfigError);

#undef ILA_DEFINE_ERROR

}  // namespace ila
