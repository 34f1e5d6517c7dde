// Copyright 2026 The slap-cpp Authors
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

namespace slap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SLAP_DEFINE_ERROR(Name)      \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  };

SLAP_DEFINE_ERROR(InvalidArgument)
SLAP_DEFINE_ERROR(IoError)
SLAP_DEFINE_ERROR(FormatError)
SLAP_DEFINE_ERROR(PlacementError)
SLAP_DEFINE_ERROR(EmptyCloud)
SLAP_DEFINE_ERROR(EmptyCrop)
SLAP_DEFINE_ERROR(TargetNotInP)
SLAP_DEFINE_ERROR(DatasetError)
SLAP_DEFINE_ERROR(NonFiniteLoss)
SLAP_DEFINE_ERROR(ToleranceExceeded)
SLAP_DEFINE_ERROR(ConfigError)
SLAP_DEFINE_ERROR(CheckpointMismatch)

#undef SLAP_DEFINE_ERROR

}  // namespace slap
