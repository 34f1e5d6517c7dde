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


// Finite-difference verification of analytic parameter gradients.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slap/nn.hpp"

namespace slap {

struct GradCheckOptions {
  double step = 1e-4;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  /// Entries checked per parameter tensor (seeded choice); 0 checks all.
  std::size_t max_entries_per_parameter = 0;
  std::uint64_t seed = 0;
  /// Test hook run on the analytic gradients before comparison.
  std::function<void(nn::ParameterStore&)> corrupt;
};

struct GradCheckReport {
  std::string module;
  std::size_t entries_checked = 0;
  double max_relative_error = 0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0;
  double worst_numeric = 0;
  bool passed = false;
};

using LossBuilder = std::function<ad::Var(ad::Tape&)>;

/// Compares the gradient of `loss` w.r.t. every parameter in `store` against
/// central differences. Never throws on a mismatch.
GradCheckReport check_gradients(nn::ParameterStore& store, const LossBuilder& loss, double tolerance,
                                const GradCheckOptions& options = {});

/// Registered module names.
std::vector<std::string> grad_check_modules();

/// Runs the registered instance of `module` with `instance_size` points or
/// tokens. Returns the report; see grad_check for the throwing form.
GradCheckReport run_grad_check(const std::string& module, int instance_size, double tolerance = 1e-3,
                               const GradCheckOptions& options = {});

/// As run_grad_check, throwing ToleranceExceeded naming the worst parameter.
GradCheckReport grad_check(const std::string& module, int instance_size, double tolerance = 1e-3,
                           const GradCheckOptions& options = {});

}  // namespace slap
