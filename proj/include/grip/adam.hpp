// Copyright 2026 The GRIP Engine Authors
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

#ifndef GRIP__ADAM_HPP_
#define GRIP__ADAM_HPP_

#include "grip/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace grip
{
struct AdamOptions
{
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState
{
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  AdamState(std::span<const Tensor> params, AdamOptions opts);
};

/// One bias-corrected Adam update of every parameter from its gradient slot.
/// A parameter without an allocated gradient is treated as having a zero one.
void adam_step(std::span<const Tensor> params, AdamState & state);
}  // namespace grip

#endif  // GRIP__ADAM_HPP_
