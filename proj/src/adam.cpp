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

#include "grip/adam.hpp"

#include "grip/error.hpp"

#include <cmath>

namespace grip
{
AdamState::AdamState(std::span<const Tensor> params, AdamOptions opts) : options(opts)
{
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto & p : params) {
    first_moment.emplace_back(p.numel(), 0.0);
    second_moment.emplace_back(p.numel(), 0.0);
  }
}

void adam_step(std::span<const Tensor> params, AdamState & state)
{
  if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
    throw DimensionError(
      "adam_step: " + std::to_string(params.size()) + " parameters but state tracks " +
      std::to_string(state.first_moment.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].numel() || state.second_moment[k].size() != params[k].numel()) {
      throw DimensionError(
        "adam_step: moment size " + std::to_string(state.first_moment[k].size()) + " does not match parameter " +
        shape_to_string(params[k].shape()));
    }
  }

  ++state.step;
  const auto & o = state.options;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(o.beta1, t);
  const double bias2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k];
    auto values = p.values();
    const bool has_grad = p.has_grad();
    auto grad = p.grad();
    auto & m = state.first_moment[k];
    auto & v = state.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has_grad ? grad[i] : 0.0;
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      values[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}
}  // namespace grip
