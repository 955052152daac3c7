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

#ifndef GRIP__PREPROCESS_HPP_
#define GRIP__PREPROCESS_HPP_

#include "grip/scene.hpp"
#include "grip/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace grip
{
enum class InputMode { velocity, normalized_position };

std::string_view to_string(InputMode mode) noexcept;

inline constexpr double kDefaultAlpha = 0.001;

struct ModelInput
{
  Tensor values;                      // n x t_h x 2
  InputMode mode = InputMode::velocity;
  std::vector<Vec2> last_positions;   // p^(t_h) per agent
  std::vector<std::uint8_t> mask;     // n x t_h
  double norm_scale = 1.0;            // normalized_position only

  std::size_t num_agents() const { return values.dim(0); }
  std::size_t t_history() const { return values.dim(1); }
};

/// First differences along time, front-padded with a zero step. A step is
/// zero wherever either endpoint frame is unobserved.
ModelInput to_velocity(const SceneClip & clip);
/// Positions divided by `max_abs` (the largest absolute coordinate of the
/// training set). Unobserved frames stay zero.
ModelInput to_normalized_position(const SceneClip & clip, double max_abs);
ModelInput make_input(const SceneClip & clip, InputMode mode, double max_abs);

/// Largest absolute observed coordinate over the clips' history frames.
double max_abs_coordinate(std::span<const SceneClip> clips);

/// Lambda^{-1/2} A Lambda^{-1/2} with Lambda_ii = sum_k A_ik + alpha.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd & a, double alpha = kDefaultAlpha);

/// Per-frame fixed graphs of one clip's history.
struct GraphStack
{
  std::size_t num_agents = 0;
  double d_close = 25.0;
  double alpha = kDefaultAlpha;
  Eigen::MatrixXd a0;                  // identity
  Eigen::MatrixXd g0;                  // normalize_adjacency(a0)
  std::vector<Eigen::MatrixXd> a1;     // t_h spatial adjacencies
  std::vector<Eigen::MatrixXd> g1;     // normalized a1 per frame

  std::size_t t_history() const noexcept { return a1.size(); }
};

/// A1[t](i, j) = 1 iff i != j, both agents are observed at t and their
/// distance is strictly below d_close.
GraphStack build_graphs(const SceneClip & clip, double d_close, double alpha = kDefaultAlpha);
}  // namespace grip

#endif  // GRIP__PREPROCESS_HPP_
