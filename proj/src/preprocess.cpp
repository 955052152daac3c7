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

#include "grip/preprocess.hpp"

#include "grip/error.hpp"

#include <cmath>

namespace grip
{
std::string_view to_string(InputMode mode) noexcept
{
  return mode == InputMode::velocity ? "velocity" : "normalized_position";
}

namespace
{
ModelInput history_frame(const SceneClip & clip, InputMode mode)
{
  if (clip.t_history < 2) throw ParameterError("clip '" + clip.scene_id + "' has t_history < 2");
  const std::size_t n = clip.num_agents(), th = clip.t_history;
  ModelInput in;
  in.mode = mode;
  in.values = Tensor::zeros({n, th, 2});
  in.mask.assign(n * th, 0);
  in.last_positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    in.last_positions[i] = clip.position(i, th - 1);
    for (std::size_t t = 0; t < th; ++t) in.mask[i * th + t] = clip.observed(i, t) ? 1 : 0;
  }
  return in;
}
}  // namespace

ModelInput to_velocity(const SceneClip & clip)
{
  ModelInput in = history_frame(clip, InputMode::velocity);
  const std::size_t n = clip.num_agents(), th = clip.t_history;
  auto v = in.values.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 1; t < th; ++t) {
      if (!clip.observed(i, t) || !clip.observed(i, t - 1)) continue;
      const auto a = clip.position(i, t - 1);
      const auto b = clip.position(i, t);
      v[(i * th + t) * 2] = b.x - a.x;
      v[(i * th + t) * 2 + 1] = b.y - a.y;
    }
  }
  return in;
}

ModelInput to_normalized_position(const SceneClip & clip, double max_abs)
{
  if (!(max_abs > 0.0)) throw ParameterError("to_normalized_position: max_abs must be > 0");
  ModelInput in = history_frame(clip, InputMode::normalized_position);
  in.norm_scale = max_abs;
  const std::size_t n = clip.num_agents(), th = clip.t_history;
  auto v = in.values.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < th; ++t) {
      if (!clip.observed(i, t)) continue;
      const auto p = clip.position(i, t);
      v[(i * th + t) * 2] = p.x / max_abs;
      v[(i * th + t) * 2 + 1] = p.y / max_abs;
    }
  }
  return in;
}

ModelInput make_input(const SceneClip & clip, InputMode mode, double max_abs)
{
  return mode == InputMode::velocity ? to_velocity(clip) : to_normalized_position(clip, max_abs);
}

double max_abs_coordinate(std::span<const SceneClip> clips)
{
  double m = 0.0;
  for (const auto & c : clips) {
    for (std::size_t i = 0; i < c.num_agents(); ++i) {
      for (std::size_t t = 0; t < c.t_history; ++t) {
        if (!c.observed(i, t)) continue;
        const auto p = c.position(i, t);
        m = std::max({m, std::abs(p.x), std::abs(p.y)});
      }
    }
  }
  return m;
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd & a, double alpha)
{
  if (a.rows() != a.cols()) throw DimensionError("normalize_adjacency: matrix must be square");
  const Eigen::VectorXd inv_sqrt = (a.rowwise().sum().array() + alpha).rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

GraphStack build_graphs(const SceneClip & clip, double d_close, double alpha)
{
  if (!(d_close >= 0.0)) throw ParameterError("build_graphs: d_close must be >= 0");
  const auto n = static_cast<Eigen::Index>(clip.num_agents());
  GraphStack g;
  g.num_agents = clip.num_agents();
  g.d_close = d_close;
  g.alpha = alpha;
  g.a0 = Eigen::MatrixXd::Identity(n, n);
  g.g0 = normalize_adjacency(g.a0, alpha);
  g.a1.reserve(clip.t_history);
  g.g1.reserve(clip.t_history);
  for (std::size_t t = 0; t < clip.t_history; ++t) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (!clip.observed(ui, t)) continue;
      const auto pi = clip.position(ui, t);
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (!clip.observed(uj, t)) continue;
        const auto pj = clip.position(uj, t);
        if (std::hypot(pi.x - pj.x, pi.y - pj.y) < d_close) {
          a(i, j) = 1.0;
          a(j, i) = 1.0;
        }
      }
    }
    g.g1.push_back(normalize_adjacency(a, alpha));
    g.a1.push_back(std::move(a));
  }
  return g;
}
}  // namespace grip
