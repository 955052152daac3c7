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

#ifndef GRIP_TESTS__ORACLES_HPP_
#define GRIP_TESTS__ORACLES_HPP_

// Straight-loop reference implementations, kept free of Eigen and of the
// engine's own helpers so they can serve as independent oracles.

#include "grip/scene.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace grip::oracle
{
using Mat = std::vector<std::vector<double>>;

inline Mat identity(std::size_t n)
{
  Mat m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat normalize(const Mat & a, double alpha)
{
  const std::size_t n = a.size();
  std::vector<double> degree(n, alpha);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) degree[i] += a[i][k];
  }
  Mat out(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i][j] = a[i][j] / std::sqrt(degree[i]) / std::sqrt(degree[j]);
  }
  return out;
}

inline Mat spatial_adjacency(const SceneClip & clip, std::size_t t, double d_close)
{
  const std::size_t n = clip.num_agents();
  Mat a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !clip.observed(i, t) || !clip.observed(j, t)) continue;
      const Vec2 p = clip.position(i, t), q = clip.position(j, t);
      const double d = std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y));
      if (d < d_close) a[i][j] = 1.0;
    }
  }
  return a;
}

// f and the result are n x t_h x C; g_train0/1 are n_max x n_max row-major
// (empty to leave the term out).
inline std::vector<double> graph_operation(
  const std::vector<double> & f, const SceneClip & clip, std::size_t channels, double d_close, double alpha,
  const std::vector<double> & g_train0, const std::vector<double> & g_train1, std::size_t n_max)
{
  const std::size_t n = clip.num_agents(), th = clip.t_history;
  std::vector<double> out(n * th * channels, 0.0);
  const Mat g0 = normalize(identity(n), alpha);
  for (std::size_t t = 0; t < th; ++t) {
    const Mat g1 = normalize(spatial_adjacency(clip, t, d_close), alpha);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        double m = g0[i][k] + g1[i][k];
        if (!g_train0.empty()) m += g_train0[i * n_max + k];
        if (!g_train1.empty()) m += g_train1[i * n_max + k];
        for (std::size_t c = 0; c < channels; ++c) out[(i * th + t) * channels + c] += m * f[(k * th + t) * channels + c];
      }
    }
  }
  return out;
}

struct Loss
{
  double total = 0.0;
  std::vector<double> per_step;
};

// pred/gt are n x t_f x 2.
inline Loss loss(
  const std::vector<double> & pred, const std::vector<double> & gt, const std::vector<std::uint8_t> & mask, std::size_t n,
  std::size_t tf)
{
  Loss out;
  out.per_step.assign(tf, 0.0);
  std::size_t steps = 0;
  for (std::size_t s = 0; s < tf; ++s) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = i * tf + s;
      if (!mask[k]) continue;
      const double dx = pred[2 * k] - gt[2 * k], dy = pred[2 * k + 1] - gt[2 * k + 1];
      sum += std::sqrt(dx * dx + dy * dy);
      ++count;
    }
    if (!count) continue;
    out.per_step[s] = sum / static_cast<double>(count);
    out.total += out.per_step[s];
    ++steps;
  }
  if (steps) out.total /= static_cast<double>(steps);
  return out;
}

struct Metrics
{
  std::vector<double> rmse_per_step;
  double ade = 0.0;
  double fde = 0.0;
  std::map<AgentClass, double> ade_class;
  std::map<AgentClass, double> fde_class;
  double wsade = 0.0;
  double wsfde = 0.0;
};

inline Metrics metrics(
  const std::vector<double> & pred, const std::vector<double> & gt, const std::vector<std::uint8_t> & mask,
  const std::vector<AgentType> & types, std::size_t tf)
{
  const std::size_t n = types.size();
  Metrics out;
  auto dist = [&](std::size_t k) {
    const double dx = pred[2 * k] - gt[2 * k], dy = pred[2 * k + 1] - gt[2 * k + 1];
    return std::sqrt(dx * dx + dy * dy);
  };
  for (std::size_t s = 0; s < tf; ++s) {
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i * tf + s]) continue;
      sq += dist(i * tf + s) * dist(i * tf + s);
      ++count;
    }
    out.rmse_per_step.push_back(count ? std::sqrt(sq / static_cast<double>(count)) : 0.0);
  }
  std::map<AgentClass, std::pair<double, std::size_t>> ade, fde;
  std::pair<double, std::size_t> all_ade{0.0, 0}, all_fde{0.0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const AgentClass cls = agent_class(types[i]);
    for (std::size_t s = 0; s < tf; ++s) {
      if (!mask[i * tf + s]) continue;
      const double d = dist(i * tf + s);
      ade[cls].first += d;
      ade[cls].second += 1;
      all_ade.first += d;
      all_ade.second += 1;
      if (s + 1 == tf) {
        fde[cls].first += d;
        fde[cls].second += 1;
        all_fde.first += d;
        all_fde.second += 1;
      }
    }
  }
  auto mean = [](const std::pair<double, std::size_t> & p) { return p.second ? p.first / static_cast<double>(p.second) : 0.0; };
  out.ade = mean(all_ade);
  out.fde = mean(all_fde);
  const std::map<AgentClass, double> weight{
    {AgentClass::vehicle, 0.20}, {AgentClass::pedestrian, 0.58}, {AgentClass::bicycle, 0.22}};
  for (const auto & [cls, w] : weight) {
    if (ade.count(cls)) {
      out.ade_class[cls] = mean(ade[cls]);
      out.wsade += w * out.ade_class[cls];
    }
    if (fde.count(cls)) {
      out.fde_class[cls] = mean(fde[cls]);
      out.wsfde += w * out.fde_class[cls];
    }
  }
  return out;
}
}  // namespace grip::oracle

#endif  // GRIP_TESTS__ORACLES_HPP_
