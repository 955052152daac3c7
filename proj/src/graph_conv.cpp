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

#include "grip/graph_conv.hpp"

#include "grip/error.hpp"
#include "grip/rng.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace grip
{
namespace
{
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::OuterStride<>;
using SliceMap = Eigen::Map<RowMat, 0, Strided>;
using ConstSliceMap = Eigen::Map<const RowMat, 0, Strided>;

Tensor uniform_tensor(Shape shape, double bound, Rng & rng)
{
  Tensor t(std::move(shape), true);
  for (auto & v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

// Rows [offset, offset + n) of x[N x T x C] at time t, as an n x C view.
ConstSliceMap slice(std::span<const double> x, std::size_t offset, std::size_t n, std::size_t t, std::size_t steps, std::size_t c)
{
  return ConstSliceMap(
    x.data() + (offset * steps + t) * c, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c),
    Strided(static_cast<Eigen::Index>(steps * c)));
}

SliceMap slice(std::span<double> x, std::size_t offset, std::size_t n, std::size_t t, std::size_t steps, std::size_t c)
{
  return SliceMap(
    x.data() + (offset * steps + t) * c, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c),
    Strided(static_cast<Eigen::Index>(steps * c)));
}
}  // namespace

void validate(const GraphConvConfig & config)
{
  if (config.channels < 1) throw ParameterError("graph conv: channels must be >= 1");
  if (config.num_blocks < 1) throw ParameterError("graph conv: num_blocks must be >= 1");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ParameterError("graph conv: dropout must lie in [0, 1)");
  if (config.n_max < 1) throw ParameterError("graph conv: n_max must be >= 1");
}

GraphConvParams init_graph_conv(const GraphConvConfig & config, std::size_t in_channels, Rng & rng)
{
  validate(config);
  const std::size_t c = config.channels;
  GraphConvParams p;
  const double lift_bound = 1.0 / std::sqrt(static_cast<double>(in_channels));
  p.lift_w = uniform_tensor({c, in_channels}, lift_bound, rng);
  p.lift_b = uniform_tensor({c}, lift_bound, rng);
  const double conv_bound = 1.0 / std::sqrt(static_cast<double>(3 * c));
  for (std::size_t b = 0; b < config.num_blocks; ++b) {
    GraphBlockParams blk;
    blk.g_train0 = Tensor::zeros({config.n_max, config.n_max}, config.use_trainable_graph && config.train_self_graph);
    blk.g_train1 = Tensor::zeros({config.n_max, config.n_max}, config.use_trainable_graph);
    blk.temporal_w = uniform_tensor({c, c, 3}, conv_bound, rng);
    blk.temporal_b = uniform_tensor({c}, conv_bound, rng);
    blk.bn_scale = Tensor::full({c}, 1.0, config.use_batch_norm);
    blk.bn_shift = Tensor::zeros({c}, config.use_batch_norm);
    blk.bn_stats = BatchNormStats(c);
    p.blocks.push_back(std::move(blk));
  }
  return p;
}

Tensor channel_lift(Tape & tape, const Tensor & input, const GraphConvParams & params)
{
  return tape.conv_channel_mix(input, params.lift_w, params.lift_b);
}

Tensor graph_operation(
  Tape & tape, const Tensor & f_conv, BatchLayout layout, const Tensor & g_train0, const Tensor & g_train1,
  bool use_trainable, bool train_self_graph)
{
  if (f_conv.rank() != 3) {
    throw DimensionError("graph_operation: features must be n x t x C, got " + shape_to_string(f_conv.shape()));
  }
  const std::size_t total = f_conv.dim(0), steps = f_conv.dim(1), c = f_conv.dim(2);
  if (layout.offsets.size() != layout.graphs.size() + 1 || layout.offsets.back() != total) {
    throw DimensionError("graph_operation: batch layout does not cover " + std::to_string(total) + " agents");
  }
  const bool use_self = use_trainable && train_self_graph;
  std::size_t n_max = 0;
  if (use_trainable) {
    n_max = g_train1.dim(0);
    if (g_train1.dim(1) != n_max || (use_self && g_train0.shape() != g_train1.shape())) {
      throw DimensionError("graph_operation: trainable graphs must be square and equal in shape");
    }
  }

  // Per scene and frame, the combined operator M = G0 + G1[t] (+ trainable).
  auto ops = std::make_shared<std::vector<Eigen::MatrixXd>>();
  for (std::size_t b = 0; b < layout.graphs.size(); ++b) {
    const auto & g = layout.graphs[b];
    const std::size_t n = layout.offsets[b + 1] - layout.offsets[b];
    if (g.num_agents != n || g.t_history() != steps) {
      throw DimensionError(
        "graph_operation: scene " + std::to_string(b) + " graphs are " + std::to_string(g.num_agents) + " agents x " +
        std::to_string(g.t_history()) + " frames, features are " + std::to_string(n) + " x " + std::to_string(steps));
    }
    if (use_trainable && n > n_max) {
      throw CapacityError(
        "scene with " + std::to_string(n) + " agents exceeds the trainable-graph capacity n_max=" + std::to_string(n_max));
    }
    Eigen::MatrixXd trained = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    if (use_trainable) {
      const Eigen::Map<const RowMat> t1(g_train1.values().data(), static_cast<Eigen::Index>(n_max), static_cast<Eigen::Index>(n_max));
      trained += t1.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      if (use_self) {
        const Eigen::Map<const RowMat> t0(g_train0.values().data(), static_cast<Eigen::Index>(n_max), static_cast<Eigen::Index>(n_max));
        trained += t0.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      }
    }
    for (std::size_t t = 0; t < steps; ++t) ops->push_back(g.g0 + g.g1[t] + trained);
  }

  Tensor y(f_conv.shape());
  {
    auto fv = f_conv.values();
    auto yv = y.values();
    for (std::size_t b = 0; b < layout.graphs.size(); ++b) {
      const std::size_t off = layout.offsets[b], n = layout.offsets[b + 1] - off;
      for (std::size_t t = 0; t < steps; ++t) {
        slice(yv, off, n, t, steps, c).noalias() = (*ops)[b * steps + t] * slice(fv, off, n, t, steps, c);
      }
    }
  }

  std::vector<Tensor> inputs{f_conv};
  if (use_trainable) {
    inputs.push_back(g_train1);
    if (use_self) inputs.push_back(g_train0);
  }
  std::vector<std::size_t> offsets(layout.offsets.begin(), layout.offsets.end());
  return tape.record(
    "graph_operation", std::move(inputs), y,
    [f_conv, y, ops, offsets, g_train0, g_train1, use_trainable, use_self, steps, c, n_max]() {
      auto g = y.grad();
      auto fv = f_conv.values();
      const bool want_f = f_conv.requires_grad();
      const bool want_t1 = use_trainable && g_train1.requires_grad();
      const bool want_t0 = use_self && g_train0.requires_grad();
      for (std::size_t b = 0; b + 1 < offsets.size(); ++b) {
        const std::size_t off = offsets[b], n = offsets[b + 1] - off;
        const auto ni = static_cast<Eigen::Index>(n);
        Eigen::MatrixXd dgraph = Eigen::MatrixXd::Zero(ni, ni);
        for (std::size_t t = 0; t < steps; ++t) {
          const auto G = slice(g, off, n, t, steps, c);
          if (want_f) slice(f_conv.grad_mut(), off, n, t, steps, c).noalias() += (*ops)[b * steps + t].transpose() * G;
          if (want_t0 || want_t1) dgraph.noalias() += G * slice(fv, off, n, t, steps, c).transpose();
        }
        const auto nm = static_cast<Eigen::Index>(n_max);
        if (want_t1) Eigen::Map<RowMat>(g_train1.grad_mut().data(), nm, nm).topLeftCorner(ni, ni) += dgraph;
        if (want_t0) Eigen::Map<RowMat>(g_train0.grad_mut().data(), nm, nm).topLeftCorner(ni, ni) += dgraph;
      }
    });
}

Tensor graph_conv_forward(
  Tape & tape, const Tensor & input, BatchLayout layout, GraphConvParams & params, const GraphConvConfig & config,
  Mode mode, Rng & rng)
{
  Tensor x = channel_lift(tape, input, params);
  for (auto & blk : params.blocks) {
    Tensor h = graph_operation(
      tape, x, layout, blk.g_train0, blk.g_train1, config.use_trainable_graph, config.train_self_graph);
    h = tape.conv_temporal(h, blk.temporal_w, blk.temporal_b, 1, 1);
    if (config.use_batch_norm) h = tape.batch_norm(h, blk.bn_scale, blk.bn_shift, blk.bn_stats, mode, config.batch_norm);
    h = tape.relu(h);
    h = tape.dropout(h, config.dropout, mode, rng);
    x = config.skip_connections ? tape.add(h, x) : h;
  }
  return x;
}
}  // namespace grip
