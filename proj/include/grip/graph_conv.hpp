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

#ifndef GRIP__GRAPH_CONV_HPP_
#define GRIP__GRAPH_CONV_HPP_

#include "grip/preprocess.hpp"
#include "grip/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace grip
{
class Rng;

struct GraphConvConfig
{
  std::size_t channels = 64;
  std::size_t num_blocks = 3;
  bool use_batch_norm = true;
  bool use_trainable_graph = true;
  /// Train a correction for the identity (temporal self) graph as well.
  bool train_self_graph = true;
  bool skip_connections = true;
  double dropout = 0.5;
  /// Agent capacity of the trainable graphs.
  std::size_t n_max = 120;
  BatchNormOptions batch_norm;
};

void validate(const GraphConvConfig & config);

struct GraphBlockParams
{
  Tensor g_train0;  // n_max x n_max, added to the normalized identity graph
  Tensor g_train1;  // n_max x n_max, added to the normalized spatial graph
  Tensor temporal_w;  // C x C x 3
  Tensor temporal_b;  // C
  Tensor bn_scale;
  Tensor bn_shift;
  BatchNormStats bn_stats;
};

struct GraphConvParams
{
  Tensor lift_w;  // C x 2
  Tensor lift_b;  // C
  std::vector<GraphBlockParams> blocks;
};

/// Trainable graphs start at zero so the untrained model is the pure
/// fixed-graph model; kernels use U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
GraphConvParams init_graph_conv(const GraphConvConfig & config, std::size_t in_channels, Rng & rng);

/// Scenes of a batch stacked along the agent axis; scene b owns rows
/// [offsets[b], offsets[b + 1]).
struct BatchLayout
{
  std::span<const GraphStack> graphs;
  std::span<const std::size_t> offsets;
};

Tensor channel_lift(Tape & tape, const Tensor & input, const GraphConvParams & params);

/// Per scene and time slice t:
///   f_graph[:, t, :] = sum_j (G_fixed^j[t] + G_train^j) * f_conv[:, t, :]
/// The trainable terms are dropped when `use_trainable` is false, and the
/// j = 0 trainable term when `train_self_graph` is false.
Tensor graph_operation(
  Tape & tape, const Tensor & f_conv, BatchLayout layout, const Tensor & g_train0, const Tensor & g_train1,
  bool use_trainable, bool train_self_graph = true);

/// channel lift, then num_blocks x [graph op -> temporal conv -> batch norm
/// -> relu -> dropout (+ block input)]. Output is n x t_h x C.
Tensor graph_conv_forward(
  Tape & tape, const Tensor & input, BatchLayout layout, GraphConvParams & params, const GraphConvConfig & config,
  Mode mode, Rng & rng);
}  // namespace grip

#endif  // GRIP__GRAPH_CONV_HPP_
