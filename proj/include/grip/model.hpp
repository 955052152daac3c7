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

#ifndef GRIP__MODEL_HPP_
#define GRIP__MODEL_HPP_

#include "grip/checkpoint.hpp"
#include "grip/graph_conv.hpp"
#include "grip/preprocess.hpp"
#include "grip/scene.hpp"
#include "grip/seq2seq.hpp"
#include "grip/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace grip
{
class Rng;

struct ModelConfig
{
  GraphConvConfig graph;
  Seq2SeqConfig seq;
  std::size_t ensemble = 3;
  InputMode input_mode = InputMode::velocity;
  double d_close = 25.0;
  double alpha = kDefaultAlpha;
  std::size_t t_future = 6;

  bool operator==(const ModelConfig & o) const;
};

void validate(const ModelConfig & config);
nlohmann::json to_json(const ModelConfig & config);
ModelConfig model_config_from_json(const nlohmann::json & j);

/// Clips stacked along the agent axis, with their graphs.
struct SceneBatch
{
  Tensor values;  // N x t_h x 2
  InputMode mode = InputMode::velocity;
  double norm_scale = 1.0;
  std::vector<GraphStack> graphs;
  std::vector<std::size_t> offsets;  // B + 1 entries
  std::vector<Vec2> last_positions;  // N

  std::size_t num_agents() const { return values.dim(0); }
  std::size_t t_history() const { return values.dim(1); }
  BatchLayout layout() const { return {graphs, offsets}; }
};

SceneBatch make_batch(std::span<const SceneClip> clips, const ModelConfig & config, double norm_scale);

struct ModelOutput
{
  Tensor positions;                    // N x t_f x 2, ensemble average reconstructed to positions
  Tensor averaged;                     // N x t_f x 2, ensemble mean in the input space
  std::vector<Tensor> member_outputs;  // K x (N x t_f x 2)
};

struct PredictionResult
{
  std::string scene_id;
  std::vector<long> agent_ids;
  std::vector<AgentType> agent_types;
  std::size_t t_future = 0;
  std::vector<double> velocities;  // n x t_f x 2
  std::vector<double> positions;   // n x t_f x 2
  std::vector<std::vector<double>> member_velocities;  // K x (n x t_f x 2), optional

  std::size_t num_agents() const noexcept { return agent_ids.size(); }
  Vec2 position(std::size_t agent, std::size_t step) const;
  Vec2 velocity(std::size_t agent, std::size_t step) const;
};

/// GRIP++ instance: graph-conv trunk shared by K seq2seq members whose
/// outputs are averaged.
class GripModel
{
public:
  explicit GripModel(ModelConfig config, std::uint64_t seed = 1);

  static GripModel from_checkpoint(const Checkpoint & checkpoint);
  static GripModel load(const std::filesystem::path & path);
  void save(const std::filesystem::path & path, const nlohmann::json & extra = {}) const;

  const ModelConfig & config() const noexcept { return config_; }
  double norm_scale() const noexcept { return norm_scale_; }
  void set_norm_scale(double scale);

  GraphConvParams & graph_params() noexcept { return graph_; }
  std::vector<Seq2SeqParams> & members() noexcept { return members_; }

  /// Tensors the optimizer updates.
  std::vector<Tensor> trainable_parameters() const;
  /// Every tensor of the model state (including batch-norm running
  /// statistics) under a stable name.
  ParameterSet named_state() const;
  void load_state(const ParameterSet & state);

  ModelOutput forward(Tape & tape, const SceneBatch & batch, std::size_t t_future, Mode mode, Rng & rng);

  /// Eval-mode prediction. t_future = 0 uses the configured horizon.
  std::vector<PredictionResult> predict(std::span<const SceneClip> clips, std::size_t t_future = 0, bool keep_members = false);

private:
  ModelConfig config_;
  double norm_scale_ = 1.0;
  GraphConvParams graph_;
  std::vector<Seq2SeqParams> members_;
};
}  // namespace grip

#endif  // GRIP__MODEL_HPP_
