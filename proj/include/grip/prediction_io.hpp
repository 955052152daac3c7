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

#ifndef GRIP__PREDICTION_IO_HPP_
#define GRIP__PREDICTION_IO_HPP_

#include "grip/model.hpp"
#include "grip/scene.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace grip
{
/// Header: scene_id,agent_id,agent_type,step,pred_x,pred_y with step counted
/// from 1.
void write_predictions_csv(std::ostream & out, std::span<const PredictionResult> preds);

/// ApolloScape result layout: frame_id object_id object_type x y per line.
void write_submission(std::ostream & out, std::span<const PredictionResult> preds, std::span<const SceneClip> clips);

struct PredictionRow
{
  std::size_t line = 0;
  std::string scene_id;
  long agent_id = 0;
  AgentType type = AgentType::other;
  std::size_t step = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Throws DataError naming the line of the first malformed row, including an
/// unknown agent_type.
std::vector<PredictionRow> read_predictions_csv(std::istream & in);

/// Arranges rows in the scene and agent order of `truth`. Missing or extra
/// (scene, agent) ids, missing steps and type disagreements throw DataError
/// listing the offending ids.
std::vector<PredictionResult> match_predictions(std::span<const PredictionRow> rows, std::span<const SceneClip> truth);
}  // namespace grip

#endif  // GRIP__PREDICTION_IO_HPP_
