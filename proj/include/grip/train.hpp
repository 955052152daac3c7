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

#ifndef GRIP__TRAIN_HPP_
#define GRIP__TRAIN_HPP_

#include "grip/model.hpp"
#include "grip/scene.hpp"
#include "grip/tensor.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grip
{
class Rng;

/// Ground-truth future of a batch, aligned with SceneBatch rows.
struct FutureTargets
{
  std::size_t t_future = 0;
  std::vector<double> positions;    // N x t_f x 2
  std::vector<std::uint8_t> mask;   // N x t_f
  std::vector<AgentType> types;     // N
};

/// An entry counts when the agent is observed at that future frame and at
/// the last history frame (the prediction anchor).
FutureTargets make_targets(std::span<const SceneClip> clips);

struct LossReport
{
  double total = 0.0;
  std::vector<double> per_step;
  std::size_t masked_agent_count = 0;  // agents with at least one counted step
};

/// Mean over steps of the mean Euclidean error over counted agents. Steps with
/// no counted agent are left out of the outer mean.
LossReport trajectory_loss(
  std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask,
  std::size_t num_agents, std::size_t t_future);

/// Differentiable form of trajectory_loss on a tape. pred is N x t_f x 2.
Tensor trajectory_loss(Tape & tape, const Tensor & pred, const FutureTargets & targets);

inline constexpr double kWeightVehicle = 0.20;
inline constexpr double kWeightPedestrian = 0.58;
inline constexpr double kWeightBicycle = 0.22;

struct ClassValues
{
  std::optional<double> vehicle;
  std::optional<double> pedestrian;
  std::optional<double> bicycle;
};

/// 0.20 v + 0.58 p + 0.22 b over the present classes; absent ones contribute
/// nothing and the weights are not renormalized.
double weighted_class_sum(const ClassValues & values);

struct MetricsReport
{
  double frame_rate = 2.0;
  std::vector<double> rmse_per_step;
  std::vector<double> rmse_per_horizon;  // one per whole future second
  double ade = 0.0;                      // all agents
  double fde = 0.0;
  ClassValues ade_class;
  ClassValues fde_class;
  double wsade = 0.0;
  double wsfde = 0.0;
  std::size_t agent_count = 0;
  std::vector<std::string> warnings;
};

class MetricsAccumulator
{
public:
  explicit MetricsAccumulator(std::size_t t_future = 0, double frame_rate = 2.0);

  void add(
    std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask,
    std::span<const AgentType> types);
  void add(const PredictionResult & pred, const SceneClip & truth);

  MetricsReport report() const;

private:
  struct Sums
  {
    double displacement = 0.0;
    std::size_t points = 0;
    double final_displacement = 0.0;
    std::size_t finals = 0;
  };

  std::size_t t_future_;
  double frame_rate_;
  std::vector<double> squared_;
  std::vector<std::size_t> counts_;
  std::array<Sums, 4> classes_{};
  Sums all_{};
  std::size_t agents_ = 0;
};

MetricsReport evaluate(std::span<const PredictionResult> preds, std::span<const SceneClip> truth);

nlohmann::json to_json(const MetricsReport & report);
/// Per-horizon table: horizon_s, rmse, then the displacement summary rows.
std::string metrics_csv(const MetricsReport & report);

/// Extrapolates each agent with its last observed velocity, or the mean of
/// the last k valid history velocities.
PredictionResult cv_baseline(const SceneClip & clip, std::size_t k = 1, std::size_t t_future = 0);

/// Rotates every position of the clip by theta about `center`. Velocities,
/// future displacements and pairwise distances transform isometrically.
SceneClip rotate_clip(const SceneClip & clip, double theta, Vec2 center);
/// One theta ~ U[0, 2pi) per clip, about its last-history centroid.
std::vector<SceneClip> augment_rotate(std::span<const SceneClip> clips, Rng & rng);

struct TrainConfig
{
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  bool augment_rotate = false;
  std::uint64_t seed = 1;
};

void validate(const TrainConfig & config);

struct EpochRecord
{
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_wsade = 0.0;
  double val_ade = 0.0;
  double wall_seconds = 0.0;
};

struct TrainHistory
{
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t optimizer_steps = 0;
  bool stopped = false;
};

/// Returning false ends training after the current epoch.
using EpochCallback = std::function<bool(const EpochRecord &)>;

/// Mini-batch Adam. When `val` is empty the train loss selects the best
/// epoch. The best epoch's state is loaded back into the model at the end.
TrainHistory train(
  GripModel & model, std::span<const SceneClip> train_clips, std::span<const SceneClip> val,
  const TrainConfig & config, const EpochCallback & callback = {});

/// Eval-mode loss and metrics of the model on the clips.
struct Evaluation
{
  LossReport loss;
  MetricsReport metrics;
};

Evaluation evaluate_model(GripModel & model, std::span<const SceneClip> clips);

std::string training_log_csv(const TrainHistory & history);
}  // namespace grip

#endif  // GRIP__TRAIN_HPP_
