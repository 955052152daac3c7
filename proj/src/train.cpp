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

#include "grip/train.hpp"

#include "grip/adam.hpp"
#include "grip/error.hpp"
#include "grip/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace grip
{
FutureTargets make_targets(std::span<const SceneClip> clips)
{
  FutureTargets out;
  if (clips.empty()) return out;
  out.t_future = clips.front().t_future;
  for (const auto & c : clips) {
    if (c.t_future != out.t_future) {
      throw DataError("clip '" + c.scene_id + "' has t_future " + std::to_string(c.t_future) +
                      ", expected " + std::to_string(out.t_future));
    }
    const std::size_t th = c.t_history;
    for (std::size_t i = 0; i < c.num_agents(); ++i) {
      const bool anchored = c.observed(i, th - 1);
      out.types.push_back(c.agent_types[i]);
      for (std::size_t s = 0; s < c.t_future; ++s) {
        const auto p = c.position(i, th + s);
        out.positions.push_back(p.x);
        out.positions.push_back(p.y);
        out.mask.push_back(anchored && c.observed(i, th + s) ? 1 : 0);
      }
    }
  }
  return out;
}

LossReport trajectory_loss(
  std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask,
  std::size_t num_agents, std::size_t t_future)
{
  const std::size_t expected = num_agents * t_future;
  if (pred.size() != expected * 2 || gt.size() != expected * 2 || mask.size() != expected) {
    throw DimensionError("trajectory_loss: expected " + std::to_string(num_agents) + " x " +
                         std::to_string(t_future) + " x 2 inputs");
  }
  LossReport r;
  r.per_step.assign(t_future, 0.0);
  std::size_t valid_steps = 0;
  for (std::size_t s = 0; s < t_future; ++s) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < num_agents; ++i) {
      const std::size_t k = i * t_future + s;
      if (!mask[k]) continue;
      sum += std::hypot(pred[2 * k] - gt[2 * k], pred[2 * k + 1] - gt[2 * k + 1]);
      ++count;
    }
    if (count == 0) continue;
    r.per_step[s] = sum / static_cast<double>(count);
    r.total += r.per_step[s];
    ++valid_steps;
  }
  if (valid_steps) r.total /= static_cast<double>(valid_steps);
  for (std::size_t i = 0; i < num_agents; ++i) {
    for (std::size_t s = 0; s < t_future; ++s) {
      if (mask[i * t_future + s]) {
        ++r.masked_agent_count;
        break;
      }
    }
  }
  return r;
}

Tensor trajectory_loss(Tape & tape, const Tensor & pred, const FutureTargets & targets)
{
  const std::size_t tf = targets.t_future;
  const std::size_t n = targets.types.size();
  if (pred.shape() != Shape{n, tf, 2}) {
    throw DimensionError("trajectory_loss: prediction " + shape_to_string(pred.shape()) + " vs targets " +
                         shape_to_string({n, tf, 2}));
  }
  std::vector<std::size_t> count(tf, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < tf; ++s) count[s] += targets.mask[i * tf + s];
  }
  const auto valid_steps = static_cast<double>(std::count_if(count.begin(), count.end(), [](auto c) { return c > 0; }));
  std::vector<double> weights(n * tf, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < tf; ++s) {
      if (targets.mask[i * tf + s]) weights[i * tf + s] = 1.0 / (valid_steps * static_cast<double>(count[s]));
    }
  }
  const Tensor gt({n, tf, 2}, targets.positions);
  return tape.weighted_sum(tape.row_norm(tape.sub(pred, gt)), weights);
}

double weighted_class_sum(const ClassValues & v)
{
  return kWeightVehicle * v.vehicle.value_or(0.0) + kWeightPedestrian * v.pedestrian.value_or(0.0) +
         kWeightBicycle * v.bicycle.value_or(0.0);
}

// ---------------------------------------------------------------------------

MetricsAccumulator::MetricsAccumulator(std::size_t t_future, double frame_rate)
: t_future_(t_future), frame_rate_(frame_rate), squared_(t_future, 0.0), counts_(t_future, 0)
{
  if (!(frame_rate > 0.0)) throw ParameterError("metrics: frame_rate must be > 0");
}

void MetricsAccumulator::add(
  std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask,
  std::span<const AgentType> types)
{
  const std::size_t n = types.size();
  if (t_future_ == 0 && n > 0) {
    t_future_ = mask.size() / n;
    squared_.assign(t_future_, 0.0);
    counts_.assign(t_future_, 0);
  }
  const std::size_t tf = t_future_;
  if (pred.size() != n * tf * 2 || gt.size() != n * tf * 2 || mask.size() != n * tf) {
    throw DimensionError("metrics: prediction, truth and mask shapes disagree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto & cls = classes_[static_cast<std::size_t>(agent_class(types[i]))];
    bool any = false;
    for (std::size_t s = 0; s < tf; ++s) {
      const std::size_t k = i * tf + s;
      if (!mask[k]) continue;
      any = true;
      const double dx = pred[2 * k] - gt[2 * k], dy = pred[2 * k + 1] - gt[2 * k + 1];
      const double d2 = dx * dx + dy * dy, d = std::sqrt(d2);
      squared_[s] += d2;
      ++counts_[s];
      for (Sums * sums : {&cls, &all_}) {
        sums->displacement += d;
        ++sums->points;
        if (s + 1 == tf) {
          sums->final_displacement += d;
          ++sums->finals;
        }
      }
    }
    agents_ += any ? 1 : 0;
  }
}

void MetricsAccumulator::add(const PredictionResult & pred, const SceneClip & truth)
{
  if (pred.agent_ids != truth.agent_ids) {
    throw DataError("metrics: agent ids of scene '" + truth.scene_id + "' differ between prediction and truth");
  }
  const std::vector<SceneClip> one{truth};
  const FutureTargets t = make_targets(one);
  if (pred.t_future != t.t_future) {
    throw DimensionError("metrics: scene '" + truth.scene_id + "' predicts " + std::to_string(pred.t_future) +
                         " steps, truth has " + std::to_string(t.t_future));
  }
  add(pred.positions, t.positions, t.mask, t.types);
}

MetricsReport MetricsAccumulator::report() const
{
  MetricsReport r;
  r.frame_rate = frame_rate_;
  r.agent_count = agents_;
  r.rmse_per_step.resize(t_future_, 0.0);
  for (std::size_t s = 0; s < t_future_; ++s) {
    if (counts_[s]) r.rmse_per_step[s] = std::sqrt(squared_[s] / static_cast<double>(counts_[s]));
  }
  for (std::size_t h = 1;; ++h) {
    const auto step = static_cast<std::size_t>(std::llround(static_cast<double>(h) * frame_rate_));
    if (step == 0 || step > t_future_) break;
    r.rmse_per_horizon.push_back(r.rmse_per_step[step - 1]);
  }
  auto mean = [](double sum, std::size_t count) { return count ? sum / static_cast<double>(count) : 0.0; };
  r.ade = mean(all_.displacement, all_.points);
  r.fde = mean(all_.final_displacement, all_.finals);

  const std::array<std::pair<AgentClass, const char *>, 3> named{
    {{AgentClass::vehicle, "vehicle"}, {AgentClass::pedestrian, "pedestrian"}, {AgentClass::bicycle, "bicycle"}}};
  for (const auto & [cls, label] : named) {
    const Sums & s = classes_[static_cast<std::size_t>(cls)];
    std::optional<double> ade, fde;
    if (s.points) ade = mean(s.displacement, s.points);
    if (s.finals) fde = mean(s.final_displacement, s.finals);
    if (!s.points) {
      r.warnings.push_back(std::string("class '") + label +
                           "' absent from the evaluation set; excluded from WSADE/WSFDE (weights not renormalized)");
    }
    switch (cls) {
      case AgentClass::vehicle: r.ade_class.vehicle = ade; r.fde_class.vehicle = fde; break;
      case AgentClass::pedestrian: r.ade_class.pedestrian = ade; r.fde_class.pedestrian = fde; break;
      default: r.ade_class.bicycle = ade; r.fde_class.bicycle = fde; break;
    }
  }
  r.wsade = weighted_class_sum(r.ade_class);
  r.wsfde = weighted_class_sum(r.fde_class);
  return r;
}

MetricsReport evaluate(std::span<const PredictionResult> preds, std::span<const SceneClip> truth)
{
  if (preds.size() != truth.size()) throw DataError("metrics: prediction and truth scene counts differ");
  MetricsAccumulator acc(truth.empty() ? 0 : truth.front().t_future, truth.empty() ? 2.0 : truth.front().frame_rate);
  for (std::size_t i = 0; i < preds.size(); ++i) acc.add(preds[i], truth[i]);
  return acc.report();
}

nlohmann::json to_json(const MetricsReport & r)
{
  auto opt = [](const std::optional<double> & v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["frame_rate"] = r.frame_rate;
  j["rmse_per_step"] = r.rmse_per_step;
  j["rmse_per_horizon"] = r.rmse_per_horizon;
  j["ade"] = r.ade;
  j["fde"] = r.fde;
  j["ade_class"] = {{"vehicle", opt(r.ade_class.vehicle)}, {"pedestrian", opt(r.ade_class.pedestrian)},
                    {"bicycle", opt(r.ade_class.bicycle)}};
  j["fde_class"] = {{"vehicle", opt(r.fde_class.vehicle)}, {"pedestrian", opt(r.fde_class.pedestrian)},
                    {"bicycle", opt(r.fde_class.bicycle)}};
  j["weights"] = {{"vehicle", kWeightVehicle}, {"pedestrian", kWeightPedestrian}, {"bicycle", kWeightBicycle}};
  j["wsade"] = r.wsade;
  j["wsfde"] = r.wsfde;
  j["agent_count"] = r.agent_count;
  j["warnings"] = r.warnings;
  return j;
}

std::string metrics_csv(const MetricsReport & r)
{
  std::ostringstream out;
  out.precision(10);
  out << "metric,horizon_s,value\n";
  for (std::size_t h = 0; h < r.rmse_per_horizon.size(); ++h) out << "rmse," << h + 1 << ',' << r.rmse_per_horizon[h] << '\n';
  auto row = [&](const char * name, const std::optional<double> & v) {
    out << name << ",,";
    if (v) out << *v;
    else out << "absent";
    out << '\n';
  };
  row("ade_vehicle", r.ade_class.vehicle);
  row("ade_pedestrian", r.ade_class.pedestrian);
  row("ade_bicycle", r.ade_class.bicycle);
  row("fde_vehicle", r.fde_class.vehicle);
  row("fde_pedestrian", r.fde_class.pedestrian);
  row("fde_bicycle", r.fde_class.bicycle);
  out << "ade,," << r.ade << "\nfde,," << r.fde << "\nwsade,," << r.wsade << "\nwsfde,," << r.wsfde << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

PredictionResult cv_baseline(const SceneClip & clip, std::size_t k, std::size_t t_future)
{
  if (clip.t_history < 2) throw ParameterError("cv_baseline: t_history must be >= 2");
  if (k < 1) throw ParameterError("cv_baseline: k must be >= 1");
  const std::size_t th = clip.t_history, tf = t_future ? t_future : clip.t_future;
  PredictionResult r;
  r.scene_id = clip.scene_id;
  r.agent_ids = clip.agent_ids;
  r.agent_types = clip.agent_types;
  r.t_future = tf;
  for (std::size_t i = 0; i < clip.num_agents(); ++i) {
    // Steps with an unobserved endpoint count as zero velocity, matching the
    // model's velocity input.
    const std::size_t steps = std::min(k, th - 1);
    Vec2 v;
    for (std::size_t j = 0; j < steps; ++j) {
      const std::size_t t = th - 1 - j;
      if (!clip.observed(i, t) || !clip.observed(i, t - 1)) continue;
      v.x += clip.position(i, t).x - clip.position(i, t - 1).x;
      v.y += clip.position(i, t).y - clip.position(i, t - 1).y;
    }
    v.x /= static_cast<double>(steps);
    v.y /= static_cast<double>(steps);
    const Vec2 last = clip.position(i, th - 1);
    for (std::size_t s = 0; s < tf; ++s) {
      r.velocities.push_back(v.x);
      r.velocities.push_back(v.y);
      r.positions.push_back(last.x + v.x * static_cast<double>(s + 1));
      r.positions.push_back(last.y + v.y * static_cast<double>(s + 1));
    }
  }
  return r;
}

SceneClip rotate_clip(const SceneClip & clip, double theta, Vec2 center)
{
  SceneClip out = clip;
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t i = 0; i < clip.num_agents(); ++i) {
    for (std::size_t t = 0; t < clip.num_frames(); ++t) {
      const Vec2 p = clip.position(i, t);
      const double dx = p.x - center.x, dy = p.y - center.y;
      out.set_position(i, t, {center.x + c * dx - s * dy, center.y + s * dx + c * dy});
    }
  }
  return out;
}

std::vector<SceneClip> augment_rotate(std::span<const SceneClip> clips, Rng & rng)
{
  std::vector<SceneClip> out;
  out.reserve(clips.size());
  for (const auto & clip : clips) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(rotate_clip(clip, theta, last_history_centroid(clip)));
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate(const TrainConfig & config)
{
  if (config.batch_size < 1) throw ParameterError("training: batch_size must be >= 1");
  if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) throw ParameterError("training: lr must be finite and >= 0");
}

Evaluation evaluate_model(GripModel & model, std::span<const SceneClip> clips)
{
  Evaluation e;
  if (clips.empty()) return e;
  const auto preds = model.predict(clips);
  const FutureTargets t = make_targets(clips);
  std::vector<double> flat;
  flat.reserve(t.positions.size());
  for (const auto & p : preds) flat.insert(flat.end(), p.positions.begin(), p.positions.end());
  e.loss = trajectory_loss(flat, t.positions, t.mask, t.types.size(), t.t_future);
  MetricsAccumulator acc(t.t_future, clips.front().frame_rate);
  acc.add(flat, t.positions, t.mask, t.types);
  e.metrics = acc.report();
  return e;
}

TrainHistory train(
  GripModel & model, std::span<const SceneClip> train_clips, std::span<const SceneClip> val,
  const TrainConfig & config, const EpochCallback & callback)
{
  validate(config);
  if (train_clips.empty()) throw UsageError("train: empty training set");
  if (model.config().input_mode == InputMode::normalized_position) {
    const double m = max_abs_coordinate(train_clips);
    model.set_norm_scale(m > 0.0 ? m : 1.0);
  }

  const Rng root(config.seed, "train");
  const auto params = model.trainable_parameters();
  AdamState adam(params, AdamOptions{.lr = config.lr});
  for (const auto & p : params) p.zero_grad();

  TrainHistory history;
  ParameterSet best_state;
  bool have_best = false;
  std::vector<std::size_t> order(train_clips.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = root.derive("shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);
    Rng dropout = root.derive("dropout", epoch);
    Rng augment = root.derive("augment", epoch);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<SceneClip> batch_clips;
      batch_clips.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch_clips.push_back(train_clips[order[i]]);
      if (config.augment_rotate) batch_clips = augment_rotate(batch_clips, augment);

      const SceneBatch batch = make_batch(batch_clips, model.config(), model.norm_scale());
      const FutureTargets targets = make_targets(batch_clips);
      Tape tape;
      const ModelOutput out = model.forward(tape, batch, targets.t_future, Mode::train, dropout);
      const Tensor loss = trajectory_loss(tape, out.positions, targets);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::string scenes;
        for (const auto & c : batch_clips) scenes += (scenes.empty() ? "" : ", ") + c.scene_id;
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batches) + " (scenes: " + scenes + ")");
      }
      tape.backward(loss);
      adam_step(params, adam);
      for (const auto & p : params) p.zero_grad();
      loss_sum += value;
      ++batches;
      ++history.optimizer_steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    if (!val.empty()) {
      const Evaluation e = evaluate_model(model, val);
      rec.val_loss = e.loss.total;
      rec.val_wsade = e.metrics.wsade;
      rec.val_ade = e.metrics.ade;
    } else {
      rec.val_loss = rec.train_loss;
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back(rec);

    if (!have_best || rec.val_loss < history.best_val_loss) {
      have_best = true;
      history.best_val_loss = rec.val_loss;
      history.best_epoch = epoch;
      best_state = model.named_state();
    }
    if (callback && !callback(rec)) {
      history.stopped = true;
      break;
    }
  }
  if (have_best) model.load_state(best_state);
  return history;
}

std::string training_log_csv(const TrainHistory & history)
{
  std::ostringstream out;
  out.precision(10);
  out << "epoch,train_loss,val_loss,val_WSADE,wall_seconds\n";
  for (const auto & r : history.epochs) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_wsade << ',' << r.wall_seconds << '\n';
  }
  return out.str();
}
}  // namespace grip
