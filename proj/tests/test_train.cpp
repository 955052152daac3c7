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

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include "grip/checkpoint.hpp"
#include "grip/error.hpp"
#include "grip/rng.hpp"
#include "grip/train.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace grip;
using grip::testing::random_clip;
using grip::testing::small_model_config;

namespace
{
struct Instance
{
  std::size_t n = 0, tf = 0;
  std::vector<double> pred, gt;
  std::vector<std::uint8_t> mask;
  std::vector<AgentType> types;
};

Instance random_instance(Rng & rng)
{
  Instance x;
  x.n = 1 + rng.index(5);
  x.tf = 1 + rng.index(4);
  for (std::size_t k = 0; k < x.n * x.tf; ++k) {
    x.mask.push_back(rng.uniform() < 0.8 ? 1 : 0);
    for (int d = 0; d < 2; ++d) {
      x.gt.push_back(rng.uniform(-20.0, 20.0));
      x.pred.push_back(x.gt.back() + rng.normal(0.0, 3.0));
    }
  }
  for (std::size_t i = 0; i < x.n; ++i) x.types.push_back(static_cast<AgentType>(rng.index(5)));
  return x;
}

std::vector<SceneClip> cv_clips(std::size_t count, std::uint64_t seed)
{
  SynthSpec spec;
  spec.scenes = count;
  spec.agents_min = spec.agents_max = 3;
  spec.t_history = 4;
  spec.t_future = 3;
  Rng rng(seed);
  return synth_scenes(spec, rng);
}

std::vector<std::vector<double>> snapshot(const GripModel & m)
{
  std::vector<std::vector<double>> out;
  for (const auto & t : m.trainable_parameters()) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}
}  // namespace

TEST_CASE("loss examples")
{
  const std::vector<double> zero2{0, 0};
  CHECK(trajectory_loss(zero2, zero2, std::vector<std::uint8_t>{1}, 1, 1).total == 0.0);
  CHECK(trajectory_loss(std::vector<double>{1, 1}, zero2, std::vector<std::uint8_t>{1}, 1, 1).total ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const auto r = trajectory_loss(std::vector<double>{3, 0, 0, 4}, std::vector<double>{0, 0, 0, 0}, std::vector<std::uint8_t>{1, 1}, 2, 1);
  CHECK(r.per_step[0] == 3.5);
  CHECK(r.masked_agent_count == 2);

  // An all-masked step is left out of the mean.
  const auto gap = trajectory_loss(std::vector<double>{1, 0, 5, 5}, std::vector<double>{0, 0, 0, 0}, std::vector<std::uint8_t>{1, 0}, 1, 2);
  CHECK(gap.total == 1.0);
  CHECK(gap.per_step[1] == 0.0);
  CHECK_THROWS_AS(trajectory_loss(zero2, zero2, std::vector<std::uint8_t>{1, 1}, 1, 1), DimensionError);
}

TEST_CASE("loss matches the loop oracle and both forms agree")
{
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    const Instance x = random_instance(rng);
    const LossReport got = trajectory_loss(x.pred, x.gt, x.mask, x.n, x.tf);
    const auto want = oracle::loss(x.pred, x.gt, x.mask, x.n, x.tf);
    CHECK(std::abs(got.total - want.total) < 1e-9);
    for (std::size_t s = 0; s < x.tf; ++s) CHECK(std::abs(got.per_step[s] - want.per_step[s]) < 1e-9);

    FutureTargets t;
    t.t_future = x.tf;
    t.positions = x.gt;
    t.mask = x.mask;
    t.types = x.types;
    Tape tape(false);
    CHECK(std::abs(trajectory_loss(tape, Tensor({x.n, x.tf, 2}, x.pred), t).item() - want.total) < 1e-9);

    // Rotating prediction and truth together leaves the loss unchanged.
    const double theta = rng.uniform(0.0, 6.3), c = std::cos(theta), s = std::sin(theta);
    Instance r = x;
    for (std::size_t k = 0; k < x.n * x.tf; ++k) {
      r.pred[2 * k] = c * x.pred[2 * k] - s * x.pred[2 * k + 1];
      r.pred[2 * k + 1] = s * x.pred[2 * k] + c * x.pred[2 * k + 1];
      r.gt[2 * k] = c * x.gt[2 * k] - s * x.gt[2 * k + 1];
      r.gt[2 * k + 1] = s * x.gt[2 * k] + c * x.gt[2 * k + 1];
    }
    CHECK(std::abs(trajectory_loss(r.pred, r.gt, r.mask, r.n, r.tf).total - got.total) < 1e-9);
  }
}

TEST_CASE("metrics examples")
{
  MetricsAccumulator acc(1, 2.0);
  const std::vector<AgentType> veh{AgentType::small_vehicle};
  acc.add(std::vector<double>{3, 4}, std::vector<double>{0, 0}, std::vector<std::uint8_t>{1}, veh);
  const auto r = acc.report();
  CHECK(r.rmse_per_step[0] == 5.0);
  CHECK(r.ade == 5.0);
  CHECK(r.fde == 5.0);
  CHECK(*r.ade_class.vehicle == 5.0);
  CHECK_FALSE(r.ade_class.pedestrian);
  CHECK(r.wsade == doctest::Approx(0.2 * 5.0));
  CHECK(r.warnings.size() == 2);

  MetricsAccumulator perfect(3, 2.0);
  perfect.add(std::vector<double>(6, 1.5), std::vector<double>(6, 1.5), std::vector<std::uint8_t>(3, 1), veh);
  const auto p = perfect.report();
  CHECK(p.ade == 0.0);
  CHECK(p.fde == 0.0);
  CHECK(p.wsade == 0.0);
  for (double v : p.rmse_per_step) CHECK(v == 0.0);
}

TEST_CASE("weighted sums over per-class errors")
{
  const ClassValues ade{2.2400, 0.7142, 1.8024};
  const ClassValues fde{4.0762, 1.3732, 3.4155};
  CHECK(std::round(weighted_class_sum(ade) * 1e4) / 1e4 == 1.2588);
  CHECK(std::round(weighted_class_sum(fde) * 1e4) / 1e4 == 2.3631);
  CHECK(weighted_class_sum({2.0, std::nullopt, std::nullopt}) == doctest::Approx(0.4));
}

TEST_CASE("metrics match the loop oracle")
{
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    const Instance x = random_instance(rng);
    MetricsAccumulator acc(x.tf, 2.0);
    acc.add(x.pred, x.gt, x.mask, x.types);
    const auto got = acc.report();
    const auto want = oracle::metrics(x.pred, x.gt, x.mask, x.types, x.tf);
    for (std::size_t s = 0; s < x.tf; ++s) CHECK(std::abs(got.rmse_per_step[s] - want.rmse_per_step[s]) < 1e-9);
    CHECK(std::abs(got.ade - want.ade) < 1e-9);
    CHECK(std::abs(got.fde - want.fde) < 1e-9);
    CHECK(std::abs(got.wsade - want.wsade) < 1e-9);
    CHECK(std::abs(got.wsfde - want.wsfde) < 1e-9);
    auto cmp = [&](const std::optional<double> & v, AgentClass cls, const std::map<AgentClass, double> & m) {
      CHECK(v.has_value() == (m.count(cls) == 1));
      if (v && m.count(cls)) CHECK(std::abs(*v - m.at(cls)) < 1e-9);
    };
    cmp(got.ade_class.vehicle, AgentClass::vehicle, want.ade_class);
    cmp(got.ade_class.pedestrian, AgentClass::pedestrian, want.ade_class);
    cmp(got.ade_class.bicycle, AgentClass::bicycle, want.ade_class);
    cmp(got.fde_class.vehicle, AgentClass::vehicle, want.fde_class);
    CHECK(got.ade >= 0.0);
    CHECK(got.fde >= 0.0);
  }
}

TEST_CASE("rmse per horizon second")
{
  MetricsAccumulator acc(6, 2.0);
  std::vector<double> pred(12, 0.0), gt(12, 0.0);
  for (std::size_t s = 0; s < 6; ++s) pred[2 * s] = static_cast<double>(s + 1);
  acc.add(pred, gt, std::vector<std::uint8_t>(6, 1), std::vector<AgentType>{AgentType::pedestrian});
  const auto r = acc.report();
  CHECK(r.rmse_per_horizon == std::vector<double>{2.0, 4.0, 6.0});
  CHECK(r.fde == 6.0);
  CHECK(r.ade == 3.5);
  CHECK(to_json(r)["wsade"] == doctest::Approx(0.58 * 3.5));
  CHECK(metrics_csv(r).find("rmse,2,4\n") != std::string::npos);
}

TEST_CASE("evaluation mask needs the last history frame")
{
  Rng rng(3);
  SceneClip c = random_clip(rng, 2, 3, 2);
  c.set_observed(1, 2, false);
  const auto t = make_targets(std::vector<SceneClip>{c});
  CHECK(t.mask == std::vector<std::uint8_t>{1, 1, 0, 0});
}

TEST_CASE("cv baseline")
{
  SceneClip c;
  c.t_history = 2;
  c.t_future = 2;
  c.resize(2);
  c.agent_ids = {1, 2};
  c.set_position(0, 0, {4, 5});
  c.set_position(0, 1, {5, 5});
  c.set_position(1, 0, {2, 2});
  c.set_position(1, 1, {2, 2});
  for (std::size_t i = 0; i < 2; ++i) {
    c.set_observed(i, 0, true);
    c.set_observed(i, 1, true);
  }
  const auto r = cv_baseline(c);
  CHECK(r.position(0, 0).x == 6.0);
  CHECK(r.position(0, 0).y == 5.0);
  CHECK(r.position(0, 1).x == 7.0);
  CHECK(r.position(1, 1).x == 2.0);
  CHECK(r.position(1, 1).y == 2.0);
  CHECK(cv_baseline(c, 1, 5).t_future == 5);

  SceneClip k = c;
  k.t_history = 3;
  k.t_future = 1;
  k.resize(1);
  k.agent_ids = {1};
  const Vec2 pts[] = {{0, 0}, {1, 0}, {4, 0}, {9, 9}};
  for (std::size_t t = 0; t < 4; ++t) {
    k.set_position(0, t, pts[t]);
    k.set_observed(0, t, true);
  }
  CHECK(cv_baseline(k, 2).position(0, 0).x == 6.0);
  CHECK(cv_baseline(k, 5).position(0, 0).x == 6.0);
  CHECK_THROWS_AS(cv_baseline(k, 0), ParameterError);
}

TEST_CASE("augment_rotate")
{
  Rng rng(4);
  const SceneClip c = random_clip(rng, 3, 4, 2);
  const Vec2 center = last_history_centroid(c);
  const SceneClip same = rotate_clip(c, 0.0, center);
  for (std::size_t k = 0; k < c.positions.size(); ++k) CHECK(std::abs(same.positions[k] - c.positions[k]) < 1e-9);

  const SceneClip flipped = rotate_clip(c, std::numbers::pi, center);
  const ModelInput a = to_velocity(c), b = to_velocity(flipped);
  for (std::size_t k = 0; k < a.values.numel(); ++k) CHECK(std::abs(a.values.values()[k] + b.values.values()[k]) < 1e-9);

  Rng theta_rng(5);
  const auto rotated = augment_rotate(std::vector<SceneClip>{c, c}, theta_rng);
  CHECK(rotated[0].positions != rotated[1].positions);
  for (const auto & r : rotated) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t t = 0; t + 1 < 6; ++t) {
        const double s0 = std::hypot(c.position(i, t + 1).x - c.position(i, t).x, c.position(i, t + 1).y - c.position(i, t).y);
        const double s1 = std::hypot(r.position(i, t + 1).x - r.position(i, t).x, r.position(i, t + 1).y - r.position(i, t).y);
        CHECK(std::abs(s0 - s1) < 1e-9);
      }
      for (std::size_t j = 0; j < 3; ++j) {
        const double d0 = std::hypot(c.position(i, 3).x - c.position(j, 3).x, c.position(i, 3).y - c.position(j, 3).y);
        const double d1 = std::hypot(r.position(i, 3).x - r.position(j, 3).x, r.position(i, 3).y - r.position(j, 3).y);
        CHECK(std::abs(d0 - d1) < 1e-9);
      }
    }
    CHECK(r.mask == c.mask);
  }
}

TEST_CASE("train: one partial batch is one optimizer step")
{
  const auto clips = cv_clips(10, 1);
  GripModel m(small_model_config(3), 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto h = train(m, clips, {}, cfg);
  CHECK(h.optimizer_steps == 1);
  CHECK(h.epochs.size() == 1);
  CHECK(h.best_epoch == 1);
}

TEST_CASE("train: zero learning rate leaves parameters unchanged")
{
  const auto clips = cv_clips(6, 2);
  GripModel m(small_model_config(3), 1);
  const auto before = snapshot(m);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.lr = 0.0;
  train(m, clips, clips, cfg);
  CHECK(snapshot(m) == before);
}

TEST_CASE("train: identical seeds give identical checkpoints")
{
  const auto clips = cv_clips(8, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.augment_rotate = true;
  cfg.seed = 11;
  GripModel a(small_model_config(3), 4), b(small_model_config(3), 4);
  train(a, clips, clips, cfg);
  train(b, clips, clips, cfg);
  CHECK(encode_checkpoint(a.named_state()) == encode_checkpoint(b.named_state()));
  cfg.seed = 12;
  GripModel c(small_model_config(3), 4);
  train(c, clips, clips, cfg);
  CHECK(encode_checkpoint(a.named_state()) != encode_checkpoint(c.named_state()));
}

TEST_CASE("train: the best epoch is restored and callbacks can stop")
{
  const auto clips = cv_clips(8, 4);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.lr = 5e-3;
  GripModel m(small_model_config(3), 2);
  std::size_t calls = 0;
  const auto h = train(m, clips, clips, cfg, [&](const EpochRecord &) { return ++calls < 4; });
  CHECK(h.stopped);
  CHECK(h.epochs.size() == 4);
  double best = 1e300;
  for (const auto & e : h.epochs) best = std::min(best, e.val_loss);
  CHECK(h.best_val_loss == best);
  CHECK(evaluate_model(m, clips).loss.total == doctest::Approx(best).epsilon(1e-12));
  const std::string log = training_log_csv(h);
  CHECK(log.rfind("epoch,train_loss,val_loss,val_WSADE,wall_seconds\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 5);
}

TEST_CASE("train: errors")
{
  const auto clips = cv_clips(4, 5);
  GripModel m(small_model_config(3), 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(m, {}, {}, cfg), UsageError);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(m, clips, {}, cfg), ParameterError);
  cfg.batch_size = 2;
  m.members()[0].out_b.values()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(m, clips, {}, cfg);
    FAIL("expected a divergence error");
  } catch (const DivergenceError & e) {
    CHECK(std::string(e.what()).find("epoch 1, batch 0") != std::string::npos);
  }
}
