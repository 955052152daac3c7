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
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

#include "grip/error.hpp"
#include "grip/graph_conv.hpp"
#include "grip/rng.hpp"

#include <doctest.h>

#include <numeric>

using namespace grip;
using namespace grip::testing;

TEST_CASE("channel_lift")
{
  GraphConvConfig cfg;
  Rng rng(1);
  GraphConvParams p = init_graph_conv(cfg, 2, rng);
  Tape tape;
  const Tensor y = channel_lift(tape, random_tensor({5, 6, 2}, rng, false), p);
  CHECK(y.shape() == Shape{5, 6, 64});

  for (auto & v : p.lift_b.values()) v = 0.0;
  const Tensor z = channel_lift(tape, Tensor::zeros({3, 4, 2}), p);
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("init_graph_conv")
{
  GraphConvConfig cfg;
  cfg.n_max = 7;
  Rng rng(2);
  const auto p = init_graph_conv(cfg, 2, rng);
  REQUIRE(p.blocks.size() == 3);
  for (const auto & b : p.blocks) {
    CHECK(b.g_train0.shape() == Shape{7, 7});
    CHECK(b.g_train1.shape() == Shape{7, 7});
    CHECK(b.temporal_w.shape() == Shape{64, 64, 3});
    for (double v : b.g_train1.values()) CHECK(v == 0.0);
  }
  cfg.channels = 0;
  CHECK_THROWS_AS(init_graph_conv(cfg, 2, rng), ParameterError);
}

TEST_CASE("graph_operation: isolated agents see only the normalized identity")
{
  Rng rng(3);
  const Scenes s({random_clip(rng, 4, 3, 1)}, 0.0);
  const Tensor f = random_tensor({4, 3, 5}, rng, false);
  const Tensor zero = Tensor::zeros({4, 4});
  Tape tape;
  const Tensor y = graph_operation(tape, f, s.layout(), zero, zero, true);
  for (std::size_t k = 0; k < f.numel(); ++k) CHECK(y.values()[k] == doctest::Approx(f.values()[k] / 1.001).epsilon(1e-14));
}

TEST_CASE("graph_operation: single agent")
{
  Rng rng(4);
  const Scenes s({random_clip(rng, 1, 3, 1)});
  const Tensor f = random_tensor({1, 3, 4}, rng, false);
  const Tensor g0({2, 2}, {0.3, 9, 9, 9}), g1({2, 2}, {-0.05, 9, 9, 9});
  Tape tape;
  const Tensor y = graph_operation(tape, f, s.layout(), g0, g1, true);
  for (std::size_t k = 0; k < f.numel(); ++k) {
    CHECK(y.values()[k] == doctest::Approx((1.0 / 1.001 + 0.25) * f.values()[k]).epsilon(1e-14));
  }
  const Tensor fixed = graph_operation(tape, f, s.layout(), g0, g1, false);
  for (std::size_t k = 0; k < f.numel(); ++k) CHECK(fixed.values()[k] == doctest::Approx(f.values()[k] / 1.001).epsilon(1e-14));
  const Tensor no_self = graph_operation(tape, f, s.layout(), g0, g1, true, false);
  for (std::size_t k = 0; k < f.numel(); ++k) {
    CHECK(no_self.values()[k] == doctest::Approx((1.0 / 1.001 - 0.05) * f.values()[k]).epsilon(1e-14));
  }
}

TEST_CASE("graph_operation: loop oracle on random batches")
{
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const std::size_t n_max = 6, th = 2 + rng.index(4), ch = 1 + rng.index(4);
    std::vector<SceneClip> clips;
    for (std::size_t b = 0, k = 1 + rng.index(3); b < k; ++b) clips.push_back(random_clip(rng, 1 + rng.index(n_max), th, 1, true, 20.0));
    const double d_close = rng.uniform(0.0, 40.0);
    const Scenes s(clips, d_close);
    const Tensor f = random_tensor({s.total(), th, ch}, rng, false);
    const Tensor g0 = random_tensor({n_max, n_max}, rng, false), g1 = random_tensor({n_max, n_max}, rng, false);
    const bool trainable = rng.bernoulli(0.7), self = rng.bernoulli(0.7);
    Tape tape;
    const Tensor y = graph_operation(tape, f, s.layout(), g0, g1, trainable, self);
    for (std::size_t b = 0; b < clips.size(); ++b) {
      const std::size_t off = s.offsets[b], n = clips[b].num_agents();
      const std::vector<double> fb(f.values().begin() + static_cast<std::ptrdiff_t>(off * th * ch),
                                   f.values().begin() + static_cast<std::ptrdiff_t>((off + n) * th * ch));
      const auto want = oracle::graph_operation(
        fb, clips[b], ch, d_close, kDefaultAlpha, trainable && self ? as_vector(g0) : std::vector<double>{},
        trainable ? as_vector(g1) : std::vector<double>{}, n_max);
      for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(y.values()[off * th * ch + k] - want[k]) < 1e-9);
    }
  }
}

TEST_CASE("graph_operation: permutation equivariance")
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 5;
    const SceneClip c = random_clip(rng, n, 3, 1, true, 20.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    const Scenes s({c}), sp({permute_clip(c, perm)});
    const Tensor f = random_tensor({n, 3, 4}, rng, false);
    const Tensor fp({n, 3, 4}, permute_rows(as_vector(f), perm, 12));
    const Tensor zero = Tensor::zeros({n, n});
    Tape tape;
    const auto y = as_vector(graph_operation(tape, f, s.layout(), zero, zero, true));
    const auto yp = as_vector(graph_operation(tape, fp, sp.layout(), zero, zero, true));
    const auto expected = permute_rows(y, perm, 12);
    for (std::size_t k = 0; k < y.size(); ++k) CHECK(yp[k] == doctest::Approx(expected[k]).epsilon(1e-13));
  }
}

TEST_CASE("graph_operation: an unobserved agent does not reach its neighbours")
{
  Rng rng(8);
  SceneClip c = random_clip(rng, 3, 4, 1, false, 5.0);
  c.set_observed(2, 1, false);
  SceneClip without = c;
  without.resize(2);
  for (std::size_t i = 0; i < 2; ++i) {
    without.agent_ids[i] = c.agent_ids[i];
    for (std::size_t t = 0; t < c.num_frames(); ++t) {
      without.set_position(i, t, c.position(i, t));
      without.set_observed(i, t, c.observed(i, t));
    }
  }
  Tensor f = random_tensor({3, 4, 2}, rng, false);
  for (std::size_t ch = 0; ch < 2; ++ch) f.values()[(2 * 4 + 1) * 2 + ch] = 0.0;
  const Tensor f2({2, 4, 2}, std::vector<double>(f.values().begin(), f.values().begin() + 16));
  Tape tape;
  const Scenes s({c}), s2({without});
  const Tensor y = graph_operation(tape, f, s.layout(), Tensor(), Tensor(), false);
  const Tensor y2 = graph_operation(tape, f2, s2.layout(), Tensor(), Tensor(), false);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t ch = 0; ch < 2; ++ch) CHECK(y.values()[(i * 4 + 1) * 2 + ch] == doctest::Approx(y2.values()[(i * 4 + 1) * 2 + ch]).epsilon(1e-14));
  }
}

TEST_CASE("graph_operation: shape and capacity errors")
{
  Rng rng(9);
  const Scenes s({random_clip(rng, 4, 3, 1)});
  Tape tape;
  const Tensor small = Tensor::zeros({3, 3});
  CHECK_THROWS_AS(graph_operation(tape, Tensor::zeros({4, 3, 2}), s.layout(), small, small, true), CapacityError);
  CHECK_THROWS_AS(graph_operation(tape, Tensor::zeros({5, 3, 2}), s.layout(), small, small, false), DimensionError);
  CHECK_THROWS_AS(graph_operation(tape, Tensor::zeros({4, 2, 2}), s.layout(), small, small, false), DimensionError);
}

TEST_CASE("graph_conv_forward")
{
  Rng rng(10);
  const Scenes s({random_clip(rng, 3, 6, 1), random_clip(rng, 4, 6, 1)});
  GraphConvConfig cfg;
  cfg.n_max = 4;
  GraphConvParams p = init_graph_conv(cfg, 2, rng);
  const Tensor x = random_tensor({7, 6, 2}, rng, false);
  Tape tape(false);
  Rng drop(1);
  const Tensor a = graph_conv_forward(tape, x, s.layout(), p, cfg, Mode::eval, drop);
  const Tensor b = graph_conv_forward(tape, x, s.layout(), p, cfg, Mode::eval, drop);
  CHECK(a.shape() == Shape{7, 6, 64});
  CHECK(as_vector(a) == as_vector(b));
  const Tensor t = graph_conv_forward(tape, x, s.layout(), p, cfg, Mode::train, drop);
  CHECK(t.shape() == Shape{7, 6, 64});
  CHECK(as_vector(t) != as_vector(a));

  cfg.num_blocks = 10;
  GraphConvParams deep = init_graph_conv(cfg, 2, rng);
  CHECK(graph_conv_forward(tape, x, s.layout(), deep, cfg, Mode::eval, drop).shape() == Shape{7, 6, 64});
}

TEST_CASE("graph_conv_forward: permutation equivariance in the fixed-only configuration")
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 5;
    const SceneClip c = random_clip(rng, n, 4, 1, true, 20.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    GraphConvConfig cfg;
    cfg.channels = 8;
    cfg.use_trainable_graph = false;
    cfg.use_batch_norm = false;
    cfg.n_max = n;
    GraphConvParams p = init_graph_conv(cfg, 2, rng);
    const Tensor x = random_tensor({n, 4, 2}, rng, false);
    const Tensor xp({n, 4, 2}, permute_rows(as_vector(x), perm, 8));
    const Scenes s({c}), sp({permute_clip(c, perm)});
    Tape tape(false);
    Rng drop(1);
    const auto y = as_vector(graph_conv_forward(tape, x, s.layout(), p, cfg, Mode::eval, drop));
    const auto yp = as_vector(graph_conv_forward(tape, xp, sp.layout(), p, cfg, Mode::eval, drop));
    const auto expected = permute_rows(y, perm, 4 * 8);
    for (std::size_t k = 0; k < y.size(); ++k) CHECK(std::abs(yp[k] - expected[k]) < 1e-9);
  }
}

TEST_CASE("graph conv gradient on a 3-agent scene")
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const Scenes s({random_clip(rng, 3, 4, 1, false, 12.0)});
    GraphConvConfig cfg;
    cfg.channels = 6;
    cfg.n_max = 3;
    cfg.dropout = 0.3;
    GraphConvParams p = init_graph_conv(cfg, 2, rng);
    const Tensor x = random_tensor({3, 4, 2}, rng);
    std::vector<Tensor> inputs{x, p.lift_w, p.lift_b};
    for (auto & b : p.blocks) {
      for (auto & v : b.g_train1.values()) v = rng.uniform(-0.2, 0.2);
      inputs.insert(inputs.end(), {b.g_train0, b.g_train1, b.temporal_w, b.temporal_b, b.bn_scale, b.bn_shift});
    }
    const auto r = grip::testing::gradcheck(
      [&](Tape & t) {
        Rng drop(seed, "drop");
        return graph_conv_forward(t, x, s.layout(), p, cfg, Mode::train, drop);
      },
      inputs, seed);
    CHECK(r.max_rel_error < 1e-4);
  }
}
