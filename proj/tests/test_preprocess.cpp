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
#include "support/scenes.hpp"

#include "grip/error.hpp"
#include "grip/preprocess.hpp"
#include "grip/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace grip;
using grip::testing::random_clip;
using grip::testing::permute_clip;
using grip::testing::to_mat;

namespace
{
SceneClip two_agents(double distance)
{
  SceneClip c;
  c.t_history = 2;
  c.t_future = 1;
  c.resize(2);
  c.agent_ids = {1, 2};
  for (std::size_t t = 0; t < 3; ++t) {
    c.set_position(0, t, {0.0, 0.0});
    c.set_position(1, t, {distance, 0.0});
    c.set_observed(0, t, true);
    c.set_observed(1, t, true);
  }
  return c;
}
}  // namespace

TEST_CASE("to_velocity")
{
  SceneClip c;
  c.t_history = 3;
  c.t_future = 1;
  c.resize(2);
  c.agent_ids = {1, 2};
  const Vec2 pts[] = {{0, 0}, {1, 2}, {3, 5}, {4, 7}};
  for (std::size_t t = 0; t < 4; ++t) {
    c.set_position(0, t, pts[t]);
    c.set_position(1, t, {7.0, -2.0});
    c.set_observed(0, t, true);
    c.set_observed(1, t, true);
  }
  const ModelInput in = to_velocity(c);
  CHECK(in.values.shape() == Shape{2, 3, 2});
  const std::vector<double> expected{0, 0, 1, 2, 2, 3};
  for (std::size_t k = 0; k < 6; ++k) CHECK(in.values.values()[k] == expected[k]);
  for (std::size_t k = 6; k < 12; ++k) CHECK(in.values.values()[k] == 0.0);
  CHECK(in.last_positions[0].x == 3.0);
  CHECK(in.last_positions[0].y == 5.0);

  c.set_observed(0, 1, false);
  const ModelInput gap = to_velocity(c);
  for (std::size_t k = 0; k < 6; ++k) CHECK(gap.values.values()[k] == 0.0);
}

TEST_CASE("velocity and position round trip")
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const SceneClip c = random_clip(rng, 4, 6, 2);
    const ModelInput in = to_velocity(c);
    for (std::size_t i = 0; i < 4; ++i) {
      Vec2 p = in.last_positions[i];
      for (std::size_t t = 5; t > 0; --t) {
        CHECK(std::abs(p.x - c.position(i, t).x) < 1e-9);
        CHECK(std::abs(p.y - c.position(i, t).y) < 1e-9);
        p.x -= in.values.values()[(i * 6 + t) * 2];
        p.y -= in.values.values()[(i * 6 + t) * 2 + 1];
      }
      CHECK(std::abs(p.x - c.position(i, 0).x) < 1e-9);
    }
  }
}

TEST_CASE("to_normalized_position")
{
  Rng rng(2);
  std::vector<SceneClip> clips{random_clip(rng, 3, 4, 2), random_clip(rng, 5, 4, 2)};
  const double m = max_abs_coordinate(clips);
  for (const auto & c : clips) {
    const ModelInput in = to_normalized_position(c, m);
    CHECK(in.norm_scale == m);
    for (std::size_t i = 0; i < c.num_agents(); ++i) {
      for (std::size_t t = 0; t < 4; ++t) {
        const double x = in.values.values()[(i * 4 + t) * 2];
        CHECK(std::abs(x) <= 1.0);
        CHECK(x * m == doctest::Approx(c.position(i, t).x).epsilon(1e-15));
      }
    }
  }
  SceneClip zero = two_agents(0.0);
  const ModelInput zeros = to_normalized_position(zero, 1.0);
  for (double v : zeros.values.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(to_normalized_position(zero, 0.0), ParameterError);
  CHECK_THROWS_AS(to_normalized_position(zero, -1.0), ParameterError);
}

TEST_CASE("normalize_adjacency")
{
  const double g = 1.0 / 1.001;
  CHECK(normalize_adjacency(Eigen::MatrixXd::Identity(1, 1))(0, 0) == doctest::Approx(g).epsilon(1e-15));
  Eigen::MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  const auto s = normalize_adjacency(swap);
  CHECK(s(0, 1) == doctest::Approx(g).epsilon(1e-15));
  CHECK(s(1, 0) == doctest::Approx(g).epsilon(1e-15));
  CHECK(s(0, 0) == 0.0);
  CHECK(normalize_adjacency(Eigen::MatrixXd::Zero(4, 4)).isZero(0.0));
  CHECK_THROWS_AS(normalize_adjacency(Eigen::MatrixXd::Zero(2, 3)), DimensionError);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(6));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.bernoulli(0.5) ? rng.uniform(0.0, 2.0) : 0.0;
    }
    const double alpha = rng.uniform(1e-4, 1.0);
    const auto got = normalize_adjacency(a, alpha);
    const auto want = oracle::normalize(to_mat(a), alpha);
    CHECK((got - got.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) CHECK(std::abs(got(i, j) - want[i][j]) < 1e-12);
    }
  }
}

TEST_CASE("build_graphs: threshold")
{
  CHECK(build_graphs(two_agents(24.0), 25.0).a1[0](0, 1) == 1.0);
  CHECK(build_graphs(two_agents(24.0), 25.0).a1[1](1, 0) == 1.0);
  CHECK(build_graphs(two_agents(26.0), 25.0).a1[0].isZero(0.0));
  CHECK(build_graphs(two_agents(25.0), 25.0).a1[0].isZero(0.0));
  CHECK(build_graphs(two_agents(0.0), 0.0).a1[0].isZero(0.0));
  const auto g = build_graphs(two_agents(5.0), 25.0);
  CHECK(g.a0.isIdentity(0.0));
  CHECK(g.g0(0, 0) == doctest::Approx(1.0 / 1.001));
  CHECK(g.t_history() == 2);
  CHECK_THROWS_AS(build_graphs(two_agents(5.0), -1.0), ParameterError);
}

TEST_CASE("build_graphs: matches the distance rule and the loop oracle")
{
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    const SceneClip c = random_clip(rng, 1 + rng.index(6), 4, 2, true, 20.0);
    const double d = rng.uniform(0.0, 40.0);
    const GraphStack g = build_graphs(c, d);
    for (std::size_t t = 0; t < 4; ++t) {
      const auto a = oracle::spatial_adjacency(c, t, d);
      const auto gn = oracle::normalize(a, kDefaultAlpha);
      for (std::size_t i = 0; i < c.num_agents(); ++i) {
        CHECK(g.a1[t](i, i) == 0.0);
        for (std::size_t j = 0; j < c.num_agents(); ++j) {
          CHECK(g.a1[t](i, j) == a[i][j]);
          CHECK(g.a1[t](i, j) == g.a1[t](j, i));
          CHECK(std::abs(g.g1[t](i, j) - gn[i][j]) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("build_graphs: permutation equivariance and monotonicity")
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.index(5);
    const SceneClip c = random_clip(rng, n, 3, 1, true, 20.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    const GraphStack g = build_graphs(c, 25.0), gp = build_graphs(permute_clip(c, perm), 25.0);
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(gp.a1[t](i, j) == g.a1[t](perm[i], perm[j]));
          CHECK(gp.g1[t](i, j) == doctest::Approx(g.g1[t](perm[i], perm[j])).epsilon(1e-15));
        }
      }
    }
    const GraphStack wider = build_graphs(c, 35.0);
    for (std::size_t t = 0; t < 3; ++t) CHECK(((g.a1[t].array() <= wider.a1[t].array()).all()));
  }
}
