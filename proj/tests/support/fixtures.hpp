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

#ifndef GRIP_TESTS__FIXTURES_HPP_
#define GRIP_TESTS__FIXTURES_HPP_

#include "grip/model.hpp"
#include "grip/rng.hpp"
#include "grip/scene.hpp"

#include <algorithm>
#include <string>

namespace grip::testing
{
// Random walkers inside a small box; with `holes` some frames other than the
// last history frame are unobserved.
inline SceneClip random_clip(Rng & rng, std::size_t n, std::size_t th, std::size_t tf, bool holes = false, double box = 40.0)
{
  SceneClip c;
  c.scene_id = "s" + std::to_string(rng.index(1000000));
  c.sequence_id = c.scene_id;
  c.t_history = th;
  c.t_future = tf;
  c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.agent_ids[i] = static_cast<long>(i + 1);
    c.agent_types[i] = static_cast<AgentType>(rng.index(5));
    Vec2 p{rng.uniform(-box, box), rng.uniform(-box, box)};
    const Vec2 v{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    for (std::size_t t = 0; t < th + tf; ++t) {
      c.set_position(i, t, p);
      c.set_observed(i, t, !holes || t + 1 == th || rng.uniform() > 0.2);
      p.x += v.x + rng.normal(0.0, 0.3);
      p.y += v.y + rng.normal(0.0, 0.3);
    }
  }
  return c;
}

// Tiny configuration used by gradient and identity checks.
inline ModelConfig small_model_config(std::size_t n_max = 3, std::size_t t_future = 3)
{
  ModelConfig m;
  m.graph.channels = 8;
  m.graph.num_blocks = 2;
  m.graph.n_max = n_max;
  m.seq.r = 2;
  m.ensemble = 2;
  m.t_future = t_future;
  return m;
}
// Output projections at zero: with residual decoding every step repeats the
// last observed velocity.
inline void zero_projections(GripModel & m)
{
  for (auto & member : m.members()) {
    for (auto & v : member.out_w.values()) v = 0.0;
    for (auto & v : member.out_b.values()) v = 0.0;
  }
}

inline void copy_values(const Tensor & from, Tensor & to) { std::copy(from.values().begin(), from.values().end(), to.values().begin()); }

inline void clone_member(GripModel & m, std::size_t from, std::size_t to)
{
  auto & a = m.members()[from];
  auto & b = m.members()[to];
  copy_values(a.out_w, b.out_w);
  copy_values(a.out_b, b.out_b);
  for (auto [pa, pb] : {std::pair{&a.encoder, &b.encoder}, std::pair{&a.decoder, &b.decoder}}) {
    for (std::size_t l = 0; l < pa->layers.size(); ++l) {
      copy_values(pa->layers[l].w_ih, pb->layers[l].w_ih);
      copy_values(pa->layers[l].w_hh, pb->layers[l].w_hh);
      copy_values(pa->layers[l].b_ih, pb->layers[l].b_ih);
      copy_values(pa->layers[l].b_hh, pb->layers[l].b_hh);
    }
  }
}
}  // namespace grip::testing

#endif  // GRIP_TESTS__FIXTURES_HPP_
