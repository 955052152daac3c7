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

#include "grip/model.hpp"

#include "grip/error.hpp"
#include "grip/rng.hpp"

#include <algorithm>
#include <map>

namespace grip
{
bool ModelConfig::operator==(const ModelConfig & o) const { return to_json(*this) == to_json(o); }

void validate(const ModelConfig & config)
{
  validate(config.graph);
  validate(config.seq);
  if (config.ensemble < 1) throw ParameterError("model: ensemble must be >= 1");
  if (!(config.d_close >= 0.0)) throw ParameterError("model: d_close must be >= 0");
  if (!(config.alpha > 0.0)) throw ParameterError("model: alpha must be > 0");
  if (config.t_future < 1) throw ParameterError("model: t_future must be >= 1");
  if (config.seq.output_dim != 2) throw ParameterError("model: output_dim must be 2 (x, y)");
}

nlohmann::json to_json(const ModelConfig & c)
{
  return {
    {"graph",
     {{"channels", c.graph.channels},
      {"blocks", c.graph.num_blocks},
      {"batch_norm", c.graph.use_batch_norm},
      {"trainable_graph", c.graph.use_trainable_graph},
      {"train_self_graph", c.graph.train_self_graph},
      {"skip_connections", c.graph.skip_connections},
      {"dropout", c.graph.dropout},
      {"n_max", c.graph.n_max},
      {"bn_momentum", c.graph.batch_norm.momentum},
      {"bn_eps", c.graph.batch_norm.eps}}},
    {"seq2seq",
     {{"cell", std::string(to_string(c.seq.cell))},
      {"layers", c.seq.num_layers},
      {"r", c.seq.r},
      {"residual", c.seq.residual},
      {"output_dim", c.seq.output_dim}}},
    {"ensemble", c.ensemble},
    {"input_mode", std::string(to_string(c.input_mode))},
    {"d_close", c.d_close},
    {"alpha", c.alpha},
    {"t_future", c.t_future},
  };
}

ModelConfig model_config_from_json(const nlohmann::json & j)
{
  try {
    ModelConfig c;
    const auto & g = j.at("graph");
    c.graph.channels = g.at("channels").get<std::size_t>();
    c.graph.num_blocks = g.at("blocks").get<std::size_t>();
    c.graph.use_batch_norm = g.at("batch_norm").get<bool>();
    c.graph.use_trainable_graph = g.at("trainable_graph").get<bool>();
    c.graph.train_self_graph = g.at("train_self_graph").get<bool>();
    c.graph.skip_connections = g.at("skip_connections").get<bool>();
    c.graph.dropout = g.at("dropout").get<double>();
    c.graph.n_max = g.at("n_max").get<std::size_t>();
    c.graph.batch_norm.momentum = g.at("bn_momentum").get<double>();
    c.graph.batch_norm.eps = g.at("bn_eps").get<double>();
    const auto & s = j.at("seq2seq");
    const auto cell = parse_cell_type(s.at("cell").get<std::string>());
    if (!cell) throw DataError("model config: unknown cell type");
    c.seq.cell = *cell;
    c.seq.num_layers = s.at("layers").get<std::size_t>();
    c.seq.r = s.at("r").get<std::size_t>();
    c.seq.residual = s.at("residual").get<bool>();
    c.seq.output_dim = s.at("output_dim").get<std::size_t>();
    c.ensemble = j.at("ensemble").get<std::size_t>();
    const auto mode = j.at("input_mode").get<std::string>();
    if (mode == "velocity") c.input_mode = InputMode::velocity;
    else if (mode == "normalized_position") c.input_mode = InputMode::normalized_position;
    else throw DataError("model config: unknown input mode '" + mode + "'");
    c.d_close = j.at("d_close").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.t_future = j.at("t_future").get<std::size_t>();
    return c;
  } catch (const nlohmann::json::exception & e) {
    throw DataError(std::string("model config: ") + e.what());
  }
}

SceneBatch make_batch(std::span<const SceneClip> clips, const ModelConfig & config, double norm_scale)
{
  if (clips.empty()) throw ParameterError("make_batch: no clips");
  const std::size_t th = clips.front().t_history;
  std::size_t total = 0;
  for (const auto & c : clips) {
    if (c.t_history != th) {
      throw DataError("make_batch: clip '" + c.scene_id + "' has t_history " + std::to_string(c.t_history) +
                      ", batch uses " + std::to_string(th));
    }
    if (c.num_agents() > config.graph.n_max) {
      throw CapacityError("clip '" + c.scene_id + "' has " + std::to_string(c.num_agents()) +
                          " agents, model capacity n_max is " + std::to_string(config.graph.n_max));
    }
    total += c.num_agents();
  }
  SceneBatch batch;
  batch.mode = config.input_mode;
  batch.norm_scale = norm_scale;
  batch.values = Tensor::zeros({total, th, 2});
  batch.offsets.push_back(0);
  auto dst = batch.values.values();
  std::size_t row = 0;
  for (const auto & c : clips) {
    const ModelInput in = make_input(c, config.input_mode, norm_scale);
    auto src = in.values.values();
    std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(row * th * 2));
    batch.last_positions.insert(batch.last_positions.end(), in.last_positions.begin(), in.last_positions.end());
    batch.graphs.push_back(build_graphs(c, config.d_close, config.alpha));
    row += c.num_agents();
    batch.offsets.push_back(row);
  }
  return batch;
}

Vec2 PredictionResult::position(std::size_t agent, std::size_t step) const
{
  const std::size_t k = (agent * t_future + step) * 2;
  return {positions.at(k), positions.at(k + 1)};
}

Vec2 PredictionResult::velocity(std::size_t agent, std::size_t step) const
{
  const std::size_t k = (agent * t_future + step) * 2;
  return {velocities.at(k), velocities.at(k + 1)};
}

// ---------------------------------------------------------------------------

GripModel::GripModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config))
{
  validate(config_);
  Rng root(seed, "model");
  Rng graph_rng = root.derive("graph");
  graph_ = init_graph_conv(config_.graph, 2, graph_rng);
  for (std::size_t k = 0; k < config_.ensemble; ++k) {
    Rng member_rng = root.derive("member", k);
    members_.push_back(init_seq2seq(config_.seq, config_.graph.channels, member_rng));
  }
}

void GripModel::set_norm_scale(double scale)
{
  if (!(scale > 0.0)) throw ParameterError("norm_scale must be > 0");
  norm_scale_ = scale;
}

namespace
{
template <class Fn>
void visit_recurrent(const std::string & prefix, const RecurrentParams & p, Fn && fn)
{
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    fn(base + ".w_ih", p.layers[l].w_ih);
    fn(base + ".w_hh", p.layers[l].w_hh);
    fn(base + ".b_ih", p.layers[l].b_ih);
    fn(base + ".b_hh", p.layers[l].b_hh);
  }
}

// Visits every tensor parameter under its checkpoint name.
template <class Fn>
void visit_tensors(const GraphConvParams & graph, const std::vector<Seq2SeqParams> & members, Fn && fn)
{
  fn(std::string("graph.lift.w"), graph.lift_w);
  fn(std::string("graph.lift.b"), graph.lift_b);
  for (std::size_t b = 0; b < graph.blocks.size(); ++b) {
    const auto & blk = graph.blocks[b];
    const std::string base = "graph.block" + std::to_string(b);
    fn(base + ".g_train0", blk.g_train0);
    fn(base + ".g_train1", blk.g_train1);
    fn(base + ".temporal.w", blk.temporal_w);
    fn(base + ".temporal.b", blk.temporal_b);
    fn(base + ".bn.scale", blk.bn_scale);
    fn(base + ".bn.shift", blk.bn_shift);
  }
  for (std::size_t k = 0; k < members.size(); ++k) {
    const std::string base = "member" + std::to_string(k);
    visit_recurrent(base + ".encoder", members[k].encoder, fn);
    visit_recurrent(base + ".decoder", members[k].decoder, fn);
    fn(base + ".out.w", members[k].out_w);
    fn(base + ".out.b", members[k].out_b);
  }
}
}  // namespace

std::vector<Tensor> GripModel::trainable_parameters() const
{
  std::vector<Tensor> out;
  visit_tensors(graph_, members_, [&](const std::string &, const Tensor & t) {
    if (t.requires_grad()) out.push_back(t);
  });
  return out;
}

ParameterSet GripModel::named_state() const
{
  ParameterSet out;
  visit_tensors(graph_, members_, [&](const std::string & name, const Tensor & t) {
    out.push_back({name, t.clone()});
  });
  for (std::size_t b = 0; b < graph_.blocks.size(); ++b) {
    const auto & s = graph_.blocks[b].bn_stats;
    const std::string base = "graph.block" + std::to_string(b);
    out.push_back({base + ".bn.running_mean", Tensor({s.mean.size()}, s.mean)});
    out.push_back({base + ".bn.running_var", Tensor({s.var.size()}, s.var)});
  }
  out.push_back({"meta.norm_scale", Tensor::scalar(norm_scale_)});
  return out;
}

void GripModel::load_state(const ParameterSet & state)
{
  std::map<std::string, const Tensor *> by_name;
  for (const auto & nt : state) by_name.emplace(nt.name, &nt.tensor);
  auto fetch = [&](const std::string & name, const Shape & shape) -> const Tensor & {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint lacks tensor '" + name + "'");
    if (it->second->shape() != shape) {
      throw DataError("checkpoint tensor '" + name + "' has shape " + shape_to_string(it->second->shape()) +
                      ", model expects " + shape_to_string(shape));
    }
    return *it->second;
  };
  visit_tensors(graph_, members_, [&](const std::string & name, const Tensor & t) {
    const auto & src = fetch(name, t.shape());
    auto dst = Tensor(t).values();
    std::copy(src.values().begin(), src.values().end(), dst.begin());
  });
  for (std::size_t b = 0; b < graph_.blocks.size(); ++b) {
    auto & s = graph_.blocks[b].bn_stats;
    const std::string base = "graph.block" + std::to_string(b);
    const auto & m = fetch(base + ".bn.running_mean", {s.mean.size()});
    const auto & v = fetch(base + ".bn.running_var", {s.var.size()});
    std::copy(m.values().begin(), m.values().end(), s.mean.begin());
    std::copy(v.values().begin(), v.values().end(), s.var.begin());
  }
  norm_scale_ = fetch("meta.norm_scale", {1}).item();
}

GripModel GripModel::from_checkpoint(const Checkpoint & checkpoint)
{
  if (!checkpoint.config.contains("model")) throw DataError("checkpoint sidecar lacks the 'model' section");
  GripModel model(model_config_from_json(checkpoint.config.at("model")));
  model.load_state(checkpoint.tensors);
  return model;
}

GripModel GripModel::load(const std::filesystem::path & path) { return from_checkpoint(load_checkpoint(path)); }

void GripModel::save(const std::filesystem::path & path, const nlohmann::json & extra) const
{
  nlohmann::json sidecar = extra.is_object() ? extra : nlohmann::json::object();
  sidecar["model"] = to_json(config_);
  sidecar["norm_scale"] = norm_scale_;
  save_checkpoint(path, named_state(), sidecar);
}

ModelOutput GripModel::forward(Tape & tape, const SceneBatch & batch, std::size_t t_future, Mode mode, Rng & rng)
{
  if (batch.mode != config_.input_mode) throw UsageError("forward: batch input mode does not match the model");
  const std::size_t steps = t_future ? t_future : config_.t_future;
  const std::size_t n = batch.num_agents(), th = batch.t_history();

  Tensor features = graph_conv_forward(tape, batch.values, batch.layout(), graph_, config_.graph, mode, rng);
  const Tensor first = tape.time_slice(batch.values, th - 1);

  ModelOutput out;
  for (const auto & member : members_) {
    const RecurrentState encoded = encode(tape, features, member);
    out.member_outputs.push_back(decode(tape, encoded, first, steps, member, config_.seq.residual));
  }
  Tensor sum = out.member_outputs.front();
  for (std::size_t k = 1; k < out.member_outputs.size(); ++k) sum = tape.add(sum, out.member_outputs[k]);
  out.averaged = members_.size() > 1 ? tape.scale(sum, 1.0 / static_cast<double>(members_.size())) : sum;

  if (config_.input_mode == InputMode::velocity) {
    Tensor anchor({n, steps, 2});
    auto a = anchor.values();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < steps; ++s) {
        a[(i * steps + s) * 2] = batch.last_positions[i].x;
        a[(i * steps + s) * 2 + 1] = batch.last_positions[i].y;
      }
    }
    out.positions = tape.add(tape.cumsum_time(out.averaged), anchor);
  } else {
    out.positions = tape.scale(out.averaged, batch.norm_scale);
  }
  return out;
}

std::vector<PredictionResult> GripModel::predict(std::span<const SceneClip> clips, std::size_t t_future, bool keep_members)
{
  const std::size_t steps = t_future ? t_future : config_.t_future;
  constexpr std::size_t chunk = 256;
  std::vector<PredictionResult> results;
  results.reserve(clips.size());
  Rng unused(0, "eval");

  for (std::size_t start = 0; start < clips.size(); start += chunk) {
    const auto part = clips.subspan(start, std::min(chunk, clips.size() - start));
    const SceneBatch batch = make_batch(part, config_, norm_scale_);
    Tape tape(false);
    const ModelOutput out = forward(tape, batch, steps, Mode::eval, unused);
    auto pos = out.positions.values();

    // Velocities in world units, from the reconstructed positions when the
    // model works in position space.
    auto to_velocity = [&](std::span<const double> space_out, std::size_t row, std::vector<double> & dst) {
      for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t d = 0; d < 2; ++d) {
          const std::size_t k = (row * steps + s) * 2 + d;
          if (config_.input_mode == InputMode::velocity) {
            dst.push_back(space_out[k]);
          } else {
            const double here = space_out[k] * batch.norm_scale;
            const double prev = s == 0 ? (d == 0 ? batch.last_positions[row].x : batch.last_positions[row].y)
                                       : space_out[k - 2] * batch.norm_scale;
            dst.push_back(here - prev);
          }
        }
      }
    };

    for (std::size_t b = 0; b < part.size(); ++b) {
      const auto & clip = part[b];
      PredictionResult r;
      r.scene_id = clip.scene_id;
      r.agent_ids = clip.agent_ids;
      r.agent_types = clip.agent_types;
      r.t_future = steps;
      if (keep_members) r.member_velocities.resize(out.member_outputs.size());
      for (std::size_t i = 0; i < clip.num_agents(); ++i) {
        const std::size_t row = batch.offsets[b] + i;
        r.positions.insert(
          r.positions.end(), pos.begin() + static_cast<std::ptrdiff_t>(row * steps * 2),
          pos.begin() + static_cast<std::ptrdiff_t>((row + 1) * steps * 2));
        to_velocity(out.averaged.values(), row, r.velocities);
        for (std::size_t k = 0; keep_members && k < out.member_outputs.size(); ++k) {
          to_velocity(out.member_outputs[k].values(), row, r.member_velocities[k]);
        }
      }
      results.push_back(std::move(r));
    }
  }
  return results;
}
}  // namespace grip
