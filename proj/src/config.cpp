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

#include "grip/config.hpp"

#include "grip/error.hpp"
#include "grip/rng.hpp"

#include <toml.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace grip
{
std::string_view to_string(DataFormat format) noexcept
{
  switch (format) {
    case DataFormat::jsonl: return "jsonl";
    case DataFormat::apolloscape: return "apolloscape";
    case DataFormat::csv: return "csv";
  }
  return "jsonl";
}

namespace
{
std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

toml::table to_table(const RunConfig & c)
{
  toml::array families;
  for (auto f : c.synth.families) families.push_back(std::string(to_string(f)));
  const auto & g = c.model.graph;
  const auto & q = c.model.seq;
  return toml::table{
    {"seed", static_cast<std::int64_t>(c.seed)},
    {"output_dir", c.output_dir},
    {"data",
     toml::table{
       {"source", c.data.source},
       {"path", c.data.path},
       {"format", std::string(to_string(c.data.format))},
       {"val_fraction", c.data.val_fraction}}},
    {"ingest",
     toml::table{
       {"t_history", as_int(c.ingest.t_history)},
       {"t_future", as_int(c.ingest.t_future)},
       {"stride", as_int(c.ingest.stride)},
       {"downsample", as_int(c.ingest.downsample)},
       {"window", c.ingest.window},
       {"frame_rate", c.ingest.frame_rate},
       {"unit", c.ingest.unit},
       {"reference_agent", static_cast<std::int64_t>(c.ingest.reference_agent)}}},
    {"synth",
     toml::table{
       {"scenes", as_int(c.synth.scenes)},
       {"agents_min", as_int(c.synth.agents_min)},
       {"agents_max", as_int(c.synth.agents_max)},
       {"families", families},
       {"noise", c.synth.noise},
       {"speed_min", c.synth.speed_min},
       {"speed_max", c.synth.speed_max},
       {"accel_max", c.synth.accel_max},
       {"turn_radius", c.synth.turn_radius},
       {"lane_amplitude", c.synth.lane_amplitude},
       {"lane_period", c.synth.lane_period},
       {"follow_lag", as_int(c.synth.follow_lag)},
       {"follow_gap", c.synth.follow_gap},
       {"group_max", as_int(c.synth.group_max)},
       {"spawn_half_width", c.synth.spawn_half_width},
       {"group_separation", c.synth.group_separation}}},
    {"preprocess",
     toml::table{
       {"input_mode", std::string(to_string(c.model.input_mode))},
       {"d_close", c.model.d_close},
       {"alpha", c.model.alpha}}},
    {"model",
     toml::table{
       {"channels", as_int(g.channels)},
       {"blocks", as_int(g.num_blocks)},
       {"batch_norm", g.use_batch_norm},
       {"trainable_graph", g.use_trainable_graph},
       {"train_self_graph", g.train_self_graph},
       {"skip_connections", g.skip_connections},
       {"dropout", g.dropout},
       {"n_max", as_int(g.n_max)},
       {"bn_momentum", g.batch_norm.momentum},
       {"bn_eps", g.batch_norm.eps},
       {"cell", std::string(to_string(q.cell))},
       {"layers", as_int(q.num_layers)},
       {"r", as_int(q.r)},
       {"residual", q.residual},
       {"ensemble", as_int(c.model.ensemble)}}},
    {"training",
     toml::table{
       {"epochs", as_int(c.training.epochs)},
       {"batch_size", as_int(c.training.batch_size)},
       {"lr", c.training.lr},
       {"augment_rotate", c.training.augment_rotate}}},
    {"eval", toml::table{{"cv_k", as_int(c.eval.cv_k)}}},
  };
}

// Reads typed values out of a table that has already been checked against
// the defaults, so every key exists with the default's type.
class Reader
{
public:
  explicit Reader(const toml::table & t) : t_(t) {}

  std::int64_t integer(std::string_view path) const { return *node(path).value<std::int64_t>(); }
  std::size_t size(std::string_view path) const
  {
    const auto v = integer(path);
    if (v < 0) throw ParameterError("config key '" + std::string(path) + "' must be >= 0");
    return static_cast<std::size_t>(v);
  }
  double real(std::string_view path) const { return *node(path).value<double>(); }
  bool boolean(std::string_view path) const { return *node(path).value<bool>(); }
  std::string text(std::string_view path) const { return *node(path).value<std::string>(); }
  toml::node_view<const toml::node> node(std::string_view path) const { return t_.at_path(path); }

private:
  const toml::table & t_;
};

RunConfig from_table(const toml::table & t)
{
  const Reader r(t);
  RunConfig c;
  c.seed = static_cast<std::uint64_t>(r.integer("seed"));
  c.output_dir = r.text("output_dir");

  c.data.source = r.text("data.source");
  if (c.data.source != "synth" && c.data.source != "file") {
    throw ParameterError("config key 'data.source' must be \"synth\" or \"file\", got \"" + c.data.source + "\"");
  }
  c.data.path = r.text("data.path");
  const auto format = r.text("data.format");
  if (format == "jsonl") c.data.format = DataFormat::jsonl;
  else if (format == "apolloscape") c.data.format = DataFormat::apolloscape;
  else if (format == "csv") c.data.format = DataFormat::csv;
  else throw ParameterError("config key 'data.format' must be jsonl, apolloscape or csv, got \"" + format + "\"");
  c.data.val_fraction = r.real("data.val_fraction");

  c.ingest.t_history = r.size("ingest.t_history");
  c.ingest.t_future = r.size("ingest.t_future");
  c.ingest.stride = r.size("ingest.stride");
  c.ingest.downsample = r.size("ingest.downsample");
  c.ingest.window = r.real("ingest.window");
  c.ingest.frame_rate = r.real("ingest.frame_rate");
  c.ingest.unit = r.text("ingest.unit");
  c.ingest.reference_agent = static_cast<long>(r.integer("ingest.reference_agent"));

  auto & s = c.synth;
  s.scenes = r.size("synth.scenes");
  s.agents_min = r.size("synth.agents_min");
  s.agents_max = r.size("synth.agents_max");
  s.families.clear();
  for (const auto & f : *r.node("synth.families").as_array()) {
    const auto name = f.value<std::string>();
    const auto family = name ? parse_motion_family(*name) : std::nullopt;
    if (!family) {
      throw ParameterError("config key 'synth.families' has unknown family \"" + name.value_or("?") +
                           "\" (expected cv, ca, turn, lane_change, follow)");
    }
    s.families.push_back(*family);
  }
  s.noise = r.real("synth.noise");
  s.speed_min = r.real("synth.speed_min");
  s.speed_max = r.real("synth.speed_max");
  s.accel_max = r.real("synth.accel_max");
  s.turn_radius = r.real("synth.turn_radius");
  s.lane_amplitude = r.real("synth.lane_amplitude");
  s.lane_period = r.real("synth.lane_period");
  s.follow_lag = r.size("synth.follow_lag");
  s.follow_gap = r.real("synth.follow_gap");
  s.group_max = r.size("synth.group_max");
  s.spawn_half_width = r.real("synth.spawn_half_width");
  s.group_separation = r.real("synth.group_separation");

  auto & m = c.model;
  const auto mode = r.text("preprocess.input_mode");
  if (mode == "velocity") m.input_mode = InputMode::velocity;
  else if (mode == "normalized_position" || mode == "position") m.input_mode = InputMode::normalized_position;
  else throw ParameterError("config key 'preprocess.input_mode' must be velocity or normalized_position, got \"" + mode + "\"");
  m.d_close = r.real("preprocess.d_close");
  m.alpha = r.real("preprocess.alpha");
  m.graph.channels = r.size("model.channels");
  m.graph.num_blocks = r.size("model.blocks");
  m.graph.use_batch_norm = r.boolean("model.batch_norm");
  m.graph.use_trainable_graph = r.boolean("model.trainable_graph");
  m.graph.train_self_graph = r.boolean("model.train_self_graph");
  m.graph.skip_connections = r.boolean("model.skip_connections");
  m.graph.dropout = r.real("model.dropout");
  m.graph.n_max = r.size("model.n_max");
  m.graph.batch_norm.momentum = r.real("model.bn_momentum");
  m.graph.batch_norm.eps = r.real("model.bn_eps");
  const auto cell = parse_cell_type(r.text("model.cell"));
  if (!cell) throw ParameterError("config key 'model.cell' must be gru or lstm, got \"" + r.text("model.cell") + "\"");
  m.seq.cell = *cell;
  m.seq.num_layers = r.size("model.layers");
  m.seq.r = r.size("model.r");
  m.seq.residual = r.boolean("model.residual");
  m.ensemble = r.size("model.ensemble");

  c.training.epochs = r.size("training.epochs");
  c.training.batch_size = r.size("training.batch_size");
  c.training.lr = r.real("training.lr");
  c.training.augment_rotate = r.boolean("training.augment_rotate");
  c.eval.cv_k = r.size("eval.cv_k");

  c.model.t_future = c.ingest.t_future;
  c.training.seed = c.seed;
  validate(c);
  return c;
}

std::string type_name(const toml::node & n)
{
  switch (n.type()) {
    case toml::node_type::table: return "table";
    case toml::node_type::array: return "array";
    case toml::node_type::string: return "string";
    case toml::node_type::integer: return "integer";
    case toml::node_type::floating_point: return "float";
    case toml::node_type::boolean: return "boolean";
    default: return "date/time";
  }
}

// Writes `value` over the same key of `target`, which holds the defaults.
// Unknown keys and type mismatches are errors naming the key path.
void assign(toml::table & target, std::string_view key, const toml::node & value, const std::string & path)
{
  toml::node * slot = target.get(key);
  if (!slot) throw ParameterError("unknown config key '" + path + "'");
  if (auto * sub = slot->as_table()) {
    const auto * src = value.as_table();
    if (!src) throw ParameterError("config key '" + path + "' must be a table, got " + type_name(value));
    for (const auto & [k, v] : *src) assign(*sub, k.str(), v, path + "." + std::string(k.str()));
    return;
  }
  if (slot->is_floating_point() && value.is_integer()) {
    target.insert_or_assign(key, static_cast<double>(*value.value<std::int64_t>()));
    return;
  }
  if (slot->type() != value.type()) {
    throw ParameterError("config key '" + path + "' must be " + type_name(*slot) + ", got " + type_name(value));
  }
  if (const auto * arr = value.as_array()) {
    for (const auto & item : *arr) {
      if (!item.is_string()) throw ParameterError("config key '" + path + "' must be an array of strings");
    }
  }
  target.insert_or_assign(key, value);
}

toml::table parse_toml(std::string_view text, std::string_view source)
{
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error & e) {
    std::ostringstream msg;
    msg << "config parse error in " << source << " at line " << e.source().begin.line << ", column "
        << e.source().begin.column << ": " << e.description();
    throw ParameterError(msg.str());
  }
}
}  // namespace

bool RunConfig::operator==(const RunConfig & o) const { return to_toml(*this) == to_toml(o); }

void validate(const RunConfig & c)
{
  auto wrap = [](const char * section, auto && fn) {
    try {
      fn();
    } catch (const ParameterError & e) {
      throw ParameterError(std::string("config section '") + section + "': " + e.what());
    }
  };
  if (!(c.data.val_fraction > 0.0 && c.data.val_fraction < 1.0)) {
    throw ParameterError("config key 'data.val_fraction' must lie in (0, 1)");
  }
  if (c.ingest.t_history < 2) throw ParameterError("config key 'ingest.t_history' must be >= 2");
  if (c.ingest.t_future < 1) throw ParameterError("config key 'ingest.t_future' must be >= 1");
  if (c.ingest.stride < 1) throw ParameterError("config key 'ingest.stride' must be >= 1");
  if (c.ingest.downsample < 1) throw ParameterError("config key 'ingest.downsample' must be >= 1");
  if (!(c.ingest.window > 0.0)) throw ParameterError("config key 'ingest.window' must be > 0");
  if (!(c.ingest.frame_rate > 0.0)) throw ParameterError("config key 'ingest.frame_rate' must be > 0");
  if (c.eval.cv_k < 1) throw ParameterError("config key 'eval.cv_k' must be >= 1");
  wrap("synth", [&] { validate_synth_spec(effective_synth_spec(c)); });
  wrap("model", [&] { validate(c.model); });
  wrap("training", [&] { validate(c.training); });
}

RunConfig parse_run_config(std::string_view text)
{
  toml::table merged = to_table(RunConfig{});
  const toml::table input = parse_toml(text, "config");
  for (const auto & [k, v] : input) assign(merged, k.str(), v, std::string(k.str()));
  return from_table(merged);
}

RunConfig load_run_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

RunConfig apply_overrides(const RunConfig & base, std::span<const std::string> assignments)
{
  toml::table merged = to_table(base);
  for (const auto & a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("override '" + a + "' is not of the form key=value");
    const std::string path = a.substr(0, eq);
    const std::string raw = a.substr(eq + 1);

    toml::table literal;
    try {
      literal = toml::parse("v = " + raw);
    } catch (const toml::parse_error &) {
      literal = toml::table{{"v", raw}};
    }
    // Nest the value under its dotted key so assign() walks and checks it.
    toml::table wrapped;
    toml::table * cursor = &wrapped;
    std::string_view rest = path;
    while (true) {
      const auto dot = rest.find('.');
      const std::string part(rest.substr(0, dot));
      if (part.empty()) throw ParameterError("override key '" + path + "' is malformed");
      if (dot == std::string_view::npos) {
        cursor->insert_or_assign(part, *literal.get("v"));
        break;
      }
      cursor = cursor->insert_or_assign(part, toml::table{}).first->second.as_table();
      rest = rest.substr(dot + 1);
    }
    for (const auto & [k, v] : wrapped) assign(merged, k.str(), v, std::string(k.str()));
  }
  return from_table(merged);
}

std::string to_toml(const RunConfig & config)
{
  std::ostringstream out;
  out << to_table(config) << '\n';
  return out.str();
}

std::filesystem::path resolve_output_dir(const RunConfig & config)
{
  if (!config.output_dir.empty()) return config.output_dir;
  const char * root = std::getenv(kOutputRootEnv);
  return std::filesystem::path(root && *root ? root : "runs") / "run";
}

SegmentOptions segment_options(const RunConfig & c)
{
  SegmentOptions o;
  o.t_history = c.ingest.t_history;
  o.t_future = c.ingest.t_future;
  o.stride = c.ingest.stride;
  o.window_half_width = c.ingest.window;
  o.frame_rate = c.ingest.frame_rate;
  o.unit = c.ingest.unit;
  if (c.ingest.reference_agent >= 0) o.reference_agent = c.ingest.reference_agent;
  if (!c.data.path.empty()) o.sequence_id = std::filesystem::path(c.data.path).stem().string();
  return o;
}

SynthSpec effective_synth_spec(const RunConfig & c)
{
  SynthSpec s = c.synth;
  s.t_history = c.ingest.t_history;
  s.t_future = c.ingest.t_future;
  s.frame_rate = c.ingest.frame_rate;
  s.window_half_width = c.ingest.window;
  s.unit = c.ingest.unit;
  return s;
}

std::vector<SceneClip> read_clip_file(
  const std::filesystem::path & path, DataFormat format, const SegmentOptions & options, std::size_t downsample_factor)
{
  if (format == DataFormat::jsonl) return load_clips(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  ParseResult parsed = format == DataFormat::apolloscape ? parse_apolloscape(in, true) : parse_csv(in, true);
  std::vector<AgentRecord> records = std::move(parsed.records);
  if (downsample_factor > 1) records = downsample(records, downsample_factor);
  return segment_clips(records, options);
}

std::vector<SceneClip> load_run_clips(const RunConfig & config)
{
  if (config.data.source == "synth") {
    Rng rng(config.seed, "synth");
    return synth_scenes(effective_synth_spec(config), rng);
  }
  if (config.data.path.empty()) throw UsageError("config key 'data.path' is empty but data.source is \"file\"");
  return read_clip_file(config.data.path, config.data.format, segment_options(config), config.ingest.downsample);
}
}  // namespace grip
