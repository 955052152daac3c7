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

#include "grip/scene.hpp"

#include "grip/error.hpp"
#include "grip/rng.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace grip
{
// ---------------------------------------------------------------------------
// Agent types

std::string_view to_string(AgentType type) noexcept
{
  switch (type) {
    case AgentType::small_vehicle: return "small_vehicle";
    case AgentType::big_vehicle: return "big_vehicle";
    case AgentType::pedestrian: return "pedestrian";
    case AgentType::motorcyclist_bicyclist: return "motorcyclist_bicyclist";
    case AgentType::other: return "other";
  }
  return "other";
}

std::optional<AgentType> parse_agent_type(std::string_view text)
{
  static constexpr AgentType all[] = {
    AgentType::small_vehicle, AgentType::big_vehicle, AgentType::pedestrian,
    AgentType::motorcyclist_bicyclist, AgentType::other};
  for (auto t : all) {
    if (text == to_string(t)) return t;
  }
  int code = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), code);
  if (ec == std::errc() && ptr == text.data() + text.size() && code >= 1 && code <= 5) {
    return all[code - 1];
  }
  return std::nullopt;
}

AgentClass agent_class(AgentType type) noexcept
{
  switch (type) {
    case AgentType::small_vehicle:
    case AgentType::big_vehicle: return AgentClass::vehicle;
    case AgentType::pedestrian: return AgentClass::pedestrian;
    case AgentType::motorcyclist_bicyclist: return AgentClass::bicycle;
    case AgentType::other: return AgentClass::other;
  }
  return AgentClass::other;
}

std::string_view to_string(AgentClass cls) noexcept
{
  switch (cls) {
    case AgentClass::vehicle: return "vehicle";
    case AgentClass::pedestrian: return "pedestrian";
    case AgentClass::bicycle: return "bicycle";
    case AgentClass::other: return "other";
  }
  return "other";
}

// ---------------------------------------------------------------------------
// Parsing

namespace
{
std::vector<std::string_view> split_ws(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_csv(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      auto field = line.substr(start, i - start);
      while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
      while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
      out.push_back(field);
      start = i + 1;
    }
  }
  return out;
}

bool parse_double(std::string_view s, double & out)
{
  // from_chars for double is available in libstdc++ 11.
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long & out)
{
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec == std::errc() && ptr == s.data() + s.size()) return true;
  // Some exports write integer ids as floats ("12.0").
  double d = 0.0;
  if (parse_double(s, d) && std::isfinite(d) && d == std::floor(d)) {
    out = static_cast<long>(d);
    return true;
  }
  return false;
}

bool blank_or_comment(std::string_view line)
{
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

void report(ParseResult & result, std::size_t line, std::string message, bool strict)
{
  if (strict) throw DataError("line " + std::to_string(line) + ": " + message);
  result.issues.push_back({line, std::move(message)});
}
}  // namespace

ParseResult parse_apolloscape(std::istream & in, bool strict)
{
  ParseResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    const auto f = split_ws(line);
    if (f.size() != 10) {
      report(result, lineno, "expected 10 fields, got " + std::to_string(f.size()), strict);
      continue;
    }
    AgentRecord r;
    long type_code = 0;
    double v[7];
    bool ok = parse_long(f[0], r.frame_id) && parse_long(f[1], r.agent_id) && parse_long(f[2], type_code);
    for (std::size_t k = 0; k < 7 && ok; ++k) ok = parse_double(f[3 + k], v[k]);
    if (!ok) {
      report(result, lineno, "non-numeric field", strict);
      continue;
    }
    if (type_code < 1 || type_code > 5) {
      report(result, lineno, "object type " + std::to_string(type_code) + " outside 1..5", strict);
      continue;
    }
    if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
      report(result, lineno, "non-finite position", strict);
      continue;
    }
    r.type = *parse_agent_type(std::to_string(type_code));
    r.x = v[0];
    r.y = v[1];
    r.z = v[2];
    r.length = v[3];
    r.width = v[4];
    r.height = v[5];
    r.heading = v[6];
    result.records.push_back(r);
  }
  return result;
}

ParseResult parse_csv(std::istream & in, bool strict)
{
  ParseResult result;
  std::string line;
  std::size_t lineno = 0;
  std::unordered_map<std::string, std::size_t> column;
  static constexpr std::string_view required[] = {"frame_id", "agent_id", "agent_type", "x", "y"};

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank_or_comment(line)) continue;
    const auto f = split_csv(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < f.size(); ++i) column.emplace(std::string(f[i]), i);
      for (auto name : required) {
        if (!column.count(std::string(name))) {
          throw DataError("csv header (line " + std::to_string(lineno) + ") lacks column '" + std::string(name) + "'");
        }
      }
      continue;
    }
    auto field = [&](std::string_view name) -> std::string_view {
      const auto idx = column.at(std::string(name));
      return idx < f.size() ? f[idx] : std::string_view{};
    };
    AgentRecord r;
    if (!parse_long(field("frame_id"), r.frame_id) || !parse_long(field("agent_id"), r.agent_id)) {
      report(result, lineno, "bad frame_id/agent_id", strict);
      continue;
    }
    const auto type = parse_agent_type(field("agent_type"));
    if (!type) {
      report(result, lineno, "unknown agent_type '" + std::string(field("agent_type")) + "'", strict);
      continue;
    }
    r.type = *type;
    if (!parse_double(field("x"), r.x) || !parse_double(field("y"), r.y) || !std::isfinite(r.x) || !std::isfinite(r.y)) {
      report(result, lineno, "bad position", strict);
      continue;
    }
    double h = 0.0;
    if (column.count("heading") && parse_double(field("heading"), h)) r.heading = h;
    result.records.push_back(r);
  }
  return result;
}

// ---------------------------------------------------------------------------
// SceneClip

Vec2 SceneClip::position(std::size_t agent, std::size_t frame) const
{
  const std::size_t k = (agent * num_frames() + frame) * 2;
  return {positions.at(k), positions.at(k + 1)};
}

void SceneClip::set_position(std::size_t agent, std::size_t frame, Vec2 p)
{
  const std::size_t k = (agent * num_frames() + frame) * 2;
  positions.at(k) = p.x;
  positions.at(k + 1) = p.y;
}

bool SceneClip::observed(std::size_t agent, std::size_t frame) const
{
  return mask.at(agent * num_frames() + frame) != 0;
}

void SceneClip::set_observed(std::size_t agent, std::size_t frame, bool flag)
{
  mask.at(agent * num_frames() + frame) = flag ? 1 : 0;
}

void SceneClip::resize(std::size_t n)
{
  agent_ids.assign(n, 0);
  agent_types.assign(n, AgentType::other);
  positions.assign(n * num_frames() * 2, 0.0);
  mask.assign(n * num_frames(), 0);
}

Vec2 last_history_centroid(const SceneClip & clip)
{
  Vec2 c;
  std::size_t count = 0;
  for (std::size_t i = 0; i < clip.num_agents(); ++i) {
    if (!clip.observed(i, clip.t_history - 1)) continue;
    const auto p = clip.position(i, clip.t_history - 1);
    c.x += p.x;
    c.y += p.y;
    ++count;
  }
  if (count) {
    c.x /= static_cast<double>(count);
    c.y /= static_cast<double>(count);
  }
  return c;
}

void validate_clip(const SceneClip & clip, double window_half_width, std::optional<Vec2> reference)
{
  const auto fail = [&](const std::string & what) {
    throw DataError("clip '" + clip.scene_id + "': " + what);
  };
  const std::size_t n = clip.num_agents();
  if (n == 0) fail("no agents");
  if (clip.t_history < 2) fail("t_history < 2");
  if (clip.agent_types.size() != n) fail("agent_types length mismatch");
  if (clip.positions.size() != n * clip.num_frames() * 2) fail("positions size mismatch");
  if (clip.mask.size() != n * clip.num_frames()) fail("mask size mismatch");
  std::set<long> ids(clip.agent_ids.begin(), clip.agent_ids.end());
  if (ids.size() != n) fail("duplicate agent id");
  const Vec2 ref = reference.value_or(last_history_centroid(clip));
  for (std::size_t i = 0; i < n; ++i) {
    if (!clip.observed(i, clip.t_history - 1)) {
      fail("agent " + std::to_string(clip.agent_ids[i]) + " unobserved at the last history frame");
    }
    for (std::size_t t = 0; t < clip.num_frames(); ++t) {
      const auto p = clip.position(i, t);
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail("non-finite position");
      if (!clip.observed(i, t)) continue;
      if (std::abs(p.x - ref.x) > window_half_width + 1e-9 || std::abs(p.y - ref.y) > window_half_width + 1e-9) {
        fail("agent " + std::to_string(clip.agent_ids[i]) + " outside the scene window at frame " + std::to_string(t));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Segmentation

std::vector<SceneClip> segment_clips(std::span<const AgentRecord> records, const SegmentOptions & options)
{
  if (options.t_history < 1 || options.t_future < 1) {
    throw ParameterError("segment_clips: t_history and t_future must be >= 1");
  }
  if (options.stride < 1) throw ParameterError("segment_clips: stride must be >= 1");
  std::vector<SceneClip> clips;
  if (records.empty()) return clips;

  std::map<long, std::map<long, const AgentRecord *>> by_frame;
  for (const auto & r : records) {
    auto [it, inserted] = by_frame[r.frame_id].emplace(r.agent_id, &r);
    if (!inserted) {
      throw DataError(
        "duplicate record for agent " + std::to_string(r.agent_id) + " in frame " + std::to_string(r.frame_id));
    }
  }
  const long first = by_frame.begin()->first;
  const long last = by_frame.rbegin()->first;
  const long span_frames = static_cast<long>(options.t_history + options.t_future);
  const double w = options.window_half_width;

  std::size_t clip_index = 0;
  for (long f0 = first; f0 + span_frames - 1 <= last; f0 += static_cast<long>(options.stride)) {
    const long f_last_hist = f0 + static_cast<long>(options.t_history) - 1;
    auto hist_it = by_frame.find(f_last_hist);
    if (hist_it == by_frame.end() || hist_it->second.empty()) continue;
    const auto & present = hist_it->second;

    Vec2 ref;
    if (options.reference_agent) {
      auto r = present.find(*options.reference_agent);
      if (r == present.end()) continue;
      ref = {r->second->x, r->second->y};
    } else {
      for (const auto & [id, rec] : present) {
        ref.x += rec->x;
        ref.y += rec->y;
      }
      ref.x /= static_cast<double>(present.size());
      ref.y /= static_cast<double>(present.size());
    }
    const auto inside = [&](double x, double y) { return std::abs(x - ref.x) <= w && std::abs(y - ref.y) <= w; };

    std::vector<const AgentRecord *> kept;
    for (const auto & [id, rec] : present) {
      if (inside(rec->x, rec->y)) kept.push_back(rec);
    }
    if (kept.empty()) continue;

    SceneClip clip;
    clip.t_history = options.t_history;
    clip.t_future = options.t_future;
    clip.frame_rate = options.frame_rate;
    clip.origin_frame = f0;
    clip.unit = options.unit;
    clip.sequence_id = options.sequence_id;
    clip.scene_id = options.sequence_id + ":" + std::to_string(clip_index++);
    clip.resize(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      clip.agent_ids[i] = kept[i]->agent_id;
      clip.agent_types[i] = kept[i]->type;
      for (long t = 0; t < span_frames; ++t) {
        auto fr = by_frame.find(f0 + t);
        if (fr == by_frame.end()) continue;
        auto rec = fr->second.find(kept[i]->agent_id);
        if (rec == fr->second.end() || !inside(rec->second->x, rec->second->y)) continue;
        clip.set_position(i, static_cast<std::size_t>(t), {rec->second->x, rec->second->y});
        clip.set_observed(i, static_cast<std::size_t>(t), true);
      }
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::vector<AgentRecord> downsample(std::span<const AgentRecord> records, std::size_t factor)
{
  if (factor < 1) throw ParameterError("downsample: factor must be >= 1");
  if (records.empty()) return {};
  const long first = std::min_element(records.begin(), records.end(), [](const auto & a, const auto & b) {
                       return a.frame_id < b.frame_id;
                     })->frame_id;
  const long f = static_cast<long>(factor);
  std::vector<AgentRecord> out;
  for (const auto & r : records) {
    const long offset = r.frame_id - first;
    if (offset % f != 0) continue;
    AgentRecord copy = r;
    copy.frame_id = offset / f;
    out.push_back(copy);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

std::string_view to_string(MotionFamily family) noexcept
{
  switch (family) {
    case MotionFamily::constant_velocity: return "cv";
    case MotionFamily::constant_acceleration: return "ca";
    case MotionFamily::turn: return "turn";
    case MotionFamily::lane_change: return "lane_change";
    case MotionFamily::follow: return "follow";
  }
  return "cv";
}

std::optional<MotionFamily> parse_motion_family(std::string_view text)
{
  for (auto f : {MotionFamily::constant_velocity, MotionFamily::constant_acceleration, MotionFamily::turn,
                 MotionFamily::lane_change, MotionFamily::follow}) {
    if (text == to_string(f)) return f;
  }
  return std::nullopt;
}

void validate_synth_spec(const SynthSpec & s)
{
  auto bad = [](const std::string & what) { throw ParameterError("synth spec: " + what); };
  if (s.agents_min < 1) bad("agents_min must be >= 1");
  if (s.agents_max < s.agents_min) bad("agents_max < agents_min");
  if (s.families.empty()) bad("no motion families");
  if (s.noise < 0.0) bad("noise must be >= 0");
  if (s.t_history < 2) bad("t_history must be >= 2");
  if (s.t_future < 1) bad("t_future must be >= 1");
  if (!(s.frame_rate > 0.0)) bad("frame_rate must be > 0");
  if (!(s.speed_min >= 0.0) || s.speed_max < s.speed_min) bad("invalid speed range");
  if (s.accel_max < 0.0) bad("accel_max must be >= 0");
  if (!(s.turn_radius > 0.0)) bad("turn_radius must be > 0");
  if (!(s.lane_period > 0.0)) bad("lane_period must be > 0");
  if (s.follow_lag < 1) bad("follow_lag must be >= 1");
  if (s.group_max < 2) bad("group_max must be >= 2");
  if (!(s.follow_gap >= 0.0)) bad("follow_gap must be >= 0");
  if (!(s.spawn_half_width >= 0.0) || !(s.window_half_width > 0.0)) bad("invalid spatial extents");
}

namespace
{
struct Track
{
  std::vector<Vec2> p;
};

// Closed-form single-agent families, positions relative to the start point.
Track single_track(MotionFamily family, const SynthSpec & s, std::size_t frames, Rng & rng)
{
  const double dt = 1.0 / s.frame_rate;
  const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double speed = rng.uniform(s.speed_min, s.speed_max);
  const Vec2 u{std::cos(heading), std::sin(heading)};
  const Vec2 nrm{-u.y, u.x};
  const double total = static_cast<double>(frames - 1) * dt;
  Track tr;
  tr.p.resize(frames);

  switch (family) {
    case MotionFamily::constant_velocity:
    case MotionFamily::follow: {
      for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(k) * dt;
        tr.p[k] = {u.x * speed * t, u.y * speed * t};
      }
      break;
    }
    case MotionFamily::constant_acceleration: {
      const double lo = total > 0.0 ? std::max(-s.accel_max, -speed / total) : -s.accel_max;
      const double a = rng.uniform(lo, s.accel_max);
      for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double d = speed * t + 0.5 * a * t * t;
        tr.p[k] = {u.x * d, u.y * d};
      }
      break;
    }
    case MotionFamily::turn: {
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double omega = speed / s.turn_radius;
      for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double th = heading + sign * omega * t;
        tr.p[k] = {
          sign * s.turn_radius * (std::sin(th) - std::sin(heading)),
          -sign * s.turn_radius * (std::cos(th) - std::cos(heading))};
      }
      break;
    }
    case MotionFamily::lane_change: {
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double k2 = 2.0 * std::numbers::pi / s.lane_period;
      for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double lat = s.lane_amplitude * (std::sin(k2 * t + phase) - std::sin(phase));
        tr.p[k] = {u.x * speed * t + nrm.x * lat, u.y * speed * t + nrm.y * lat};
      }
      break;
    }
  }
  return tr;
}

// A leader that starts a maneuver during the last `lag` history steps and
// followers trailing at a fixed gap that replay its per-step displacement
// j * lag steps later, so every follower maneuvers only in the future.
std::vector<Track> follow_group(const SynthSpec & s, std::size_t size, std::size_t frames, Rng & rng)
{
  const double dt = 1.0 / s.frame_rate;
  const double heading0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double speed0 = rng.uniform(s.speed_min, s.speed_max);
  const std::size_t lag = s.follow_lag;
  const std::size_t steps = frames - 1;
  // Displacement k is observed as the history velocity at frame k + 1, so the
  // leader shows between 1 and lag maneuver steps.
  const std::size_t latest = s.t_history >= 3 ? s.t_history - 2 : 1;
  const std::size_t earliest = latest >= lag ? latest + 1 - lag : 1;
  const std::size_t onset = earliest + rng.index(latest - earliest + 1);
  const bool turning = rng.bernoulli(0.5);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double omega = sign * speed0 / rng.uniform(s.turn_radius, 2.0 * s.turn_radius);
  const double horizon = static_cast<double>(steps - std::min(steps, onset)) * dt;
  const double accel_lo = horizon > 0.0 ? std::max(-s.accel_max, -speed0 / horizon) : -s.accel_max;
  const double accel = rng.uniform(accel_lo, s.accel_max);

  std::vector<Vec2> disp(steps);
  double heading = heading0;
  double speed = speed0;
  for (std::size_t k = 0; k < steps; ++k) {
    if (k >= onset) {
      if (turning) heading += omega * dt;
      else speed = std::max(0.0, speed + accel * dt);
    }
    disp[k] = {std::cos(heading) * speed * dt, std::sin(heading) * speed * dt};
  }
  const Vec2 cruise{std::cos(heading0) * speed0 * dt, std::sin(heading0) * speed0 * dt};
  const Vec2 back{-std::cos(heading0), -std::sin(heading0)};

  std::vector<Track> group(size);
  for (std::size_t j = 0; j < size; ++j) {
    const std::size_t delay = j * lag;
    const double gap = s.follow_gap * static_cast<double>(j);
    auto & p = group[j].p;
    p.resize(frames);
    p[0] = {back.x * gap, back.y * gap};
    for (std::size_t k = 0; k < steps; ++k) {
      const Vec2 d = k >= delay ? disp[k - delay] : cruise;
      p[k + 1] = {p[k].x + d.x, p[k].y + d.y};
    }
  }
  return group;
}
}  // namespace

std::vector<SceneClip> synth_scenes(const SynthSpec & spec, Rng & rng)
{
  validate_synth_spec(spec);
  const std::size_t frames = spec.t_history + spec.t_future;
  const std::size_t h = spec.t_history - 1;
  std::vector<SceneClip> clips;
  clips.reserve(spec.scenes);

  for (std::size_t s = 0; s < spec.scenes; ++s) {
    Rng r = rng.derive("scene", s);
    const std::size_t n = spec.agents_min + r.index(spec.agents_max - spec.agents_min + 1);

    std::vector<Track> tracks;
    std::vector<Vec2> anchors;
    while (tracks.size() < n) {
      const auto family = spec.families[r.index(spec.families.size())];
      std::vector<Track> group;
      if (family == MotionFamily::follow) {
        const std::size_t room = n - tracks.size();
        const std::size_t size = std::min(room, 2 + r.index(spec.group_max - 1));
        group = follow_group(spec, size, frames, r);
      } else {
        group.push_back(single_track(family, spec, frames, r));
      }
      // Place the group so its first member sits at an anchor at the last
      // history frame, away from earlier anchors when possible.
      Vec2 anchor;
      for (int attempt = 0; attempt < 64; ++attempt) {
        anchor = {r.uniform(-spec.spawn_half_width, spec.spawn_half_width),
                  r.uniform(-spec.spawn_half_width, spec.spawn_half_width)};
        const bool clear = std::all_of(anchors.begin(), anchors.end(), [&](const Vec2 & a) {
          return std::hypot(a.x - anchor.x, a.y - anchor.y) >= spec.group_separation;
        });
        if (clear) break;
      }
      anchors.push_back(anchor);
      const Vec2 shift{anchor.x - group[0].p[h].x, anchor.y - group[0].p[h].y};
      for (auto & tr : group) {
        for (auto & p : tr.p) {
          p.x += shift.x;
          p.y += shift.y;
        }
        tracks.push_back(std::move(tr));
      }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[r.index(i)]);

    SceneClip clip;
    clip.scene_id = "synth-" + std::to_string(s);
    clip.sequence_id = clip.scene_id;
    clip.t_history = spec.t_history;
    clip.t_future = spec.t_future;
    clip.frame_rate = spec.frame_rate;
    clip.unit = spec.unit;
    clip.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto & tr = tracks[order[i]];
      clip.agent_ids[i] = static_cast<long>(i + 1);
      clip.agent_types[i] = AgentType::small_vehicle;
      for (std::size_t t = 0; t < frames; ++t) {
        Vec2 p = tr.p[t];
        if (spec.noise > 0.0 && t < spec.t_history) {
          p.x += r.normal(0.0, spec.noise);
          p.y += r.normal(0.0, spec.noise);
        }
        clip.set_position(i, t, p);
        clip.set_observed(i, t, true);
      }
    }
    // Frames that leave the scene window are unobserved.
    const Vec2 ref = last_history_centroid(clip);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < frames; ++t) {
        const auto p = clip.position(i, t);
        if (std::abs(p.x - ref.x) > spec.window_half_width || std::abs(p.y - ref.y) > spec.window_half_width) {
          clip.set_observed(i, t, false);
        }
      }
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

// ---------------------------------------------------------------------------
// Train/validation split

TrainValSplit split_train_val(std::span<const SceneClip> clips, double fraction, Rng & rng)
{
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ParameterError("split_train_val: fraction must lie in (0, 1)");
  }
  std::vector<std::string> sequences;
  std::set<std::string> seen;
  for (const auto & c : clips) {
    if (seen.insert(c.sequence_id).second) sequences.push_back(c.sequence_id);
  }
  for (std::size_t i = sequences.size(); i > 1; --i) std::swap(sequences[i - 1], sequences[rng.index(i)]);

  std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(sequences.size())));
  if (sequences.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, sequences.size() - 1);
  else n_val = 0;
  const std::set<std::string> val_ids(sequences.begin(), sequences.begin() + static_cast<std::ptrdiff_t>(n_val));

  TrainValSplit out;
  for (const auto & c : clips) (val_ids.count(c.sequence_id) ? out.val : out.train).push_back(c);
  return out;
}

// ---------------------------------------------------------------------------
// Clip files

nlohmann::json clip_to_json(const SceneClip & clip)
{
  nlohmann::json agents = nlohmann::json::array();
  for (std::size_t i = 0; i < clip.num_agents(); ++i) {
    nlohmann::json xy = nlohmann::json::array();
    nlohmann::json mask = nlohmann::json::array();
    for (std::size_t t = 0; t < clip.num_frames(); ++t) {
      const auto p = clip.position(i, t);
      xy.push_back({p.x, p.y});
      mask.push_back(clip.observed(i, t) ? 1 : 0);
    }
    agents.push_back({{"id", clip.agent_ids[i]}, {"type", to_string(clip.agent_types[i])}, {"xy", xy}, {"mask", mask}});
  }
  return {
    {"schema", kClipSchema},
    {"scene_id", clip.scene_id},
    {"sequence_id", clip.sequence_id},
    {"frame_rate", clip.frame_rate},
    {"origin_frame", clip.origin_frame},
    {"unit", clip.unit},
    {"t_history", clip.t_history},
    {"t_future", clip.t_future},
    {"agents", agents},
  };
}

SceneClip clip_from_json(const nlohmann::json & j)
{
  try {
    if (j.at("schema").get<std::string>() != kClipSchema) {
      throw DataError("unsupported clip schema '" + j.at("schema").get<std::string>() + "'");
    }
    SceneClip clip;
    clip.scene_id = j.at("scene_id").get<std::string>();
    clip.sequence_id = j.value("sequence_id", clip.scene_id);
    clip.frame_rate = j.at("frame_rate").get<double>();
    clip.origin_frame = j.value("origin_frame", 0L);
    clip.unit = j.value("unit", std::string("ft"));
    clip.t_history = j.at("t_history").get<std::size_t>();
    clip.t_future = j.at("t_future").get<std::size_t>();
    const auto & agents = j.at("agents");
    clip.resize(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto & a = agents[i];
      clip.agent_ids[i] = a.at("id").get<long>();
      const auto type_name = a.at("type").get<std::string>();
      const auto type = parse_agent_type(type_name);
      if (!type) throw DataError("clip '" + clip.scene_id + "': unknown agent type '" + type_name + "'");
      clip.agent_types[i] = *type;
      const auto & xy = a.at("xy");
      const auto & mask = a.at("mask");
      if (xy.size() != clip.num_frames() || mask.size() != clip.num_frames()) {
        throw DataError("clip '" + clip.scene_id + "': agent track length does not match t_history + t_future");
      }
      for (std::size_t t = 0; t < clip.num_frames(); ++t) {
        clip.set_position(i, t, {xy[t].at(0).get<double>(), xy[t].at(1).get<double>()});
        clip.set_observed(i, t, mask[t].get<int>() != 0);
      }
    }
    return clip;
  } catch (const nlohmann::json::exception & e) {
    throw DataError(std::string("malformed clip record: ") + e.what());
  }
}

void write_clips(std::ostream & out, std::span<const SceneClip> clips)
{
  for (const auto & c : clips) out << clip_to_json(c).dump() << '\n';
}

std::vector<SceneClip> read_clips(std::istream & in)
{
  std::vector<SceneClip> clips;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception & e) {
      throw DataError("clip file line " + std::to_string(lineno) + ": " + e.what());
    }
    clips.push_back(clip_from_json(j));
  }
  return clips;
}

void save_clips(const std::filesystem::path & path, std::span<const SceneClip> clips)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write clip file " + path.string());
  write_clips(out, clips);
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<SceneClip> load_clips(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) throw DataError("cannot open clip file " + path.string());
  return read_clips(in);
}
}  // namespace grip
