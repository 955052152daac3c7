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

#ifndef GRIP__SCENE_HPP_
#define GRIP__SCENE_HPP_

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grip
{
class Rng;

enum class AgentType {
  small_vehicle,
  big_vehicle,
  pedestrian,
  motorcyclist_bicyclist,
  other,
};

std::string_view to_string(AgentType type) noexcept;
/// Accepts the enum names and the ApolloScape integer codes 1..5.
std::optional<AgentType> parse_agent_type(std::string_view text);

/// Metric classes used by the weighted displacement errors.
enum class AgentClass { vehicle, pedestrian, bicycle, other };

AgentClass agent_class(AgentType type) noexcept;
std::string_view to_string(AgentClass cls) noexcept;

struct Vec2
{
  double x = 0.0;
  double y = 0.0;
};

struct AgentRecord
{
  long frame_id = 0;
  long agent_id = 0;
  AgentType type = AgentType::other;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> z;
  std::optional<double> length;
  std::optional<double> width;
  std::optional<double> height;
  std::optional<double> heading;
};

struct ParseIssue
{
  std::size_t line = 0;
  std::string message;
};

struct ParseResult
{
  std::vector<AgentRecord> records;
  std::vector<ParseIssue> issues;
};

/// Whitespace-separated lines: frame_id object_id object_type x y z length
/// width height heading. In strict mode the first malformed line throws.
ParseResult parse_apolloscape(std::istream & in, bool strict = false);
/// Comma-separated with a header naming at least frame_id, agent_id,
/// agent_type, x, y (any order, extra columns ignored).
ParseResult parse_csv(std::istream & in, bool strict = false);

/// One training/evaluation sample: every agent of a scene over t_h + t_f
/// consecutive frames.
struct SceneClip
{
  std::string scene_id;
  std::string sequence_id;
  std::vector<long> agent_ids;
  std::vector<AgentType> agent_types;
  std::size_t t_history = 0;
  std::size_t t_future = 0;
  std::vector<double> positions;    // n x (t_h + t_f) x 2
  std::vector<std::uint8_t> mask;   // n x (t_h + t_f)
  double frame_rate = 2.0;
  long origin_frame = 0;
  std::string unit = "ft";

  std::size_t num_agents() const noexcept { return agent_ids.size(); }
  std::size_t num_frames() const noexcept { return t_history + t_future; }

  Vec2 position(std::size_t agent, std::size_t frame) const;
  void set_position(std::size_t agent, std::size_t frame, Vec2 p);
  bool observed(std::size_t agent, std::size_t frame) const;
  void set_observed(std::size_t agent, std::size_t frame, bool flag);

  /// Allocates storage for n agents with everything unobserved.
  void resize(std::size_t n);

  bool operator==(const SceneClip &) const = default;
};

/// Throws DataError naming the first violated SceneClip invariant. The window
/// is checked around `reference` when given, else around the centroid of the
/// agents at the last history frame.
void validate_clip(
  const SceneClip & clip, double window_half_width, std::optional<Vec2> reference = std::nullopt);

Vec2 last_history_centroid(const SceneClip & clip);

struct SegmentOptions
{
  std::size_t t_history = 6;
  std::size_t t_future = 6;
  std::size_t stride = 1;
  double window_half_width = 90.0;
  /// Window around this agent instead of the last-history centroid.
  std::optional<long> reference_agent;
  double frame_rate = 2.0;
  std::string unit = "m";
  std::string sequence_id = "seq";
};

std::vector<SceneClip> segment_clips(std::span<const AgentRecord> records, const SegmentOptions & options);

/// Keeps every factor-th frame counted from the first one and renumbers the
/// kept frames 0, 1, 2, ...
std::vector<AgentRecord> downsample(std::span<const AgentRecord> records, std::size_t factor);

enum class MotionFamily {
  constant_velocity,
  constant_acceleration,
  turn,
  lane_change,
  /// Leader/follower chains: follower k replays the leader's velocity k * lag
  /// steps later from a fixed gap behind it, so its near future is visible
  /// only in the leader's history.
  follow,
};

std::string_view to_string(MotionFamily family) noexcept;
std::optional<MotionFamily> parse_motion_family(std::string_view text);

struct SynthSpec
{
  std::size_t scenes = 50;
  std::size_t agents_min = 10;
  std::size_t agents_max = 10;
  std::vector<MotionFamily> families{MotionFamily::constant_velocity};
  double noise = 0.0;  // gaussian sigma on observed history positions
  std::size_t t_history = 6;
  std::size_t t_future = 6;
  double frame_rate = 2.0;
  double speed_min = 4.0;  // units per second
  double speed_max = 12.0;
  double accel_max = 1.5;  // units per second^2
  double turn_radius = 20.0;
  double lane_amplitude = 3.0;
  double lane_period = 4.0;  // seconds
  std::size_t follow_lag = 2;
  double follow_gap = 10.0;  // spacing between consecutive group members
  std::size_t group_max = 4;  // leader plus followers
  double spawn_half_width = 45.0;
  double group_separation = 35.0;
  double window_half_width = 90.0;
  std::string unit = "ft";
};

void validate_synth_spec(const SynthSpec & spec);
std::vector<SceneClip> synth_scenes(const SynthSpec & spec, Rng & rng);

struct TrainValSplit
{
  std::vector<SceneClip> train;
  std::vector<SceneClip> val;
};

/// Partition at sequence granularity: every clip of a sequence lands on the
/// same side.
TrainValSplit split_train_val(std::span<const SceneClip> clips, double fraction, Rng & rng);

inline constexpr std::string_view kClipSchema = "grip.clip/1";

nlohmann::json clip_to_json(const SceneClip & clip);
SceneClip clip_from_json(const nlohmann::json & j);
void write_clips(std::ostream & out, std::span<const SceneClip> clips);
std::vector<SceneClip> read_clips(std::istream & in);
void save_clips(const std::filesystem::path & path, std::span<const SceneClip> clips);
std::vector<SceneClip> load_clips(const std::filesystem::path & path);
}  // namespace grip

#endif  // GRIP__SCENE_HPP_
