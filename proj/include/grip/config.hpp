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

#ifndef GRIP__CONFIG_HPP_
#define GRIP__CONFIG_HPP_

#include "grip/model.hpp"
#include "grip/scene.hpp"
#include "grip/train.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grip
{
inline constexpr const char * kOutputRootEnv = "GRIP_OUTPUT_ROOT";

enum class DataFormat { jsonl, apolloscape, csv };

std::string_view to_string(DataFormat format) noexcept;

struct DataSection
{
  std::string source = "synth";  // "synth" or "file"
  std::string path;
  DataFormat format = DataFormat::jsonl;
  double val_fraction = 0.2;
};

struct IngestSection
{
  std::size_t t_history = 6;
  std::size_t t_future = 6;
  std::size_t stride = 1;
  std::size_t downsample = 1;
  double window = 90.0;
  double frame_rate = 2.0;
  std::string unit = "ft";
  long reference_agent = -1;  // -1 windows around the centroid
};

struct EvalSection
{
  std::size_t cv_k = 1;
};

/// Everything a run needs, one TOML document. Every field has a default.
struct RunConfig
{
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: $GRIP_OUTPUT_ROOT (or "runs") / "run"
  DataSection data;
  IngestSection ingest;
  SynthSpec synth;
  ModelConfig model;
  TrainConfig training;
  EvalSection eval;

  bool operator==(const RunConfig & o) const;
};

/// Throws ParameterError naming the offending key path.
void validate(const RunConfig & config);

RunConfig parse_run_config(std::string_view toml_text);
RunConfig load_run_config(const std::filesystem::path & path);
/// Applies "a.b=value" overrides; the value is read as a TOML literal and
/// falls back to a bare string.
RunConfig apply_overrides(const RunConfig & base, std::span<const std::string> assignments);
std::string to_toml(const RunConfig & config);

std::filesystem::path resolve_output_dir(const RunConfig & config);

SegmentOptions segment_options(const RunConfig & config);
/// The synth section with the ingest horizons, rate and window applied.
SynthSpec effective_synth_spec(const RunConfig & config);

/// Loads or generates the clips a config describes.
std::vector<SceneClip> load_run_clips(const RunConfig & config);
std::vector<SceneClip> read_clip_file(
  const std::filesystem::path & path, DataFormat format, const SegmentOptions & options, std::size_t downsample);
}  // namespace grip

#endif  // GRIP__CONFIG_HPP_
