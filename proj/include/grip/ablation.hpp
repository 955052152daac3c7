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

#ifndef GRIP__ABLATION_HPP_
#define GRIP__ABLATION_HPP_

#include "grip/config.hpp"
#include "grip/model.hpp"
#include "grip/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grip
{
struct AblationEntry
{
  std::string label;
  std::vector<std::string> overrides;  // "key=value", applied after the grid base
  bool dclose_sweep = false;
};

/// Grid file (TOML):
///   seeds = [1, 2, 3]          # model/training seeds, default [1]
///   data_seed = 7              # optional, default: the base config seed
///   base = ["model.r=10"]      # overrides applied to every entry
///   dclose_sweep = [0, 25, 50] # optional, adds one entry per value
///   [[run]]
///   label = "B6"
///   set = ["model.trainable_graph=false"]
struct AblationGrid
{
  std::vector<std::uint64_t> seeds{1};
  std::optional<std::uint64_t> data_seed;
  std::vector<std::string> base;
  std::vector<AblationEntry> entries;
};

AblationGrid parse_ablation_grid(std::string_view toml_text);
/// A missing file is a UsageError.
AblationGrid load_ablation_grid(const std::filesystem::path & path);

inline constexpr double kLocationBinWidth = 15.0;
inline constexpr double kLocationHalfRange = 90.0;

/// Squared-error sums per (location bin, future second).
struct LocationErrors
{
  std::size_t horizons = 0;
  std::vector<double> sse;           // bins x horizons
  std::vector<std::size_t> counts;   // bins x horizons

  static std::size_t bins() { return static_cast<std::size_t>(2.0 * kLocationHalfRange / kLocationBinWidth); }
  void add(const PredictionResult & pred, const SceneClip & truth);
  void merge(const LocationErrors & other);
};

struct AblationRow
{
  std::string label;
  std::uint64_t seed = 0;
  bool dclose_sweep = false;
  RunConfig config;
  bool ok = false;
  std::string message;
  double val_ade = 0.0;
  double val_fde = 0.0;
  double val_wsade = 0.0;
  std::vector<double> rmse_per_horizon;
  double cv_ade = 0.0;
  double seconds = 0.0;
  LocationErrors locations;
};

struct AblationResult
{
  std::vector<AblationRow> rows;
};

using AblationProgress = std::function<void(const AblationRow &)>;

/// Trains and evaluates every (entry, seed). Clips come from `base` with the
/// data seed; model and training use the row seed. A failing row is recorded
/// and the grid continues.
AblationResult run_ablation(const RunConfig & base, const AblationGrid & grid, const AblationProgress & progress = {});

/// One row per (entry, seed) plus a mean row per entry, with the
/// model configuration axes as columns.
std::string ablation_table_csv(const AblationResult & result);
std::string dclose_sweep_csv(const AblationResult & result);
std::string location_errors_csv(const AblationResult & result);

/// Mean validation ADE of an entry over its successful seeds.
std::optional<double> mean_val_ade(const AblationResult & result, std::string_view label);
}  // namespace grip

#endif  // GRIP__ABLATION_HPP_
