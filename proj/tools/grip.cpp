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

// Command-line front end. Talks to the engine only through grip_c.h.

#include "grip/grip_c.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{
enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

int exit_code(grip_status s)
{
  switch (s) {
    case GRIP_OK: return kOk;
    case GRIP_ERR_USAGE:
    case GRIP_ERR_PARAMETER: return kUsage;
    case GRIP_ERR_DATA:
    case GRIP_ERR_IO:
    case GRIP_ERR_DIMENSION:
    case GRIP_ERR_CAPACITY: return kData;
    default: return kRuntime;
  }
}

struct Failure
{
  grip_status status;
};

void check(grip_status s)
{
  if (s != GRIP_OK) throw Failure{s};
}

void print_line(const char * line, void * user)
{
  if (!*static_cast<bool *>(user)) std::printf("%s\n", line);
  std::fflush(stdout);
}

struct Globals
{
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::string out;
  bool quiet = false;
  // ingest
  std::string format;
  std::optional<long> t_history, t_future, downsample;
  std::optional<double> window, frame_rate;
};

class Config
{
public:
  explicit Config(const Globals & g)
  {
    check(g.config_path.empty() ? grip_config_create(&c_) : grip_config_load(g.config_path.c_str(), &c_));
    std::vector<std::string> sets;
    if (g.seed) sets.push_back("seed=" + std::to_string(*g.seed));
    if (!g.out.empty()) sets.push_back("output_dir=\"" + g.out + "\"");
    if (!g.format.empty()) sets.push_back("data.format=\"" + g.format + "\"");
    if (g.t_history) sets.push_back("ingest.t_history=" + std::to_string(*g.t_history));
    if (g.t_future) sets.push_back("ingest.t_future=" + std::to_string(*g.t_future));
    if (g.downsample) sets.push_back("ingest.downsample=" + std::to_string(*g.downsample));
    if (g.window) sets.push_back("ingest.window=" + std::to_string(*g.window));
    if (g.frame_rate) sets.push_back("ingest.frame_rate=" + std::to_string(*g.frame_rate));
    sets.insert(sets.end(), g.sets.begin(), g.sets.end());
    set(sets);
  }
  ~Config() { grip_config_free(c_); }
  Config(const Config &) = delete;
  Config & operator=(const Config &) = delete;

  void set(const std::vector<std::string> & assignments)
  {
    std::vector<const char *> raw;
    for (const auto & a : assignments) raw.push_back(a.c_str());
    check(grip_config_set_many(c_, raw.data(), raw.size()));
  }
  grip_config * get() const { return c_; }

  std::string output_dir() const { return take(grip_config_output_dir(c_, nullptr_out())); }
  std::string toml() const { return take(grip_config_to_toml(c_, nullptr_out())); }

  void echo(const std::filesystem::path & dir) const
  {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.toml") << toml();
  }

private:
  char ** nullptr_out() const
  {
    buffer_ = nullptr;
    return &buffer_;
  }
  std::string take(grip_status s) const
  {
    check(s);
    std::string out(buffer_);
    grip_string_free(buffer_);
    buffer_ = nullptr;
    return out;
  }

  grip_config * c_ = nullptr;
  mutable char * buffer_ = nullptr;
};

class Clips
{
public:
  Clips() = default;
  ~Clips() { grip_clips_free(c_); }
  Clips(const Clips &) = delete;
  Clips & operator=(const Clips &) = delete;
  grip_clips ** out() { return &c_; }
  const grip_clips * get() const { return c_; }

private:
  grip_clips * c_ = nullptr;
};

const char * format_or_null(const Globals & g) { return g.format.empty() ? nullptr : g.format.c_str(); }
}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"GRIP++ trajectory prediction engine"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", grip_version());

  Globals g;
  app.add_option("--config", g.config_path, "run configuration (TOML)");
  app.add_option("--set", g.sets, "override a config key, KEY=VALUE (repeatable)");
  app.add_option("--seed", g.seed, "run seed");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--quiet", g.quiet, "suppress progress output");
  app.add_option("--format", g.format, "input format: jsonl, apolloscape, csv");
  app.add_option("--t-history", g.t_history, "history frames per clip");
  app.add_option("--t-future", g.t_future, "future frames per clip");
  app.add_option("--downsample", g.downsample, "keep every n-th frame of raw input");
  app.add_option("--window", g.window, "scene window half width");
  app.add_option("--frame-rate", g.frame_rate, "frames per second after downsampling");

  auto * synth = app.add_subcommand("synth", "generate synthetic clips");
  std::optional<long> scenes, agents, agents_min, agents_max;
  std::vector<std::string> families;
  std::optional<double> radius, noise;
  std::string synth_output;
  synth->add_option("--scenes", scenes, "number of scenes");
  synth->add_option("--agents", agents, "agents per scene");
  synth->add_option("--agents-min", agents_min);
  synth->add_option("--agents-max", agents_max);
  synth->add_option("--family", families, "motion family: cv, ca, turn, lane_change, follow")->delimiter(',');
  synth->add_option("--radius", radius, "turn radius");
  synth->add_option("--noise", noise, "history position noise (std dev)");
  synth->add_option("-o,--output", synth_output, "clip file (default: <out>/clips.jsonl)");

  auto * train = app.add_subcommand("train", "train a model");
  std::string train_data;
  train->add_option("--data", train_data, "clip file (default: the config's data section)");

  auto * predict = app.add_subcommand("predict", "predict future trajectories");
  std::string model_path, clips_path, baseline;
  bool no_timing = false;
  long cv_k = 1;
  predict->add_option("--model", model_path, "checkpoint written by train");
  predict->add_option("--clips", clips_path, "clip file")->required();
  predict->add_option("--baseline", baseline, "use a baseline instead of a model: cv")->check(CLI::IsMember({"cv"}));
  predict->add_option("--cv-k", cv_k, "velocity steps averaged by the cv baseline");
  predict->add_flag("--no-timing", no_timing, "skip the batch-1/batch-128 timing report");

  auto * eval = app.add_subcommand("eval", "score predictions against ground truth");
  std::string predictions_path, truth_path;
  eval->add_option("--predictions", predictions_path, "predictions.csv")->required();
  eval->add_option("--truth", truth_path, "ground-truth clip file")->required();

  auto * ablate = app.add_subcommand("ablate", "run an ablation grid");
  std::string grid_path;
  ablate->add_option("--grid", grid_path, "grid file (TOML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  bool quiet = g.quiet;
  try {
    Config config(g);
    const std::filesystem::path out_dir = config.output_dir();

    if (synth->parsed()) {
      std::vector<std::string> sets;
      if (scenes) sets.push_back("synth.scenes=" + std::to_string(*scenes));
      if (agents) {
        sets.push_back("synth.agents_min=" + std::to_string(*agents));
        sets.push_back("synth.agents_max=" + std::to_string(*agents));
      }
      if (agents_min) sets.push_back("synth.agents_min=" + std::to_string(*agents_min));
      if (agents_max) sets.push_back("synth.agents_max=" + std::to_string(*agents_max));
      if (!families.empty()) {
        std::string list = "synth.families=[";
        for (std::size_t i = 0; i < families.size(); ++i) list += (i ? ",\"" : "\"") + families[i] + "\"";
        sets.push_back(list + "]");
      }
      if (radius) sets.push_back("synth.turn_radius=" + std::to_string(*radius));
      if (noise) sets.push_back("synth.noise=" + std::to_string(*noise));
      config.set(sets);
      const std::filesystem::path target = synth_output.empty() ? out_dir / "clips.jsonl" : std::filesystem::path(synth_output);
      Clips clips;
      check(grip_clips_synthesize(config.get(), clips.out()));
      check(grip_clips_write(clips.get(), target.string().c_str()));
      print_line(("wrote " + std::to_string(grip_clips_count(clips.get())) + " clips to " + target.string()).c_str(), &quiet);
    } else if (train->parsed()) {
      Clips clips;
      if (train_data.empty()) check(grip_clips_from_config(config.get(), clips.out()));
      else check(grip_clips_read(config.get(), train_data.c_str(), format_or_null(g), clips.out()));
      check(grip_train(config.get(), clips.get(), out_dir.string().c_str(), print_line, &quiet));
    } else if (predict->parsed()) {
      if (baseline.empty() && model_path.empty()) {
        std::fprintf(stderr, "error: predict needs --model or --baseline cv\n");
        return kUsage;
      }
      Clips clips;
      check(grip_clips_read(config.get(), clips_path.c_str(), format_or_null(g), clips.out()));
      if (baseline == "cv") {
        check(grip_predict_cv(clips.get(), static_cast<size_t>(cv_k), out_dir.string().c_str(), print_line, &quiet));
      } else {
        grip_model * model = nullptr;
        check(grip_model_load(model_path.c_str(), &model));
        const grip_status s =
          grip_predict(model, clips.get(), out_dir.string().c_str(), no_timing ? 0 : 1, print_line, &quiet);
        grip_model_free(model);
        check(s);
      }
      config.echo(out_dir);
    } else if (eval->parsed()) {
      Clips truth;
      check(grip_clips_read(config.get(), truth_path.c_str(), format_or_null(g), truth.out()));
      check(grip_eval(predictions_path.c_str(), truth.get(), out_dir.string().c_str(), print_line, &quiet));
      config.echo(out_dir);
    } else if (ablate->parsed()) {
      check(grip_ablate(config.get(), grid_path.c_str(), out_dir.string().c_str(), print_line, &quiet));
    }
  } catch (const Failure & f) {
    std::fprintf(stderr, "error (%s): %s\n", grip_status_name(f.status), grip_last_error());
    return exit_code(f.status);
  } catch (const std::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
