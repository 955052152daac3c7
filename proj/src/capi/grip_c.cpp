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

#include "grip/grip_c.h"

#include "grip/ablation.hpp"
#include "grip/config.hpp"
#include "grip/error.hpp"
#include "grip/model.hpp"
#include "grip/prediction_io.hpp"
#include "grip/rng.hpp"
#include "grip/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

struct grip_config
{
  grip::RunConfig value;
};

struct grip_clips
{
  std::vector<grip::SceneClip> value;
};

struct grip_model
{
  grip::GripModel value;
};

namespace
{
thread_local std::string g_last_error;

grip_status status_of(grip::ErrorKind kind)
{
  switch (kind) {
    case grip::ErrorKind::usage: return GRIP_ERR_USAGE;
    case grip::ErrorKind::parameter: return GRIP_ERR_PARAMETER;
    case grip::ErrorKind::data: return GRIP_ERR_DATA;
    case grip::ErrorKind::io: return GRIP_ERR_IO;
    case grip::ErrorKind::dimension: return GRIP_ERR_DIMENSION;
    case grip::ErrorKind::capacity: return GRIP_ERR_CAPACITY;
    case grip::ErrorKind::divergence: return GRIP_ERR_DIVERGENCE;
  }
  return GRIP_ERR_INTERNAL;
}

template <class Fn>
grip_status guarded(Fn && fn)
{
  try {
    fn();
    g_last_error.clear();
    return GRIP_OK;
  } catch (const grip::Error & e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return GRIP_ERR_INTERNAL;
  } catch (const std::exception & e) {
    g_last_error = e.what();
    return GRIP_ERR_INTERNAL;
  }
}

void require(const void * p, const char * what)
{
  if (!p) throw grip::UsageError(std::string(what) + " must not be NULL");
}

char * duplicate(const std::string & s)
{
  char * out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

class Logger
{
public:
  Logger(grip_log_fn fn, void * user) : fn_(fn), user_(user) {}
  void operator()(const std::string & line) const
  {
    if (fn_) fn_(line.c_str(), user_);
  }

private:
  grip_log_fn fn_;
  void * user_;
};

std::filesystem::path prepare_dir(const char * out_dir)
{
  require(out_dir, "out_dir");
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw grip::IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw grip::IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw grip::IoError("write failed for '" + path.string() + "'");
}

std::string fixed(double v, int digits)
{
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string machine_descriptor()
{
  std::string model = "unknown cpu";
  std::ifstream cpu("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpu, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + " (" + std::to_string(std::thread::hardware_concurrency()) + " hw threads)";
}

// Median wall time of `runs` eval-mode forward passes after `warmup` passes.
double median_ms(grip::GripModel & model, std::span<const grip::SceneClip> batch, int warmup, int runs)
{
  for (int i = 0; i < warmup; ++i) model.predict(batch);
  std::vector<double> ms;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    model.predict(batch);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  return runs % 2 ? ms[runs / 2] : 0.5 * (ms[runs / 2 - 1] + ms[runs / 2]);
}

void write_prediction_files(
  const std::filesystem::path & dir, std::span<const grip::PredictionResult> preds,
  std::span<const grip::SceneClip> clips)
{
  std::ostringstream csv, sub;
  grip::write_predictions_csv(csv, preds);
  grip::write_submission(sub, preds, clips);
  write_text(dir / "predictions.csv", csv.str());
  write_text(dir / "submission.txt", sub.str());
}
}  // namespace

extern "C" {

const char * grip_version(void) { return "1.0.0"; }

const char * grip_last_error(void) { return g_last_error.c_str(); }

const char * grip_status_name(grip_status status)
{
  switch (status) {
    case GRIP_OK: return "ok";
    case GRIP_ERR_USAGE: return "usage";
    case GRIP_ERR_PARAMETER: return "parameter";
    case GRIP_ERR_DATA: return "data";
    case GRIP_ERR_IO: return "io";
    case GRIP_ERR_DIMENSION: return "dimension";
    case GRIP_ERR_CAPACITY: return "capacity";
    case GRIP_ERR_DIVERGENCE: return "divergence";
    case GRIP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void grip_string_free(char * text) { std::free(text); }

grip_status grip_config_create(grip_config ** out)
{
  return guarded([&] {
    require(out, "out");
    *out = new grip_config{};
  });
}

grip_status grip_config_load(const char * path, grip_config ** out)
{
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new grip_config{grip::load_run_config(path)};
  });
}

grip_status grip_config_set(grip_config * config, const char * assignment)
{
  return guarded([&] {
    require(config, "config");
    require(assignment, "assignment");
    const std::vector<std::string> one{assignment};
    config->value = grip::apply_overrides(config->value, one);
  });
}

grip_status grip_config_set_many(grip_config * config, const char * const * assignments, size_t count)
{
  return guarded([&] {
    require(config, "config");
    if (count) require(assignments, "assignments");
    std::vector<std::string> all;
    for (size_t i = 0; i < count; ++i) {
      require(assignments[i], "assignment");
      all.emplace_back(assignments[i]);
    }
    config->value = grip::apply_overrides(config->value, all);
  });
}

grip_status grip_config_to_toml(const grip_config * config, char ** out)
{
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = duplicate(grip::to_toml(config->value));
  });
}

grip_status grip_config_output_dir(const grip_config * config, char ** out)
{
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = duplicate(grip::resolve_output_dir(config->value).string());
  });
}

void grip_config_free(grip_config * config) { delete config; }

grip_status grip_clips_from_config(const grip_config * config, grip_clips ** out)
{
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = new grip_clips{grip::load_run_clips(config->value)};
  });
}

grip_status grip_clips_read(const grip_config * config, const char * path, const char * format, grip_clips ** out)
{
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    require(out, "out");
    grip::DataFormat f = config->value.data.format;
    if (format) {
      const std::string_view name(format);
      if (name == "jsonl") f = grip::DataFormat::jsonl;
      else if (name == "apolloscape") f = grip::DataFormat::apolloscape;
      else if (name == "csv") f = grip::DataFormat::csv;
      else throw grip::UsageError("unknown data format '" + std::string(name) + "'");
    }
    if (!std::filesystem::exists(path)) throw grip::IoError("no such file '" + std::string(path) + "'");
    *out = new grip_clips{
      grip::read_clip_file(path, f, grip::segment_options(config->value), config->value.ingest.downsample)};
  });
}

grip_status grip_clips_synthesize(const grip_config * config, grip_clips ** out)
{
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    grip::Rng rng(config->value.seed, "synth");
    *out = new grip_clips{grip::synth_scenes(grip::effective_synth_spec(config->value), rng)};
  });
}

grip_status grip_clips_write(const grip_clips * clips, const char * path)
{
  return guarded([&] {
    require(clips, "clips");
    require(path, "path");
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(p.parent_path(), ec);
      if (ec) throw grip::IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    }
    grip::save_clips(p, clips->value);
  });
}

size_t grip_clips_count(const grip_clips * clips) { return clips ? clips->value.size() : 0; }

void grip_clips_free(grip_clips * clips) { delete clips; }

grip_status grip_train(
  const grip_config * config, const grip_clips * clips, const char * out_dir, grip_log_fn log_fn, void * user)
{
  return guarded([&] {
    require(config, "config");
    require(clips, "clips");
    const Logger log(log_fn, user);
    const auto & cfg = config->value;
    const auto dir = prepare_dir(out_dir);
    write_text(dir / "config.toml", grip::to_toml(cfg));
    if (clips->value.empty()) throw grip::DataError("train: no clips");

    grip::Rng split_rng(cfg.seed, "split");
    const auto split = clips->value.size() >= 2
                         ? grip::split_train_val(clips->value, cfg.data.val_fraction, split_rng)
                         : grip::TrainValSplit{clips->value, {}};
    log("train: " + std::to_string(split.train.size()) + " clips, validation: " + std::to_string(split.val.size()) +
        " clips");

    grip::GripModel model(cfg.model, cfg.seed);
    const auto history = grip::train(model, split.train, split.val, cfg.training, [&](const grip::EpochRecord & r) {
      log("epoch " + std::to_string(r.epoch) + " train_loss " + fixed(r.train_loss, 5) + " val_loss " +
          fixed(r.val_loss, 5) + " val_WSADE " + fixed(r.val_wsade, 5) + " (" + fixed(r.wall_seconds, 2) + " s)");
      return true;
    });
    write_text(dir / "train_log.csv", grip::training_log_csv(history));
    nlohmann::json extra;
    extra["best_epoch"] = history.best_epoch;
    extra["best_val_loss"] = history.best_val_loss;
    extra["seed"] = cfg.seed;
    model.save(dir / "model.grip", extra);
    log("best epoch " + std::to_string(history.best_epoch) + ", checkpoint " + (dir / "model.grip").string());
  });
}

grip_status grip_model_load(const char * path, grip_model ** out)
{
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new grip_model{grip::GripModel::load(path)};
  });
}

void grip_model_free(grip_model * model) { delete model; }

grip_status grip_predict(
  grip_model * model, const grip_clips * clips, const char * out_dir, int timing, grip_log_fn log_fn, void * user)
{
  return guarded([&] {
    require(model, "model");
    require(clips, "clips");
    const Logger log(log_fn, user);
    const auto dir = prepare_dir(out_dir);
    auto & m = model->value;
    const auto & data = clips->value;
    const auto preds = m.predict(data);
    write_prediction_files(dir, preds, data);
    log("predicted " + std::to_string(preds.size()) + " scenes");

    if (!timing) return;
    if (data.empty()) {
      log("timing skipped: no clips");
      return;
    }
    constexpr int kWarmup = 3;
    constexpr int kRuns = 20;
    std::ostringstream csv;
    csv << "batch_size,median_ms,per_scene_ms,runs,agents_per_scene,machine\n";
    for (const std::size_t batch : {std::size_t{1}, std::size_t{128}}) {
      std::vector<grip::SceneClip> chunk;
      for (std::size_t i = 0; i < batch; ++i) chunk.push_back(data[i % data.size()]);
      const double ms = median_ms(m, chunk, kWarmup, kRuns);
      double agents = 0.0;
      for (const auto & c : chunk) agents += static_cast<double>(c.num_agents());
      csv << batch << ',' << fixed(ms, 3) << ',' << fixed(ms / static_cast<double>(batch), 4) << ',' << kRuns << ','
          << fixed(agents / static_cast<double>(batch), 1) << ",\"" << machine_descriptor() << "\"\n";
      log("batch " + std::to_string(batch) + ": median " + fixed(ms, 3) + " ms over " + std::to_string(kRuns) +
          " warm runs");
    }
    write_text(dir / "timing.csv", csv.str());
  });
}

grip_status grip_predict_cv(const grip_clips * clips, size_t k, const char * out_dir, grip_log_fn log_fn, void * user)
{
  return guarded([&] {
    require(clips, "clips");
    const Logger log(log_fn, user);
    const auto dir = prepare_dir(out_dir);
    std::vector<grip::PredictionResult> preds;
    for (const auto & c : clips->value) preds.push_back(grip::cv_baseline(c, k));
    write_prediction_files(dir, preds, clips->value);
    log("constant-velocity predictions for " + std::to_string(preds.size()) + " scenes");
  });
}

grip_status grip_eval(
  const char * predictions_csv, const grip_clips * truth, const char * out_dir, grip_log_fn log_fn, void * user)
{
  return guarded([&] {
    require(predictions_csv, "predictions_csv");
    require(truth, "truth");
    const Logger log(log_fn, user);
    std::ifstream in(predictions_csv);
    if (!in) throw grip::IoError("cannot read '" + std::string(predictions_csv) + "'");
    const auto rows = grip::read_predictions_csv(in);
    const auto preds = grip::match_predictions(rows, truth->value);
    const auto report = grip::evaluate(preds, truth->value);
    const auto dir = prepare_dir(out_dir);
    write_text(dir / "metrics.json", grip::to_json(report).dump(2) + "\n");
    write_text(dir / "metrics.csv", grip::metrics_csv(report));
    for (const auto & w : report.warnings) log("warning: " + w);
    log("ADE " + fixed(report.ade, 4) + "  FDE " + fixed(report.fde, 4) + "  WSADE " + fixed(report.wsade, 4) +
        "  WSFDE " + fixed(report.wsfde, 4));
  });
}

grip_status grip_ablate(
  const grip_config * config, const char * grid_path, const char * out_dir, grip_log_fn log_fn, void * user)
{
  return guarded([&] {
    require(config, "config");
    require(grid_path, "grid_path");
    const Logger log(log_fn, user);
    const auto grid = grip::load_ablation_grid(grid_path);
    const auto dir = prepare_dir(out_dir);
    write_text(dir / "config.toml", grip::to_toml(config->value));
    const auto result = grip::run_ablation(config->value, grid, [&](const grip::AblationRow & row) {
      if (row.ok) {
        log(row.label + " seed " + std::to_string(row.seed) + ": val ADE " + fixed(row.val_ade, 4) + " (CV " +
            fixed(row.cv_ade, 4) + ", " + fixed(row.seconds, 1) + " s)");
      } else {
        log(row.label + " seed " + std::to_string(row.seed) + ": FAILED: " + row.message);
      }
    });
    write_text(dir / "ablation.csv", grip::ablation_table_csv(result));
    write_text(dir / "dclose_sweep.csv", grip::dclose_sweep_csv(result));
    write_text(dir / "location_errors.csv", grip::location_errors_csv(result));
  });
}

}  // extern "C"
