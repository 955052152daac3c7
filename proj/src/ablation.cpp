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

#include "grip/ablation.hpp"

#include "grip/error.hpp"
#include "grip/rng.hpp"
#include "grip/train.hpp"

#include <toml.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace grip
{
namespace
{
std::vector<std::string> string_list(const toml::table & t, std::string_view key, const std::string & where)
{
  std::vector<std::string> out;
  const auto * node = t.get(key);
  if (!node) return out;
  const auto * arr = node->as_array();
  if (!arr) throw ParameterError(where + "'" + std::string(key) + "' must be an array of strings");
  for (const auto & v : *arr) {
    const auto s = v.value<std::string>();
    if (!s) throw ParameterError(where + "'" + std::string(key) + "' must be an array of strings");
    out.push_back(*s);
  }
  return out;
}

std::string format_number(double v)
{
  std::ostringstream s;
  s << v;
  return s.str();
}
}  // namespace

AblationGrid parse_ablation_grid(std::string_view text)
{
  toml::table t;
  try {
    t = toml::parse(text, std::string_view("grid"));
  } catch (const toml::parse_error & e) {
    std::ostringstream msg;
    msg << "grid parse error at line " << e.source().begin.line << ": " << e.description();
    throw ParameterError(msg.str());
  }
  for (const auto & [k, v] : t) {
    const auto key = k.str();
    if (key != "seeds" && key != "data_seed" && key != "base" && key != "dclose_sweep" && key != "run") {
      throw ParameterError("grid: unknown key '" + std::string(key) + "'");
    }
  }
  AblationGrid g;
  if (const auto * seeds = t.get("seeds")) {
    const auto * arr = seeds->as_array();
    if (!arr || arr->empty()) throw ParameterError("grid: 'seeds' must be a non-empty array of integers");
    g.seeds.clear();
    for (const auto & v : *arr) {
      const auto s = v.value<std::int64_t>();
      if (!s || *s < 0) throw ParameterError("grid: 'seeds' must hold non-negative integers");
      g.seeds.push_back(static_cast<std::uint64_t>(*s));
    }
  }
  if (const auto * ds = t.get("data_seed")) {
    const auto s = ds->value<std::int64_t>();
    if (!s || *s < 0) throw ParameterError("grid: 'data_seed' must be a non-negative integer");
    g.data_seed = static_cast<std::uint64_t>(*s);
  }
  g.base = string_list(t, "base", "grid: ");
  if (const auto * runs = t.get("run")) {
    const auto * arr = runs->as_array();
    if (!arr) throw ParameterError("grid: 'run' must be an array of tables ([[run]])");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto * entry = (*arr)[i].as_table();
      const std::string where = "grid: run " + std::to_string(i + 1) + ": ";
      if (!entry) throw ParameterError(where + "must be a table");
      AblationEntry e;
      e.label = entry->get("label") ? entry->get("label")->value<std::string>().value_or("") : "";
      if (e.label.empty()) throw ParameterError(where + "missing 'label'");
      e.overrides = string_list(*entry, "set", where);
      g.entries.push_back(std::move(e));
    }
  }
  if (const auto * sweep = t.get("dclose_sweep")) {
    const auto * arr = sweep->as_array();
    if (!arr) throw ParameterError("grid: 'dclose_sweep' must be an array of numbers");
    for (const auto & v : *arr) {
      const auto d = v.value<double>();
      if (!d) throw ParameterError("grid: 'dclose_sweep' must be an array of numbers");
      AblationEntry e;
      e.label = "d_close=" + format_number(*d);
      e.overrides = {"preprocess.d_close=" + format_number(*d)};
      e.dclose_sweep = true;
      g.entries.push_back(std::move(e));
    }
  }
  return g;
}

AblationGrid load_ablation_grid(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read grid file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_ablation_grid(text.str());
}

// ---------------------------------------------------------------------------

void LocationErrors::add(const PredictionResult & pred, const SceneClip & truth)
{
  const std::size_t th = truth.t_history, tf = truth.t_future;
  const auto fr = truth.frame_rate;
  if (horizons == 0) {
    while (static_cast<std::size_t>(std::llround(static_cast<double>(horizons + 1) * fr)) <= tf) ++horizons;
    sse.assign(bins() * horizons, 0.0);
    counts.assign(bins() * horizons, 0);
  }
  // Binning axis: mean heading of the anchored agents at the last history
  // step, through the last-history centroid.
  Vec2 dir{0.0, 0.0};
  for (std::size_t i = 0; i < truth.num_agents(); ++i) {
    if (!truth.observed(i, th - 1) || !truth.observed(i, th - 2)) continue;
    dir.x += truth.position(i, th - 1).x - truth.position(i, th - 2).x;
    dir.y += truth.position(i, th - 1).y - truth.position(i, th - 2).y;
  }
  const double norm = std::hypot(dir.x, dir.y);
  dir = norm > 1e-12 ? Vec2{dir.x / norm, dir.y / norm} : Vec2{1.0, 0.0};
  const Vec2 origin = last_history_centroid(truth);

  for (std::size_t i = 0; i < truth.num_agents(); ++i) {
    if (!truth.observed(i, th - 1)) continue;
    const Vec2 p = truth.position(i, th - 1);
    const double coord = (p.x - origin.x) * dir.x + (p.y - origin.y) * dir.y;
    if (coord < -kLocationHalfRange || coord >= kLocationHalfRange) continue;
    const auto bin = static_cast<std::size_t>((coord + kLocationHalfRange) / kLocationBinWidth);
    for (std::size_t h = 0; h < horizons; ++h) {
      const auto step = static_cast<std::size_t>(std::llround(static_cast<double>(h + 1) * fr)) - 1;
      if (!truth.observed(i, th + step)) continue;
      const Vec2 q = pred.position(i, step);
      const Vec2 g = truth.position(i, th + step);
      sse[bin * horizons + h] += (q.x - g.x) * (q.x - g.x) + (q.y - g.y) * (q.y - g.y);
      ++counts[bin * horizons + h];
    }
  }
}

void LocationErrors::merge(const LocationErrors & other)
{
  if (other.horizons == 0) return;
  if (horizons == 0) {
    *this = other;
    return;
  }
  if (other.horizons != horizons) throw DimensionError("location errors: horizon counts differ");
  for (std::size_t k = 0; k < sse.size(); ++k) {
    sse[k] += other.sse[k];
    counts[k] += other.counts[k];
  }
}

AblationResult run_ablation(const RunConfig & base, const AblationGrid & grid, const AblationProgress & progress)
{
  AblationResult result;
  const RunConfig shared = apply_overrides(base, grid.base);
  const std::uint64_t data_seed = grid.data_seed.value_or(shared.seed);

  for (const auto & entry : grid.entries) {
    for (const auto seed : grid.seeds) {
      AblationRow row;
      row.label = entry.label;
      row.seed = seed;
      row.dclose_sweep = entry.dclose_sweep;
      const auto started = std::chrono::steady_clock::now();
      try {
        std::vector<std::string> sets = entry.overrides;
        sets.push_back("seed=" + std::to_string(data_seed));
        row.config = apply_overrides(shared, sets);
        const auto clips = load_run_clips(row.config);
        if (clips.size() < 2) throw DataError("ablation needs at least two clips");
        Rng split_rng(data_seed, "split");
        const TrainValSplit split = split_train_val(clips, row.config.data.val_fraction, split_rng);

        row.config.seed = seed;
        row.config.training.seed = seed;
        GripModel model(row.config.model, seed);
        train(model, split.train, split.val, row.config.training);
        const auto preds = model.predict(split.val);
        const MetricsReport m = evaluate(preds, split.val);
        row.val_ade = m.ade;
        row.val_fde = m.fde;
        row.val_wsade = m.wsade;
        row.rmse_per_horizon = m.rmse_per_horizon;
        std::vector<PredictionResult> cv;
        for (const auto & c : split.val) cv.push_back(cv_baseline(c, row.config.eval.cv_k));
        row.cv_ade = evaluate(cv, split.val).ade;
        for (std::size_t i = 0; i < preds.size(); ++i) row.locations.add(preds[i], split.val[i]);
        row.ok = true;
      } catch (const std::exception & e) {
        row.ok = false;
        row.message = e.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (progress) progress(row);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace
{
std::size_t max_horizons(const AblationResult & r)
{
  std::size_t h = 0;
  for (const auto & row : r.rows) h = std::max(h, row.rmse_per_horizon.size());
  return h;
}

std::string csv_quote(const std::string & s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void axis_columns(std::ostream & out, const RunConfig & c)
{
  const auto & g = c.model.graph;
  out << (g.use_trainable_graph ? "fixed+train" : "fixed") << ','
      << (c.model.input_mode == InputMode::velocity ? "velocity" : "position") << ',' << g.num_blocks << ','
      << to_string(c.model.seq.cell) << ',' << c.model.seq.num_layers << ','
      << (c.model.seq.residual ? "yes" : "no") << ',' << c.model.ensemble << ','
      << (c.training.augment_rotate ? "rotate" : "none") << ',' << c.model.d_close;
}

// Entries in first-appearance order with their rows.
std::vector<std::pair<std::string, std::vector<const AblationRow *>>> group_rows(const AblationResult & r)
{
  std::vector<std::pair<std::string, std::vector<const AblationRow *>>> groups;
  for (const auto & row : r.rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto & g) { return g.first == row.label; });
    if (it == groups.end()) {
      groups.push_back({row.label, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(&row);
  }
  return groups;
}
}  // namespace

std::string ablation_table_csv(const AblationResult & r)
{
  const std::size_t horizons = max_horizons(r);
  std::ostringstream out;
  out.precision(8);
  out << "label,seed,gcn_graph,input,blocks,cell,layers,residual,ensemble,augment,d_close,"
         "val_ade,val_fde,val_wsade";
  for (std::size_t h = 1; h <= horizons; ++h) out << ",rmse_" << h << "s";
  out << ",cv_ade,status,message\n";

  for (const auto & [label, rows] : group_rows(r)) {
    std::size_t ok = 0;
    double ade = 0, fde = 0, wsade = 0, cv = 0;
    std::vector<double> rmse(horizons, 0.0);
    const RunConfig * config = nullptr;
    for (const auto * row : rows) {
      out << csv_quote(label) << ',' << row->seed << ',';
      axis_columns(out, row->config);
      if (row->ok) {
        out << ',' << row->val_ade << ',' << row->val_fde << ',' << row->val_wsade;
        for (std::size_t h = 0; h < horizons; ++h) {
          out << ',' << (h < row->rmse_per_horizon.size() ? row->rmse_per_horizon[h] : 0.0);
        }
        out << ',' << row->cv_ade << ",ok,\n";
        ++ok;
        ade += row->val_ade;
        fde += row->val_fde;
        wsade += row->val_wsade;
        cv += row->cv_ade;
        for (std::size_t h = 0; h < row->rmse_per_horizon.size(); ++h) rmse[h] += row->rmse_per_horizon[h];
        config = &row->config;
      } else {
        out << ",,,";
        for (std::size_t h = 0; h < horizons; ++h) out << ',';
        out << ",,failed," << csv_quote(row->message) << '\n';
      }
    }
    if (!ok) continue;
    const double k = static_cast<double>(ok);
    out << csv_quote(label) << ",mean,";
    axis_columns(out, *config);
    out << ',' << ade / k << ',' << fde / k << ',' << wsade / k;
    for (double v : rmse) out << ',' << v / k;
    out << ',' << cv / k << ",ok," << ok << " of " << rows.size() << " seeds\n";
  }
  return out.str();
}

std::string dclose_sweep_csv(const AblationResult & r)
{
  const std::size_t horizons = max_horizons(r);
  std::ostringstream out;
  out.precision(8);
  out << "d_close,seeds,val_ade,val_wsade";
  for (std::size_t h = 1; h <= horizons; ++h) out << ",rmse_" << h << "s";
  out << '\n';
  for (const auto & [label, rows] : group_rows(r)) {
    if (!rows.front()->dclose_sweep) continue;
    std::size_t ok = 0;
    double ade = 0, wsade = 0, d_close = 0;
    std::vector<double> rmse(horizons, 0.0);
    for (const auto * row : rows) {
      if (!row->ok) continue;
      ++ok;
      ade += row->val_ade;
      wsade += row->val_wsade;
      d_close = row->config.model.d_close;
      for (std::size_t h = 0; h < row->rmse_per_horizon.size(); ++h) rmse[h] += row->rmse_per_horizon[h];
    }
    if (!ok) continue;
    const double k = static_cast<double>(ok);
    out << d_close << ',' << ok << ',' << ade / k << ',' << wsade / k;
    for (double v : rmse) out << ',' << v / k;
    out << '\n';
  }
  return out.str();
}

std::string location_errors_csv(const AblationResult & r)
{
  std::ostringstream out;
  out.precision(8);
  out << "label,bin_lo,bin_hi,horizon_s,rmse,count\n";
  for (const auto & [label, rows] : group_rows(r)) {
    LocationErrors merged;
    for (const auto * row : rows) {
      if (row->ok) merged.merge(row->locations);
    }
    for (std::size_t b = 0; b < LocationErrors::bins(); ++b) {
      const double lo = -kLocationHalfRange + kLocationBinWidth * static_cast<double>(b);
      for (std::size_t h = 0; h < merged.horizons; ++h) {
        const std::size_t k = b * merged.horizons + h;
        const double rmse = merged.counts[k] ? std::sqrt(merged.sse[k] / static_cast<double>(merged.counts[k])) : 0.0;
        out << csv_quote(label) << ',' << lo << ',' << lo + kLocationBinWidth << ',' << h + 1 << ',' << rmse << ','
            << merged.counts[k] << '\n';
      }
    }
  }
  return out.str();
}

std::optional<double> mean_val_ade(const AblationResult & r, std::string_view label)
{
  double sum = 0.0;
  std::size_t ok = 0;
  for (const auto & row : r.rows) {
    if (row.label == label && row.ok) {
      sum += row.val_ade;
      ++ok;
    }
  }
  if (!ok) return std::nullopt;
  return sum / static_cast<double>(ok);
}
}  // namespace grip
