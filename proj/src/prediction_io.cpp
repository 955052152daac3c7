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

#include "grip/prediction_io.hpp"

#include "grip/error.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace grip
{
void write_predictions_csv(std::ostream & out, std::span<const PredictionResult> preds)
{
  out << "scene_id,agent_id,agent_type,step,pred_x,pred_y\n";
  out.precision(17);
  for (const auto & p : preds) {
    for (std::size_t i = 0; i < p.num_agents(); ++i) {
      for (std::size_t s = 0; s < p.t_future; ++s) {
        const Vec2 q = p.position(i, s);
        out << p.scene_id << ',' << p.agent_ids[i] << ',' << to_string(p.agent_types[i]) << ',' << s + 1 << ','
            << q.x << ',' << q.y << '\n';
      }
    }
  }
}

void write_submission(std::ostream & out, std::span<const PredictionResult> preds, std::span<const SceneClip> clips)
{
  if (preds.size() != clips.size()) throw UsageError("write_submission: prediction and clip counts differ");
  out.precision(10);
  for (std::size_t c = 0; c < preds.size(); ++c) {
    const auto & p = preds[c];
    const auto & clip = clips[c];
    for (std::size_t s = 0; s < p.t_future; ++s) {
      const long frame = clip.origin_frame + static_cast<long>(clip.t_history + s);
      for (std::size_t i = 0; i < p.num_agents(); ++i) {
        const Vec2 q = p.position(i, s);
        out << frame << ' ' << p.agent_ids[i] << ' ' << static_cast<int>(p.agent_types[i]) + 1 << ' ' << q.x << ' '
            << q.y << '\n';
      }
    }
  }
}

namespace
{
std::vector<std::string> split_csv(const std::string & line)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
bool parse_number(const std::string & s, T & out)
{
  const char * end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}
}  // namespace

std::vector<PredictionRow> read_predictions_csv(std::istream & in)
{
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t number = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("scene_id,", 0) != 0) {
        throw DataError("predictions line 1: expected header scene_id,agent_id,agent_type,step,pred_x,pred_y");
      }
      continue;
    }
    const auto f = split_csv(line);
    const std::string where = "predictions line " + std::to_string(number) + ": ";
    if (f.size() != 6) throw DataError(where + "expected 6 fields, got " + std::to_string(f.size()));
    PredictionRow r;
    r.line = number;
    r.scene_id = f[0];
    if (!parse_number(f[1], r.agent_id)) throw DataError(where + "invalid agent_id '" + f[1] + "'");
    const auto type = parse_agent_type(f[2]);
    if (!type) throw DataError(where + "unknown agent_type '" + f[2] + "'");
    r.type = *type;
    if (!parse_number(f[3], r.step) || r.step < 1) throw DataError(where + "invalid step '" + f[3] + "'");
    if (!parse_number(f[4], r.x) || !parse_number(f[5], r.y)) throw DataError(where + "invalid coordinates");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<PredictionResult> match_predictions(std::span<const PredictionRow> rows, std::span<const SceneClip> truth)
{
  using Key = std::pair<std::string, long>;
  std::map<Key, std::vector<const PredictionRow *>> by_agent;
  for (const auto & r : rows) by_agent[{r.scene_id, r.agent_id}].push_back(&r);

  std::set<Key> expected;
  for (const auto & c : truth) {
    for (long id : c.agent_ids) expected.insert({c.scene_id, id});
  }
  std::vector<std::string> missing, extra;
  auto name = [](const Key & k) { return k.first + "/" + std::to_string(k.second); };
  for (const auto & k : expected) {
    if (!by_agent.count(k)) missing.push_back(name(k));
  }
  for (const auto & [k, _] : by_agent) {
    if (!expected.count(k)) extra.push_back(name(k));
  }
  if (!missing.empty() || !extra.empty()) {
    auto list = [](const std::vector<std::string> & v) {
      std::string s;
      for (std::size_t i = 0; i < v.size() && i < 20; ++i) s += (i ? ", " : "") + v[i];
      if (v.size() > 20) s += ", ... (" + std::to_string(v.size()) + " total)";
      return s;
    };
    std::string msg = "prediction ids do not match the ground truth";
    if (!missing.empty()) msg += "; missing: " + list(missing);
    if (!extra.empty()) msg += "; extra: " + list(extra);
    throw DataError(msg);
  }

  std::vector<PredictionResult> out;
  out.reserve(truth.size());
  for (const auto & c : truth) {
    PredictionResult p;
    p.scene_id = c.scene_id;
    p.agent_ids = c.agent_ids;
    p.agent_types = c.agent_types;
    p.t_future = c.t_future;
    p.positions.assign(c.num_agents() * c.t_future * 2, 0.0);
    for (std::size_t i = 0; i < c.num_agents(); ++i) {
      std::vector<bool> seen(c.t_future, false);
      for (const auto * r : by_agent.at({c.scene_id, c.agent_ids[i]})) {
        const std::string where = "predictions line " + std::to_string(r->line) + ": ";
        if (r->step > c.t_future) throw DataError(where + "step " + std::to_string(r->step) + " beyond t_future");
        if (seen[r->step - 1]) throw DataError(where + "duplicate step " + std::to_string(r->step));
        if (r->type != c.agent_types[i]) {
          throw DataError(where + "agent_type '" + std::string(to_string(r->type)) + "' differs from the truth '" +
                          std::string(to_string(c.agent_types[i])) + "'");
        }
        seen[r->step - 1] = true;
        p.positions[(i * c.t_future + r->step - 1) * 2] = r->x;
        p.positions[(i * c.t_future + r->step - 1) * 2 + 1] = r->y;
      }
      for (std::size_t s = 0; s < c.t_future; ++s) {
        if (!seen[s]) {
          throw DataError("predictions for " + c.scene_id + "/" + std::to_string(c.agent_ids[i]) + " lack step " +
                          std::to_string(s + 1));
        }
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}
}  // namespace grip
