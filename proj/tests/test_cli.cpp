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

// Runs the grip executable end to end.

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace
{
const fs::path kRoot = fs::temp_directory_path() / "grip_test_cli";

const std::string kTiny =
  " --set synth.agents_min=3 --set synth.agents_max=3 --t-history 4 --t-future 4 --set model.channels=4"
  " --set model.blocks=1 --set model.r=2 --set model.ensemble=1 --set model.n_max=4 --set training.epochs=2"
  " --set training.batch_size=4";

// Exit status of `grip <args>`, with stdout and stderr captured under kRoot.
int grip(const std::string & args)
{
  const std::string cmd = std::string(GRIP_CLI_PATH) + " " + args + " >" + (kRoot / "stdout.txt").string() + " 2>" +
                          (kRoot / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh(const std::string & name)
{
  const auto dir = kRoot / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path & p) { return "'" + p.string() + "'"; }

// One scene, one agent per class, two future steps at the origin.
void write_class_truth(const fs::path & p)
{
  std::ofstream out(p);
  out << R"({"schema":"grip.clip/1","scene_id":"s","sequence_id":"s","origin_frame":0,"frame_rate":2.0,)"
      << R"("unit":"ft","t_history":2,"t_future":2,"agents":[)";
  const char * types[] = {"small_vehicle", "pedestrian", "motorcyclist_bicyclist"};
  for (int i = 0; i < 3; ++i) {
    out << (i ? "," : "") << R"({"id":)" << i + 1 << R"(,"type":")" << types[i]
        << R"(","mask":[1,1,1,1],"xy":[[0,0],[0,0],[0,0],[0,0]]})";
  }
  out << "]}\n";
}
}  // namespace

TEST_CASE("synth is reproducible")
{
  const auto dir = fresh("synth");
  REQUIRE(grip("--quiet --seed 5 synth --scenes 4 -o " + q(dir / "a.jsonl")) == 0);
  REQUIRE(grip("--quiet --seed 5 synth --scenes 4 -o " + q(dir / "b.jsonl")) == 0);
  REQUIRE(grip("--quiet --seed 6 synth --scenes 4 -o " + q(dir / "c.jsonl")) == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));

  REQUIRE(grip("--out " + q(dir / "run") + " synth --scenes 3") == 0);
  CHECK(slurp(kRoot / "stdout.txt").find("wrote 3 clips") != std::string::npos);
  CHECK(fs::exists(dir / "run" / "clips.jsonl"));

  REQUIRE(grip("--quiet synth --scenes 0 -o " + q(dir / "empty.jsonl")) == 0);
  CHECK(fs::exists(dir / "empty.jsonl"));
  CHECK(slurp(dir / "empty.jsonl").empty());
}

TEST_CASE("exit codes")
{
  const auto dir = fresh("exit");
  CHECK(grip("") == 1);
  CHECK(grip("frobnicate") == 1);
  CHECK(grip("--set model.nope=1 synth --scenes 1 -o " + q(dir / "x.jsonl")) == 1);
  CHECK(slurp(kRoot / "stderr.txt").find("model.nope") != std::string::npos);
  CHECK(grip("ablate --grid " + q(dir / "missing.toml")) == 1);
  CHECK(grip("--config " + q(dir / "missing.toml") + " synth") == 1);
  CHECK(grip("predict --clips " + q(dir / "x.jsonl")) == 1);

  REQUIRE(grip("--quiet --seed 1" + kTiny + " synth --scenes 4 -o " + q(dir / "c.jsonl")) == 0);
  CHECK(grip("--quiet" + kTiny + " --set model.n_max=2 --out " + q(dir / "t") + " train --data " + q(dir / "c.jsonl")) ==
        2);
  CHECK(slurp(kRoot / "stderr.txt").find("capacity") != std::string::npos);
  CHECK(grip("predict --model " + q(dir / "missing.grip") + " --clips " + q(dir / "c.jsonl")) == 2);
}

TEST_CASE("train, predict, eval")
{
  const auto dir = fresh("pipeline");
  REQUIRE(grip("--quiet --seed 2" + kTiny + " synth --scenes 6 -o " + q(dir / "c.jsonl")) == 0);
  for (const char * run : {"t1", "t2"}) {
    REQUIRE(grip("--quiet --seed 2" + kTiny + " --out " + q(dir / run) + " train --data " + q(dir / "c.jsonl")) == 0);
  }
  CHECK(slurp(dir / "t1" / "model.grip") == slurp(dir / "t2" / "model.grip"));
  CHECK(slurp(dir / "t1" / "config.toml").find("channels = 4") != std::string::npos);

  REQUIRE(grip("--out " + q(dir / "p") + " predict --model " + q(dir / "t1" / "model.grip") + " --clips " +
               q(dir / "c.jsonl")) == 0);
  const std::string timing = slurp(dir / "p" / "timing.csv");
  CHECK(timing.find("\n1,") != std::string::npos);
  CHECK(timing.find("\n128,") != std::string::npos);
  CHECK(fs::exists(dir / "p" / "submission.txt"));

  REQUIRE(grip("--quiet --out " + q(dir / "e") + " eval --predictions " + q(dir / "p" / "predictions.csv") +
               " --truth " + q(dir / "c.jsonl")) == 0);
  const auto m = nlohmann::json::parse(slurp(dir / "e" / "metrics.json"));
  CHECK(m["agent_count"].get<int>() == 18);

  // An empty clip set predicts nothing and still succeeds.
  REQUIRE(grip("--quiet synth --scenes 0 -o " + q(dir / "none.jsonl")) == 0);
  REQUIRE(grip("--quiet --out " + q(dir / "p0") + " predict --model " + q(dir / "t1" / "model.grip") + " --clips " +
               q(dir / "none.jsonl")) == 0);
  CHECK(slurp(dir / "p0" / "predictions.csv") == "scene_id,agent_id,agent_type,step,pred_x,pred_y\n");
}

TEST_CASE("eval against hand-built truth")
{
  const auto dir = fresh("eval");
  write_class_truth(dir / "truth.jsonl");

  {
    std::ofstream out(dir / "same.csv");
    out << "scene_id,agent_id,agent_type,step,pred_x,pred_y\n";
    const char * types[] = {"small_vehicle", "pedestrian", "motorcyclist_bicyclist"};
    for (int i = 0; i < 3; ++i) {
      for (int s = 1; s <= 2; ++s) out << "s," << i + 1 << ',' << types[i] << ',' << s << ",0,0\n";
    }
  }
  REQUIRE(grip("--quiet --out " + q(dir / "zero") + " eval --predictions " + q(dir / "same.csv") + " --truth " +
               q(dir / "truth.jsonl")) == 0);
  const auto zero = nlohmann::json::parse(slurp(dir / "zero" / "metrics.json"));
  CHECK(zero["ade"].get<double>() == 0.0);
  CHECK(zero["wsade"].get<double>() == 0.0);
  CHECK(zero["wsfde"].get<double>() == 0.0);

  // Per-class step errors chosen so the class ADE/FDE are
  // vehicle 2.2400/4.0762, pedestrian 0.7142/1.3732, bicycle 1.8024/3.4155.
  {
    std::ofstream out(dir / "offset.csv");
    out << "scene_id,agent_id,agent_type,step,pred_x,pred_y\n";
    out << "s,1,small_vehicle,1,0.4038,0\ns,1,small_vehicle,2,4.0762,0\n";
    out << "s,2,pedestrian,1,0.0552,0\ns,2,pedestrian,2,1.3732,0\n";
    out << "s,3,motorcyclist_bicyclist,1,0.1893,0\ns,3,motorcyclist_bicyclist,2,3.4155,0\n";
  }
  REQUIRE(grip("--out " + q(dir / "ws") + " eval --predictions " + q(dir / "offset.csv") + " --truth " +
               q(dir / "truth.jsonl")) == 0);
  CHECK(slurp(kRoot / "stdout.txt").find("WSADE 1.2588  WSFDE 2.3631") != std::string::npos);

  {
    std::ofstream out(dir / "bad.csv");
    out << "scene_id,agent_id,agent_type,step,pred_x,pred_y\n";
    out << "s,1,small_vehicle,1,0,0\ns,1,tank,2,0,0\n";
  }
  CHECK(grip("--quiet --out " + q(dir / "bad") + " eval --predictions " + q(dir / "bad.csv") + " --truth " +
             q(dir / "truth.jsonl")) == 2);
  CHECK(slurp(kRoot / "stderr.txt").find("line 3") != std::string::npos);
  CHECK(slurp(kRoot / "stderr.txt").find("tank") != std::string::npos);
}

TEST_CASE("ablate writes one row per axis setting")
{
  const auto dir = fresh("ablate");
  {
    std::ofstream out(dir / "grid.toml");
    out << "[[run]]\nlabel = \"B2\"\nset = [\"model.ensemble=1\", \"model.blocks=10\", \"model.cell=lstm\"]\n";
  }
  REQUIRE(grip("--quiet --seed 4" + kTiny + " --set synth.scenes=6 --out " + q(dir / "out") + " ablate --grid " +
               q(dir / "grid.toml")) == 0);
  const std::string table = slurp(dir / "out" / "ablation.csv");
  CHECK(table.find("B2,1,fixed+train,velocity,10,lstm,2,yes,1,none,25,") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "dclose_sweep.csv"));
  CHECK(fs::exists(dir / "out" / "location_errors.csv"));
}
