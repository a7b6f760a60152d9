/*
 * Copyright (C) 2026 The etmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "etmpc/config.hpp"
#include "etmpc/csv.hpp"
#include "etmpc/terminal_io.hpp"

using namespace etmpc;
namespace fs = std::filesystem;

namespace {

const char* kLinear = R"(name: small
seed: 5
model:
  type: linear
  dt: 0.2
  A: [[1.0, 0.2], [0.0, 1.0]]
  B: [[0.02], [0.2]]
  state_bounds: [25.0, 25.0]
  input_bounds: [25.0]
fleet:
  systems: 3
  budget: 1
  duration: 20
  initial_box: [2.0, 0.5]
disturbance:
  w_hat: 0.01
controller:
  horizon: 8
  epsilon: 0.05
  Q: [1.0, 1.0]
  R: [1.0]
  lipschitz: spectral
sweep:
  w_hat: [0.0, 0.01]
  budgets: [1, 3]
  runs: 2
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("etmpc_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ETMPC_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  if (at != std::string::npos) s.replace(at, from.size(), to);
  return s;
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  CsvTable t;
  t.columns = {"i", "j", "result"};
  t.rows = {{1, 1, 0.1}, {1, 2, 1.0 / 3.0}, {2, 1, 1e-300}, {2, 2, -123456.789}};
  std::stringstream ss;
  write_csv(ss, t);
  const auto back = read_csv(ss);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("result"), 2);
  EXPECT_EQ(back.column_values("j"), std::vector<double>({1, 2, 1, 2}));
}

TEST(Csv, MalformedRowNamesTheLine) {
  std::stringstream ss("a,b\n1,2\n3\n");
  try {
    read_csv(ss);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::stringstream bad("a,b\n1,x\n");
  EXPECT_THROW(read_csv(bad), ConfigError);
}

TEST(Csv, TraceColumns) {
  SimTrace t;
  t.systems = 2;
  t.budget = 1;
  t.dt = 0.1;
  t.position_indices = {0, 1, 2};
  for (int s = 0; s < 3; ++s) {
    StepRecord r;
    r.step = s;
    r.time = 0.1 * s;
    r.states = {Vector::Constant(13, s), Vector::Constant(13, -s)};
    r.selected = {s % 2};
    r.priorities = {0.0, 0.0};
    t.steps.push_back(r);
  }
  const auto tab = trace_table(t);
  EXPECT_EQ(tab.columns, std::vector<std::string>({"time", "quad_0_0", "quad_0_1", "quad_0_2", "quad_1_0",
                                                   "quad_1_1", "quad_1_2", "selected_0"}));
  EXPECT_EQ(tab.rows[1][7], 2.0);  // 1-based
  EXPECT_EQ(tab.rows[2][4], -2.0);
}

TEST(Config, ParsesTheShippedConfigs) {
  for (const char* name : {"linear_oracle.cfg", "fig2.cfg", "fig3.cfg"}) {
    const auto c = load_config(std::string(ETMPC_CONFIG_DIR) + "/" + name);
    EXPECT_GE(c.systems, c.budget) << name;
  }
  const auto f3 = load_config(std::string(ETMPC_CONFIG_DIR) + "/fig3.cfg");
  ASSERT_TRUE(f3.sweep && f3.desk_sweep);
  EXPECT_EQ(f3.sweep->w_hat_values.size(), 10u);
  EXPECT_EQ(f3.sweep->runs, 20);
  EXPECT_EQ(f3.desk_sweep->budgets, std::vector<int>({1, 4, 7, 10}));
  const auto f2 = load_config(std::string(ETMPC_CONFIG_DIR) + "/fig2.cfg");
  EXPECT_EQ(f2.disturbance.per_system_scale.front(), 2.0);
  EXPECT_EQ(f2.controller.N, 25);
}

TEST(Config, ErrorsAreLineAnchored) {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_config(text, "t.cfg");
      ADD_FAILURE() << "no error for " << needle;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error(replace(kLinear, "  budget: 1\n", "  budget: 4\n"), "t.cfg:12:");
  expect_error(replace(kLinear, "  duration: 20\n", "  duration: 20\n  speed: 3\n"), "unknown key 'speed'");
  expect_error(replace(kLinear, "  w_hat: [0.0, 0.01]\n", "  w_hat: []\n"), "empty grid");
  expect_error(replace(kLinear, "  budgets: [1, 3]\n", "  budgets: [1, 5]\n"), "t.cfg:");
  expect_error(replace(kLinear, "  epsilon: 0.05\n", "  epsilon: 1.5\n"), "t.cfg:");
  expect_error(replace(kLinear, "  horizon: 8\n", "  horizon: eight\n"), "t.cfg:");
  expect_error("model: [unclosed\n", "t.cfg:");
}

TEST(TerminalFile, RoundTrip) {
  const auto dir = scratch("terminal");
  TerminalIngredients t;
  t.P = (Matrix(2, 2) << 2.0, 0.1, 0.1, 1.0 / 3.0).finished();
  t.K = (Matrix(1, 2) << -0.5, -1.25).finished();
  t.alpha_f = 0.123456789;
  t.W_N_radius = 1e-7;
  t.cost_inflation = 0.5;
  t.constraint_level = 4.0;
  t.verification.samples = 10000;
  TerminalFileMeta meta;
  meta.model = "linear";
  meta.seed = 9;
  meta.horizon = 8;
  write_terminal_file((dir / "t.json").string(), t, meta);
  TerminalFileMeta back_meta;
  const auto back = read_terminal_file((dir / "t.json").string(), &back_meta);
  EXPECT_EQ(back.P, t.P);
  EXPECT_EQ(back.K, t.K);
  EXPECT_EQ(back.alpha_f, t.alpha_f);
  EXPECT_EQ(back.W_N_radius, t.W_N_radius);
  EXPECT_EQ(back.verification.samples, 10000);
  EXPECT_EQ(back_meta.horizon, 8);
  write_file(dir / "broken.json", "{\"P\": 3}");
  EXPECT_THROW(read_terminal_file((dir / "broken.json").string()), ConfigError);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli_codes");
  const auto good = write_file(dir / "good.cfg", kLinear);
  EXPECT_EQ(cli("run " + good.string() + " --out " + (dir / "r").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "r" / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "r" / "summary.txt"));
  EXPECT_EQ(cli("certify " + good.string()), 0);

  const auto bad = write_file(dir / "bad.cfg", replace(kLinear, "  budget: 1\n", "  budget: 4\n"));
  EXPECT_EQ(cli("run " + bad.string()), 2);
  EXPECT_EQ(cli("run " + (dir / "missing.cfg").string()), 2);
  EXPECT_EQ(cli("run"), 2);
  EXPECT_EQ(cli("run " + good.string() + " --jobs zero"), 2);

  // Inputs too weak to stop the initial state: the first solve is infeasible.
  auto weak = replace(kLinear, "  input_bounds: [25.0]\n", "  input_bounds: [0.05]\n");
  weak = replace(weak, "  state_bounds: [25.0, 25.0]\n", "  state_bounds: [1.0, 1.0]\n");
  weak = replace(weak, "  initial_box: [2.0, 0.5]\n", "  initial_states: [[0.9, 0.9], [0, 0], [0, 0]]\n");
  const auto fault = write_file(dir / "fault.cfg", weak);
  EXPECT_EQ(cli("run " + fault.string() + " --out " + (dir / "f").string()), 3);
}

TEST(Cli, TerminalFileFeedsRun) {
  const auto dir = scratch("cli_terminal");
  const auto good = write_file(dir / "good.cfg", kLinear);
  ASSERT_EQ(cli("terminal " + good.string() + " --out " + (dir / "t").string()), 0);
  ASSERT_TRUE(fs::exists(dir / "t" / "terminal.json"));
  const auto stored = read_terminal_file((dir / "t" / "terminal.json").string());
  EXPECT_TRUE(stored.verification.passed());
  const auto with = write_file(dir / "with.cfg", replace(kLinear, "  lipschitz: spectral\n",
                                                         "  lipschitz: spectral\n  terminal_file: t/terminal.json\n"));
  ASSERT_EQ(cli("run " + with.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(cli("run " + good.string() + " --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
}

TEST(Cli, SweepIsReproducibleAndParallelInvariant) {
  const auto dir = scratch("cli_sweep");
  const auto good = write_file(dir / "good.cfg", kLinear);
  ASSERT_EQ(cli("sweep " + good.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(cli("sweep " + good.string() + " --out " + (dir / "b").string() + " --jobs 1"), 0);
  const auto a = slurp(dir / "a" / "param_sweep.csv");
  EXPECT_EQ(a, slurp(dir / "b" / "param_sweep.csv"));
  std::istringstream is(a);
  const auto tab = read_csv(is);
  EXPECT_EQ(tab.columns, std::vector<std::string>({"i", "j", "result"}));
  EXPECT_EQ(tab.rows.size(), 4u);
  ASSERT_EQ(cli("sweep " + good.string() + " --out " + (dir / "c").string() + " --seed 99"), 0);
  EXPECT_NE(a, slurp(dir / "c" / "param_sweep.csv"));
}
