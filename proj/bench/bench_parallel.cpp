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


// OpenMP kernels against their serial reference: the sweep (one task per
// cell and run), one trigger step with every system selected, and the
// terminal set verification. Arg 0 is the serial path, arg 1 the parallel one.

#include <benchmark/benchmark.h>

#include <map>

#include "etmpc/config.hpp"
#include "etmpc/sim.hpp"
#include "etmpc/terminal.hpp"

using namespace etmpc;

namespace {

struct Fixture {
  ExperimentConfig cfg;
  std::shared_ptr<const DynamicsModel> model;
  ControllerDesign design;
  FleetConfig fleet;
};

const Fixture& fixture(const std::string& name) {
  static std::map<std::string, Fixture> cache;
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  Fixture f;
  f.cfg = load_config(std::string(ETMPC_CONFIG_DIR) + "/" + name);
  f.model = std::make_shared<const DynamicsModel>(build_model(f.cfg.model));
  f.design = design_controller(*f.model, f.cfg.controller.Q_diag.asDiagonal(),
                               f.cfg.controller.R_diag.asDiagonal(), design_options(f.cfg, 1));
  f.fleet = fleet_config(f.cfg, f.model, f.design);
  return cache.emplace(name, std::move(f)).first->second;
}

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::parallel : Execution::serial; }

void BM_LinearSweep(benchmark::State& st) {
  const auto& f = fixture("linear_oracle.cfg");
  auto base = f.fleet;
  base.duration = 100;
  SweepSpec spec;
  spec.w_hat_values = {0.0, 0.01, 0.02, 0.04};
  spec.budgets = {1, 3, 5};
  spec.runs = 4;
  for (auto _ : st) benchmark::DoNotOptimize(sweep(base, spec, mode(st)));
  st.SetItemsProcessed(st.iterations() * 48);
}
BENCHMARK(BM_LinearSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_QuadcopterSweep(benchmark::State& st) {
  const auto& f = fixture("fig3.cfg");
  auto base = f.fleet;
  base.systems = 4;
  base.duration = 6;
  SweepSpec spec;
  spec.w_hat_values = {0.01, 0.05};
  spec.budgets = {1, 4};
  spec.runs = 1;
  for (auto _ : st) benchmark::DoNotOptimize(sweep(base, spec, mode(st)));
}
BENCHMARK(BM_QuadcopterSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1)->UseRealTime();

void BM_AdvanceAllSelected(benchmark::State& st) {
  const auto& f = fixture("fig3.cfg");
  auto fleet = f.fleet;
  const auto x0 = initial_states_for(fleet);
  const auto& spec = f.design.spec;
  const SolverHook hook = [&](SystemId, const StateVector& x, const Trajectory& warm) {
    return solve_ocp(*f.model, spec, x, &warm, fleet.solver);
  };
  for (auto _ : st) {
    st.PauseTiming();
    auto buffers = initial_buffers(*f.model, x0, spec.N);
    auto trig = TriggerState::create(fleet.systems, fleet.systems);
    const auto decision = select(std::vector<double>(fleet.systems, 0.0), trig);
    st.ResumeTiming();
    benchmark::DoNotOptimize(advance(buffers, x0, decision, trig, *f.model, spec.K_f, hook, mode(st)));
  }
}
BENCHMARK(BM_AdvanceAllSelected)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_TerminalVerification(benchmark::State& st) {
  const auto& f = fixture("fig3.cfg");
  const auto& d = f.design;
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        verify_terminal(*f.model, d.terminal, d.spec.Q, d.spec.R, d.spec.schedule, 10000, 1, mode(st)));
  }
}
BENCHMARK(BM_TerminalVerification)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
