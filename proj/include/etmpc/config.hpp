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


// Experiment configuration files (YAML). Every map is checked against its
// known keys; errors name the file and line.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "etmpc/sim.hpp"
#include "etmpc/terminal.hpp"

namespace etmpc {

struct ModelConfig {
  std::string type = "quadcopter";  // quadcopter | linear
  double dt = 0.1;
  QuadcopterParams quadcopter;
  QuadcopterLimits limits;
  Matrix A, B;               // linear only
  Vector state_bounds;       // linear only: symmetric box half-widths
  Vector input_bounds;
  std::vector<int> position_indices{0};
};

struct ControllerConfig {
  int N = 25;
  double epsilon = 0.02;
  Vector Q_diag, R_diag;
  bool terminal_constraint = true;
  double cost_inflation = 0.0;
  double w_hat_design = -1.0;   // < 0: certified w_hat_max
  /// > 0 fixed; 0 sampled estimate; -1 spectral norm of A (linear models).
  double lipschitz = 0.0;
  int lipschitz_samples = 2000;
  int terminal_samples = 10000;
  std::string terminal_file;    // precomputed ingredients from `terminal`
  std::optional<AssumptionConstants> constants;
  ConstantEstimateOptions estimation;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string source;          // file the config came from
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  ModelConfig model;
  int systems = 1;
  int budget = 1;
  int duration = 40;
  Vector initial_box;          // empty: derived from initial_position_box
  double initial_position_box = 1.0;
  std::vector<StateVector> initial_states;
  double divergence_threshold = 0.0;
  DisturbanceSpec disturbance;
  ControllerConfig controller;
  SolverConfig solver;

  std::optional<SweepSpec> sweep;
  std::optional<SweepSpec> desk_sweep;
  std::vector<double> certify_grid{0.0};
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);

DynamicsModel build_model(const ModelConfig& config);

/// Design options for the given budget (the design depends on M_c through
/// the trigger window).
DesignOptions design_options(const ExperimentConfig& config, int budget);

/// Fleet for closed-loop runs under a finished design.
FleetConfig fleet_config(const ExperimentConfig& config, std::shared_ptr<const DynamicsModel> model,
                         const ControllerDesign& design);

}  // namespace etmpc
