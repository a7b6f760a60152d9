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


#include "etmpc/terminal_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace etmpc {
namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const Matrix& M) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < M.rows(); ++i) {
    ordered_json r = ordered_json::array();
    for (int j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix json_matrix(const ordered_json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError("terminal file: '" + what + "' must be a nested array");
  }
  const auto rows = static_cast<int>(j.size());
  const auto cols = static_cast<int>(j[0].size());
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (j[i].size() != static_cast<std::size_t>(cols)) {
      throw ConfigError("terminal file: ragged matrix '" + what + "'");
    }
    for (int k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
  }
  return M;
}

}  // namespace

std::string terminal_to_json(const TerminalIngredients& t, const TerminalFileMeta& meta) {
  ordered_json j;
  j["model"] = meta.model;
  j["seed"] = meta.seed;
  j["horizon"] = meta.horizon;
  j["epsilon"] = meta.epsilon;
  j["w_hat_design"] = meta.w_hat_design;
  j["alpha_f"] = t.alpha_f;
  j["W_N_radius"] = t.W_N_radius;
  j["cost_inflation"] = t.cost_inflation;
  j["constraint_level"] = t.constraint_level;
  j["verification"] = {{"samples", t.verification.samples},
                       {"decrease_violations", t.verification.decrease_violations},
                       {"invariance_violations", t.verification.invariance_violations},
                       {"constraint_violations", t.verification.constraint_violations},
                       {"passed", t.verification.passed()}};
  j["P"] = matrix_json(t.P);
  j["K_f"] = matrix_json(t.K);
  return j.dump(2) + "\n";
}

void write_terminal_file(const std::string& path, const TerminalIngredients& t,
                         const TerminalFileMeta& meta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << terminal_to_json(t, meta);
  if (!os) throw ConfigError("write to '" + path + "' failed");
}

TerminalIngredients read_terminal_file(const std::string& path, TerminalFileMeta* meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("terminal file: cannot open '" + path + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(is);
    TerminalIngredients t;
    t.P = json_matrix(j.at("P"), "P");
    t.K = json_matrix(j.at("K_f"), "K_f");
    t.alpha_f = j.at("alpha_f").get<double>();
    t.W_N_radius = j.at("W_N_radius").get<double>();
    t.cost_inflation = j.value("cost_inflation", 0.0);
    t.constraint_level = j.value("constraint_level", 0.0);
    const auto& v = j.at("verification");
    t.verification.samples = v.at("samples").get<int>();
    t.verification.decrease_violations = v.at("decrease_violations").get<int>();
    t.verification.invariance_violations = v.at("invariance_violations").get<int>();
    t.verification.constraint_violations = v.at("constraint_violations").get<int>();
    if (meta != nullptr) {
      meta->model = j.value("model", std::string());
      meta->seed = j.value("seed", std::uint64_t{0});
      meta->horizon = j.value("horizon", 0);
      meta->epsilon = j.value("epsilon", 0.0);
      meta->w_hat_design = j.value("w_hat_design", 0.0);
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("terminal file '" + path + "': " + e.what());
  }
}

}  // namespace etmpc
