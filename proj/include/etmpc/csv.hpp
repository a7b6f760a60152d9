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


// Numeric CSV tables for traces and sweeps. Values are written in the
// shortest form that parses back to the same double.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "etmpc/sim.hpp"

namespace etmpc {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of a column; throws ConfigError when absent.
  int column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

std::string format_double(double v);

void write_csv(std::ostream& os, const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);
/// Throws ConfigError with the offending line number on malformed input.
CsvTable read_csv(std::istream& is);
CsvTable read_csv(const std::string& path);

/// time, quad_{i}_{a} for every system and position axis, selected_{s}
/// (1-based ids). Verbose adds priority_{i} and per-slot solver statistics.
CsvTable trace_table(const SimTrace& trace, bool verbose = false);
/// i, j, result with 1-based indices into the w_hat and budget axes.
CsvTable sweep_table(const SweepResult& result);

}  // namespace etmpc
