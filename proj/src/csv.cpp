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


#include "etmpc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace etmpc {

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] == name) return static_cast<int>(k);
  }
  throw ConfigError("csv: no column named '" + name + "'");
}

std::vector<double> CsvTable::column_values(const std::string& name) const {
  const int k = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(k)]);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const CsvTable& table) {
  for (std::size_t k = 0; k < table.columns.size(); ++k) {
    if (k) os << ',';
    os << table.columns[k];
  }
  os << '\n';
  for (const auto& r : table.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) os << ',';
      os << format_double(r[k]);
    }
    os << '\n';
  }
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("csv: cannot open '" + path + "' for writing");
  write_csv(os, table);
  if (!os) throw ConfigError("csv: write to '" + path + "' failed");
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, int line) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("csv line " + std::to_string(line) + ": not a number: '" +
                      std::string(s) + "'");
  }
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (t.columns.empty()) {
      for (auto f : fields) t.columns.emplace_back(f);
      continue;
    }
    if (fields.size() != t.columns.size()) {
      throw ConfigError("csv line " + std::to_string(lineno) + ": expected " +
                        std::to_string(t.columns.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, lineno));
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ConfigError("csv: missing header");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("csv: cannot open '" + path + "'");
  return read_csv(is);
}

CsvTable trace_table(const SimTrace& trace, bool verbose) {
  CsvTable t;
  t.columns.push_back("time");
  const int Ms = trace.systems;
  const int axes = static_cast<int>(trace.position_indices.size());
  for (int i = 0; i < Ms; ++i) {
    for (int a = 0; a < axes; ++a) {
      t.columns.push_back("quad_" + std::to_string(i) + "_" + std::to_string(a));
    }
  }
  for (int s = 0; s < trace.budget; ++s) t.columns.push_back("selected_" + std::to_string(s));
  if (verbose) {
    for (int i = 0; i < Ms; ++i) t.columns.push_back("priority_" + std::to_string(i));
    for (int s = 0; s < trace.budget; ++s) {
      const std::string p = "solve_" + std::to_string(s) + "_";
      for (const char* f : {"status", "iterations", "qp_iterations", "kkt_residual",
                            "constraint_violation", "cost", "wall_time"}) {
        t.columns.push_back(p + f);
      }
    }
  }
  for (const auto& st : trace.steps) {
    std::vector<double> r;
    r.reserve(t.columns.size());
    r.push_back(st.time);
    for (int i = 0; i < Ms; ++i) {
      for (int a : trace.position_indices) r.push_back(st.states[static_cast<std::size_t>(i)](a));
    }
    for (int s = 0; s < trace.budget; ++s) {
      const auto us = static_cast<std::size_t>(s);
      r.push_back(us < st.selected.size() ? static_cast<double>(st.selected[us] + 1) : 0.0);
    }
    if (verbose) {
      for (double g : st.priorities) r.push_back(g);
      for (int s = 0; s < trace.budget; ++s) {
        const auto us = static_cast<std::size_t>(s);
        if (us < st.solves.size()) {
          const auto& v = st.solves[us];
          r.insert(r.end(), {static_cast<double>(v.status), static_cast<double>(v.iterations),
                             static_cast<double>(v.qp_iterations), v.kkt_residual,
                             v.constraint_violation, v.cost, v.wall_time});
        } else {
          r.insert(r.end(), 7, std::nan(""));
        }
      }
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

CsvTable sweep_table(const SweepResult& result) {
  CsvTable t;
  t.columns = {"i", "j", "result"};
  for (const auto& c : result.cells) {
    t.rows.push_back({static_cast<double>(c.i + 1), static_cast<double>(c.j + 1), c.value});
  }
  return t;
}

}  // namespace etmpc
