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


// Terminal ingredients file written by `etmpc terminal` and read back by
// `etmpc run`.

#pragma once

#include <cstdint>
#include <string>

#include "etmpc/terminal.hpp"

namespace etmpc {

struct TerminalFileMeta {
  std::string model;
  std::uint64_t seed = 0;
  int horizon = 0;
  double epsilon = 0.0;
  double w_hat_design = 0.0;
};

std::string terminal_to_json(const TerminalIngredients& t, const TerminalFileMeta& meta);
void write_terminal_file(const std::string& path, const TerminalIngredients& t,
                         const TerminalFileMeta& meta);
/// Throws ConfigError on unreadable or malformed files.
TerminalIngredients read_terminal_file(const std::string& path, TerminalFileMeta* meta = nullptr);

}  // namespace etmpc
