// Copyright 2026 The lmpnn Authors
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
#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace lmpnn {

enum class ValueType { kInt, kFloat, kString, kBool };

struct KeySpec {
  std::string key;
  ValueType type = ValueType::kString;
  nlohmann::json default_value;  // null: no default
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
};

const std::vector<CommandSpec>& command_specs();
const CommandSpec& command_spec(std::string_view command);

// Converts a flag string to the key's JSON type. Throws kArgument.
nlohmann::json parse_flag_value(const KeySpec& spec, const std::string& text);

// defaults < config file < flags. Unknown keys are rejected (kConfig) and
// keys without a default must be supplied (kConfig), which makes `seed`
// mandatory for every command that draws random numbers.
nlohmann::json resolve_config(std::string_view command, const nlohmann::json& file_config,
                              const nlohmann::json& flags);
nlohmann::json load_config_file(const std::filesystem::path& path);

// Runs one command with a resolved config. Artifacts go to config["out"],
// together with config.json (resolved config plus SHA-256 of every input).
void run_command(std::string_view command, const nlohmann::json& config, std::ostream& log);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace lmpnn
