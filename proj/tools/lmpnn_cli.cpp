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
// Command-line front end. Every config key is also a flag of the same name.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "lmpnn/error.hpp"
#include "lmpnn/harness.hpp"

namespace {

int fail(std::string_view code, std::string_view message, int status) {
  std::string flat(message);
  for (char& c : flat) {
    if (c == '\n') c = ' ';
  }
  std::cerr << fmt::format("ERROR {} {}\n", code, flat);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lmpnn: logical message passing for complex query answering"};
  app.require_subcommand(1);

  struct Parsed {
    std::string config_path;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, Parsed> parsed;
  std::map<std::string, CLI::App*> subs;
  for (const lmpnn::CommandSpec& spec : lmpnn::command_specs()) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    Parsed& p = parsed[spec.name];
    sub->add_option("--config", p.config_path, "JSON config file");
    for (const lmpnn::KeySpec& k : spec.keys) {
      std::string help = k.help;
      if (!k.default_value.is_null()) help += fmt::format(" [default: {}]", k.default_value.dump());
      sub->add_option("--" + k.key, p.values[k.key], help);
    }
    subs[spec.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("argument_error", e.what(), 2);
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    const lmpnn::CommandSpec& spec = lmpnn::command_spec(name);
    try {
      nlohmann::json file_config;
      if (!parsed[name].config_path.empty()) {
        file_config = lmpnn::load_config_file(parsed[name].config_path);
      }
      nlohmann::json flags = nlohmann::json::object();
      for (const lmpnn::KeySpec& k : spec.keys) {
        if (sub->count("--" + k.key) > 0) {
          flags[k.key] = lmpnn::parse_flag_value(k, parsed[name].values[k.key]);
        }
      }
      const nlohmann::json config = lmpnn::resolve_config(name, file_config, flags);
      lmpnn::run_command(name, config, std::cout);
    } catch (const lmpnn::Error& e) {
      return fail(lmpnn::error_code_name(e.code()), e.what(), 1);
    } catch (const std::exception& e) {
      return fail("internal_error", e.what(), 1);
    }
  }
  return 0;
}
