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
#include "lmpnn/evaluation.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "lmpnn/error.hpp"

namespace lmpnn {

std::string_view target_mode_name(TargetMode mode) {
  return mode == TargetMode::kAll ? "all" : "hard";
}

TargetMode parse_target_mode(std::string_view name) {
  if (name == "hard") return TargetMode::kHard;
  if (name == "all") return TargetMode::kAll;
  throw Error(ErrorCode::kArgument, fmt::format("unknown target mode '{}' (hard|all)", name));
}

std::string_view filter_mode_name(FilterMode mode) {
  return mode == FilterMode::kEasyOnly ? "easy_only" : "standard";
}

FilterMode parse_filter_mode(std::string_view name) {
  if (name == "standard") return FilterMode::kStandard;
  if (name == "easy_only") return FilterMode::kEasyOnly;
  throw Error(ErrorCode::kArgument,
              fmt::format("unknown filter mode '{}' (standard|easy_only)", name));
}

int filtered_rank(const Ranking& ranking, std::span<const EntityId> filtered, EntityId target) {
  if (std::binary_search(filtered.begin(), filtered.end(), target)) {
    throw Error(ErrorCode::kProtocol, fmt::format("target {} is itself filtered", target));
  }
  int rank = 1;
  for (const Ranked& r : ranking) {
    if (r.entity == target) return rank;
    if (!std::binary_search(filtered.begin(), filtered.end(), r.entity)) ++rank;
  }
  throw Error(ErrorCode::kProtocol, fmt::format("target {} is missing from the ranking", target));
}

namespace {

std::pair<AnswerSet, AnswerSet> targets_and_filter(const QueryInstance& inst,
                                                   const EvalOptions& options) {
  AnswerSet targets = options.targets == TargetMode::kHard ? inst.hard : inst.all_answers();
  AnswerSet filter = options.filter == FilterMode::kStandard ? inst.all_answers() : inst.easy;
  return {std::move(targets), std::move(filter)};
}

}  // namespace

double instance_mrr(const Ranking& ranking, const QueryInstance& instance,
                    const EvalOptions& options) {
  auto [targets, filter] = targets_and_filter(instance, options);
  if (targets.empty()) {
    throw Error(ErrorCode::kProtocol,
                fmt::format("'{}' instance has no {} answers to rank", instance.type,
                            target_mode_name(options.targets)));
  }
  // Position of every entity, so each target costs one pass over `filter`.
  EntityId max_id = 0;
  for (const Ranked& r : ranking) max_id = std::max(max_id, r.entity);
  std::vector<int> position(static_cast<std::size_t>(max_id) + 1, -1);
  for (std::size_t i = 0; i < ranking.size(); ++i) position[ranking[i].entity] = static_cast<int>(i);
  auto pos_of = [&](EntityId e) {
    return e >= 0 && e <= max_id ? position[e] : -1;
  };
  double total = 0.0;
  for (EntityId target : targets) {
    const int p = pos_of(target);
    if (p < 0) {
      throw Error(ErrorCode::kProtocol, fmt::format("target {} is missing from the ranking", target));
    }
    int above = 0;
    for (EntityId f : filter) {
      if (f == target) continue;
      const int q = pos_of(f);
      if (q >= 0 && q < p) ++above;
    }
    total += 1.0 / static_cast<double>(p + 1 - above);
  }
  return total / static_cast<double>(targets.size());
}

EvalReport evaluate(std::span<const QueryInstance> instances, const AnswerFn& answer,
                    const EvalOptions& options) {
  EvalReport report;
  std::map<std::string, double> sums;
  for (const QueryInstance& inst : instances) {
    sums[inst.type] += instance_mrr(answer(inst.query), inst, options);
    ++report.instance_counts[inst.type];
  }
  for (const auto& [type, sum] : sums) {
    report.per_type[type] = sum / report.instance_counts[type];
  }
  aggregate(report);
  return report;
}

void aggregate(EvalReport& report) {
  double pos = 0.0;
  double neg = 0.0;
  int npos = 0;
  int nneg = 0;
  for (const std::string& type : query_type_names()) {
    const auto it = report.per_type.find(type);
    if (it == report.per_type.end()) continue;
    if (is_negation_type(type)) {
      neg += it->second;
      ++nneg;
    } else {
      pos += it->second;
      ++npos;
    }
  }
  report.a_p = npos ? std::optional<double>(pos / npos) : std::nullopt;
  report.a_n = nneg ? std::optional<double>(neg / nneg) : std::nullopt;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json per_type = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const std::string& type : query_type_names()) {
    const auto it = report.per_type.find(type);
    if (it == report.per_type.end()) continue;
    per_type[type] = it->second;
    counts[type] = report.instance_counts.at(type);
  }
  nlohmann::ordered_json root;
  root["per_type"] = per_type;
  root["A_P"] = report.a_p ? nlohmann::ordered_json(*report.a_p) : nlohmann::ordered_json();
  root["A_N"] = report.a_n ? nlohmann::ordered_json(*report.a_n) : nlohmann::ordered_json();
  root["instance_counts"] = counts;
  return root.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
  std::vector<std::string> headers;
  std::vector<std::string> cells;
  auto cell = [](std::optional<double> v) {
    return v ? fmt::format("{:.1f}", 100.0 * *v) : std::string("-");
  };
  for (const std::string& type : query_type_names()) {
    std::string upper = type;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    headers.push_back(upper);
    const auto it = report.per_type.find(type);
    cells.push_back(cell(it == report.per_type.end() ? std::nullopt
                                                      : std::optional<double>(it->second)));
  }
  headers.emplace_back("A_P");
  cells.push_back(cell(report.a_p));
  headers.emplace_back("A_N");
  cells.push_back(cell(report.a_n));

  std::string head;
  std::string body;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t w = std::max<std::size_t>(5, std::max(headers[i].size(), cells[i].size()));
    head += fmt::format("{:>{}}", headers[i], w + (i ? 1 : 0));
    body += fmt::format("{:>{}}", cells[i], w + (i ? 1 : 0));
  }
  return head + "\n" + body + "\n";
}

}  // namespace lmpnn
