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

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmpnn/lmpnn_core.hpp"
#include "lmpnn/query_model.hpp"

namespace lmpnn {

// kHard ranks the hard answers (benchmark protocol); kAll ranks every answer,
// which is what a training-split check needs.
enum class TargetMode { kHard, kAll };
// kStandard removes easy answers and the other targets; kEasyOnly removes
// easy answers only.
enum class FilterMode { kStandard, kEasyOnly };
std::string_view target_mode_name(TargetMode mode);
TargetMode parse_target_mode(std::string_view name);
std::string_view filter_mode_name(FilterMode mode);
FilterMode parse_filter_mode(std::string_view name);

// 1-based rank of `target` after dropping every entity in `filtered` (sorted).
// Throws kProtocol when the target is missing or itself filtered.
int filtered_rank(const Ranking& ranking, std::span<const EntityId> filtered, EntityId target);

struct EvalOptions {
  TargetMode targets = TargetMode::kHard;
  FilterMode filter = FilterMode::kStandard;
};

// Mean reciprocal filtered rank over the targets of one instance.
double instance_mrr(const Ranking& ranking, const QueryInstance& instance,
                    const EvalOptions& options = {});

struct EvalReport {
  std::map<std::string, double> per_type;  // only types that were present
  std::map<std::string, int> instance_counts;
  std::optional<double> a_p;
  std::optional<double> a_n;
};

using AnswerFn = std::function<Ranking(const Efo1Query&)>;

// Throws kProtocol for an instance without targets.
EvalReport evaluate(std::span<const QueryInstance> instances, const AnswerFn& answer,
                    const EvalOptions& options = {});

// Recomputes A_P and A_N from per_type.
void aggregate(EvalReport& report);

std::string report_to_json(const EvalReport& report);
// Aligned table, columns 1P .. PNI then A_P and A_N, MRR in percent.
std::string report_to_table(const EvalReport& report);

}  // namespace lmpnn
