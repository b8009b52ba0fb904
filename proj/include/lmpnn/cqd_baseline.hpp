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

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "lmpnn/kge_backends.hpp"
#include "lmpnn/lmpnn_core.hpp"
#include "lmpnn/query_model.hpp"

namespace lmpnn {

enum class TNormKind { kProduct, kGodel };
std::string_view tnorm_name(TNormKind kind);
TNormKind parse_tnorm(std::string_view name);
double tnorm(TNormKind kind, double a, double b);

// Embeddings for x_0..x_{m-1} and y. An empty vector marks a missing variable.
struct VariableAssignment {
  std::vector<Vec> existential;
  Vec free;
};

// t-norm fold of psi (positive atoms) and 1 - psi (negated atoms). Throws
// kArgument for unassigned variables and for equality atoms.
double conjunctive_truth_value(const ConjunctiveQuery& cq, const VariableAssignment& assignment,
                               const EmbeddingTable& table, TNormKind kind);

struct CqdOptions {
  TNormKind tnorm = TNormKind::kProduct;
  int steps = 200;
  double lr = 0.1;
  int restarts = 4;
  std::uint64_t seed = 0;
  double init_scale = 1e-3;
  JoinMode join = JoinMode::kMax;
};

// Gradient ascent of TV - lambda * sum |x|^q over the variable embeddings of
// each disjunct; entities are ranked by cosine to the best free embedding.
Vec cqd_scores(const Efo1Query& q, const EmbeddingTable& table, const CqdOptions& options);
Ranking cqd_optimize(const Efo1Query& q, const EmbeddingTable& table, const CqdOptions& options);

// J(x) = (1 - x^2)(x - 0.3)^2 on a uniform grid over [0, 1].
std::vector<std::pair<double, double>> landscape_profile(int grid_points);
void write_landscape_csv(const std::vector<std::pair<double, double>>& profile,
                         const std::filesystem::path& path);

}  // namespace lmpnn
