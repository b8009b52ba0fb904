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
#include <string>
#include <vector>

#include "lmpnn/kg_store.hpp"
#include "lmpnn/kge_backends.hpp"
#include "lmpnn/query_model.hpp"

namespace lmpnn::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// 50 entities, 5 relations, 500 triples, 10% dropout.
DatasetSplit benchmark_split(std::uint64_t seed);

// KGE hyperparameters that memorize the benchmark split at d = 64.
KgeTrainHyper memorizing_hyper(std::uint64_t seed);

// Training-split instances: sampled with observed as the full graph.
std::vector<QueryInstance> training_instances(const DatasetSplit& split, int per_type,
                                              std::uint64_t seed);

// A small table with every backend-specific shape, for structural tests.
EmbeddingTable toy_table(BackendKind kind, int dim, int entities, int relations,
                         std::uint64_t seed);

}  // namespace lmpnn::testing
