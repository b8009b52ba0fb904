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
#include "fixtures.hpp"

#include <atomic>
#include <random>

#include <fmt/core.h>

namespace lmpnn::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          fmt::format("lmpnn-test-{}-{}", rd(), counter++);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

DatasetSplit benchmark_split(std::uint64_t seed) {
  return generate_synthetic(SyntheticConfig{50, 5, 500, 0.1}, seed);
}

KgeTrainHyper memorizing_hyper(std::uint64_t seed) {
  KgeTrainHyper h;
  h.seed = seed;
  return h;
}

std::vector<QueryInstance> training_instances(const DatasetSplit& split, int per_type,
                                              std::uint64_t seed) {
  const DatasetSplit train{split.observed, split.observed};
  std::vector<QueryInstance> out;
  for (const std::string& type : query_type_names()) {
    for (auto& inst : sample_instances(train, type, per_type, seed)) out.push_back(std::move(inst));
  }
  return out;
}

EmbeddingTable toy_table(BackendKind kind, int dim, int entities, int relations,
                         std::uint64_t seed) {
  return random_table(make_backend(kind, dim), entities, relations, seed, 0.5);
}

}  // namespace lmpnn::testing
