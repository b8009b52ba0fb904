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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lmpnn {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

enum class Direction { kHeadToTail, kTailToHead };

// Immutable triple store with CSR adjacency keyed by (entity, relation).
// Duplicate input triples are collapsed; the triple list is kept sorted by
// (head, relation, tail).
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(int entity_count, int relation_count,
                 std::vector<Triple> triples);

  int entity_count() const { return entity_count_; }
  int relation_count() const { return relation_count_; }
  std::size_t size() const { return triples_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }

  // Sorted tails of (e, r, ?) for kHeadToTail, sorted heads of (?, r, e) for
  // kTailToHead. Throws kRange on out-of-range ids.
  std::span<const EntityId> neighbors(EntityId e, RelationId r,
                                      Direction direction) const;

  bool contains(const Triple& t) const;
  bool contains(EntityId head, RelationId relation, EntityId tail) const {
    return contains(Triple{head, relation, tail});
  }

 private:
  struct Csr {
    std::vector<std::uint32_t> offsets;
    std::vector<EntityId> targets;
  };
  static Csr build_index(int entity_count, int relation_count,
                         const std::vector<Triple>& triples, bool by_head);

  void check_ids(EntityId e, RelationId r) const;

  int entity_count_ = 0;
  int relation_count_ = 0;
  std::vector<Triple> triples_;
  Csr out_;
  Csr in_;
};

// Observed (training) graph and the full graph it was drawn from.
struct DatasetSplit {
  KnowledgeGraph observed;
  KnowledgeGraph full;
};

// Throws kStructure unless observed is a subset of full over the same ids.
void validate_split(const DatasetSplit& split);

std::vector<Triple> read_triples(const std::filesystem::path& path,
                                 int entity_count, int relation_count);
void write_triples(const std::filesystem::path& path, const KnowledgeGraph& kg);

// Loads a split manifest (JSON) naming the observed and full triple files,
// resolved relative to the manifest's directory.
DatasetSplit load_dataset(const std::filesystem::path& manifest_path);
DatasetSplit load_dataset(const std::filesystem::path& full_triples,
                          const std::filesystem::path& observed_triples,
                          int entity_count, int relation_count);

// Writes full.tsv, observed.tsv and manifest.json into `directory`; returns
// the manifest path.
std::filesystem::path save_dataset(const DatasetSplit& split,
                                   const std::filesystem::path& directory);

struct SyntheticConfig {
  int entity_count = 50;
  int relation_count = 5;
  std::int64_t triple_count = 500;
  double dropout_fraction = 0.1;
};

DatasetSplit generate_synthetic(const SyntheticConfig& config,
                                std::uint64_t seed);

}  // namespace lmpnn
