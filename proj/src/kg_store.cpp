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
#include "lmpnn/kg_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "lmpnn/error.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {
namespace {

std::int64_t parse_field(std::string_view field, const std::filesystem::path& path,
                         int line_no) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw Error(ErrorCode::kParse,
                fmt::format("{}:{}: expected a decimal integer, got '{}'",
                            path.string(), line_no, field));
  }
  return value;
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(int entity_count, int relation_count,
                               std::vector<Triple> triples)
    : entity_count_(entity_count), relation_count_(relation_count) {
  if (entity_count < 0 || relation_count < 0) {
    throw Error(ErrorCode::kRange, "entity and relation counts must be non-negative");
  }
  for (const Triple& t : triples) {
    if (t.head < 0 || t.head >= entity_count || t.tail < 0 ||
        t.tail >= entity_count || t.relation < 0 ||
        t.relation >= relation_count) {
      throw Error(ErrorCode::kRange,
                  fmt::format("triple ({}, {}, {}) outside id space {}x{}",
                              t.head, t.relation, t.tail, entity_count,
                              relation_count));
    }
  }
  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
  triples_ = std::move(triples);
  out_ = build_index(entity_count_, relation_count_, triples_, true);
  in_ = build_index(entity_count_, relation_count_, triples_, false);
}

KnowledgeGraph::Csr KnowledgeGraph::build_index(int entity_count,
                                                int relation_count,
                                                const std::vector<Triple>& triples,
                                                bool by_head) {
  Csr csr;
  const std::size_t keys =
      static_cast<std::size_t>(entity_count) * static_cast<std::size_t>(relation_count);
  csr.offsets.assign(keys + 1, 0);
  auto key = [&](const Triple& t) {
    const EntityId e = by_head ? t.head : t.tail;
    return static_cast<std::size_t>(e) * relation_count + t.relation;
  };
  for (const Triple& t : triples) ++csr.offsets[key(t) + 1];
  for (std::size_t k = 0; k < keys; ++k) csr.offsets[k + 1] += csr.offsets[k];
  csr.targets.resize(triples.size());
  std::vector<std::uint32_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
  for (const Triple& t : triples) {
    csr.targets[cursor[key(t)]++] = by_head ? t.tail : t.head;
  }
  for (std::size_t k = 0; k < keys; ++k) {
    std::sort(csr.targets.begin() + csr.offsets[k],
              csr.targets.begin() + csr.offsets[k + 1]);
  }
  return csr;
}

void KnowledgeGraph::check_ids(EntityId e, RelationId r) const {
  if (e < 0 || e >= entity_count_ || r < 0 || r >= relation_count_) {
    throw Error(ErrorCode::kRange,
                fmt::format("neighbor lookup ({}, {}) outside id space {}x{}", e,
                            r, entity_count_, relation_count_));
  }
}

std::span<const EntityId> KnowledgeGraph::neighbors(EntityId e, RelationId r,
                                                    Direction direction) const {
  check_ids(e, r);
  const Csr& csr = direction == Direction::kHeadToTail ? out_ : in_;
  const std::size_t k = static_cast<std::size_t>(e) * relation_count_ + r;
  return {csr.targets.data() + csr.offsets[k], csr.offsets[k + 1] - csr.offsets[k]};
}

bool KnowledgeGraph::contains(const Triple& t) const {
  const auto tails = neighbors(t.head, t.relation, Direction::kHeadToTail);
  return std::binary_search(tails.begin(), tails.end(), t.tail);
}

void validate_split(const DatasetSplit& split) {
  if (split.observed.entity_count() != split.full.entity_count() ||
      split.observed.relation_count() != split.full.relation_count()) {
    throw Error(ErrorCode::kStructure, "observed and full graphs use different id spaces");
  }
  if (!std::includes(split.full.triples().begin(), split.full.triples().end(),
                     split.observed.triples().begin(),
                     split.observed.triples().end())) {
    throw Error(ErrorCode::kStructure, "observed triples are not a subset of the full graph");
  }
}

std::vector<Triple> read_triples(const std::filesystem::path& path,
                                 int entity_count, int relation_count) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  std::vector<Triple> triples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string a, b, c, extra;
    if (!(fields >> a >> b >> c) || (fields >> extra)) {
      throw Error(ErrorCode::kParse,
                  fmt::format("{}:{}: expected 'head<TAB>relation<TAB>tail'",
                              path.string(), line_no));
    }
    const std::int64_t h = parse_field(a, path, line_no);
    const std::int64_t r = parse_field(b, path, line_no);
    const std::int64_t t = parse_field(c, path, line_no);
    if (h < 0 || h >= entity_count || t < 0 || t >= entity_count || r < 0 ||
        r >= relation_count) {
      throw Error(ErrorCode::kRange,
                  fmt::format("{}:{}: triple ({}, {}, {}) outside declared id "
                              "space {} entities x {} relations",
                              path.string(), line_no, h, r, t, entity_count,
                              relation_count));
    }
    triples.push_back({static_cast<EntityId>(h), static_cast<RelationId>(r),
                       static_cast<EntityId>(t)});
  }
  return triples;
}

void write_triples(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  for (const Triple& t : kg.triples()) {
    out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
}

DatasetSplit load_dataset(const std::filesystem::path& full_triples,
                          const std::filesystem::path& observed_triples,
                          int entity_count, int relation_count) {
  DatasetSplit split{
      KnowledgeGraph(entity_count, relation_count,
                     read_triples(observed_triples, entity_count, relation_count)),
      KnowledgeGraph(entity_count, relation_count,
                     read_triples(full_triples, entity_count, relation_count))};
  validate_split(split);
  return split;
}

DatasetSplit load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot open {}", manifest_path.string()));
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
    const auto base = manifest_path.parent_path();
    return load_dataset(base / manifest.at("full").get<std::string>(),
                        base / manifest.at("observed").get<std::string>(),
                        manifest.at("entity_count").get<int>(),
                        manifest.at("relation_count").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                fmt::format("{}: bad manifest: {}", manifest_path.string(), e.what()));
  }
}

std::filesystem::path save_dataset(const DatasetSplit& split,
                                   const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  write_triples(directory / "full.tsv", split.full);
  write_triples(directory / "observed.tsv", split.observed);
  const nlohmann::ordered_json manifest = {
      {"entity_count", split.full.entity_count()},
      {"relation_count", split.full.relation_count()},
      {"full", "full.tsv"},
      {"observed", "observed.tsv"},
  };
  const auto path = directory / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << manifest.dump(2) << '\n';
  return path;
}

DatasetSplit generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.entity_count <= 0 || config.relation_count <= 0 ||
      config.triple_count < 0) {
    throw Error(ErrorCode::kConfig, "synthetic KG needs positive entity and relation counts");
  }
  const double capacity = static_cast<double>(config.entity_count) *
                          config.entity_count * config.relation_count;
  if (static_cast<double>(config.triple_count) > capacity) {
    throw Error(ErrorCode::kConfig,
                fmt::format("{} distinct triples requested but only {} exist",
                            config.triple_count, capacity));
  }
  if (!(config.dropout_fraction >= 0.0 && config.dropout_fraction <= 1.0)) {
    throw Error(ErrorCode::kConfig, "dropout_fraction must lie in [0, 1]");
  }

  Rng rng(seed);
  std::set<Triple> seen;
  std::vector<Triple> drawn;
  drawn.reserve(static_cast<std::size_t>(config.triple_count));
  while (static_cast<std::int64_t>(drawn.size()) < config.triple_count) {
    Triple t{static_cast<EntityId>(rng.uniform_index(config.entity_count)),
             static_cast<RelationId>(rng.uniform_index(config.relation_count)),
             static_cast<EntityId>(rng.uniform_index(config.entity_count))};
    if (seen.insert(t).second) drawn.push_back(t);
  }

  // Partial Fisher-Yates: the first `removed` slots are the held-out triples.
  const auto removed = static_cast<std::size_t>(
      std::ceil(config.dropout_fraction * static_cast<double>(config.triple_count) - 1e-9));
  std::vector<Triple> shuffled = drawn;
  for (std::size_t i = 0; i < removed; ++i) {
    const std::size_t j = i + rng.uniform_index(shuffled.size() - i);
    std::swap(shuffled[i], shuffled[j]);
  }
  std::vector<Triple> observed(shuffled.begin() + static_cast<std::ptrdiff_t>(removed),
                               shuffled.end());
  return DatasetSplit{
      KnowledgeGraph(config.entity_count, config.relation_count, std::move(observed)),
      KnowledgeGraph(config.entity_count, config.relation_count, std::move(drawn))};
}

}  // namespace lmpnn
