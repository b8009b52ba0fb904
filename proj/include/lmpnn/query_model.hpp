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
#include <string>
#include <string_view>
#include <vector>

#include "lmpnn/kg_store.hpp"

namespace lmpnn {

// Reserved relation id for the equality predicate; outside every KG's
// relation space.
inline constexpr RelationId kEqualityRelation = -1;

struct Term {
  enum class Kind : std::uint8_t { kConstant, kExistential, kFree };
  Kind kind = Kind::kFree;
  std::int32_t value = 0;  // entity id or existential index; 0 for Free

  static Term constant(EntityId e) { return {Kind::kConstant, e}; }
  static Term existential(int index) { return {Kind::kExistential, index}; }
  static Term free() { return {Kind::kFree, 0}; }

  bool is_constant() const { return kind == Kind::kConstant; }
  bool is_existential() const { return kind == Kind::kExistential; }
  bool is_free() const { return kind == Kind::kFree; }

  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  RelationId relation = 0;
  Term head;
  Term tail;
  bool negated = false;

  bool is_equality() const { return relation == kEqualityRelation; }
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct ConjunctiveQuery {
  std::vector<Atom> atoms;
  friend bool operator==(const ConjunctiveQuery&, const ConjunctiveQuery&) = default;
};

// Disjunctive normal form with one free variable y and existentials
// x_0 .. x_{m-1} shared by name across disjuncts.
struct Efo1Query {
  std::vector<ConjunctiveQuery> disjuncts;
  int existential_count = 0;

  // Throws kStructure when the invariants do not hold.
  void validate() const;
  friend bool operator==(const Efo1Query&, const Efo1Query&) = default;
};

struct QueryEdge {
  int src = 0;
  int dst = 0;
  RelationId relation = 0;
  bool negated = false;
};

// Nodes are the distinct terms of a conjunctive query in first-appearance
// order (head before tail, atom by atom); one edge per atom.
struct QueryGraph {
  std::vector<Term> nodes;
  std::vector<QueryEdge> edges;
  int free_node = -1;

  std::size_t node_count() const { return nodes.size(); }
};

QueryGraph build_query_graph(const ConjunctiveQuery& cq);

// Maximum undirected hop distance from a constant node to the free node.
int query_depth(const QueryGraph& graph);

// Sorted, duplicate-free entity ids.
using AnswerSet = std::vector<EntityId>;

// Exact answers by backtracking over variable assignments. Throws kCapacity
// when entity_count^m exceeds `guard` for some disjunct.
AnswerSet oracle_answers(const Efo1Query& query, const KnowledgeGraph& kg,
                         double guard = 1e7);
AnswerSet oracle_answers(const ConjunctiveQuery& cq, int existential_count,
                         const KnowledgeGraph& kg, double guard = 1e7);

struct QueryInstance {
  std::string type;
  Efo1Query query;
  AnswerSet easy;  // answers on the observed graph
  AnswerSet hard;  // answers on the full graph that are not easy

  bool evaluable() const { return !hard.empty(); }
  AnswerSet all_answers() const;
};

// The 14 benchmark patterns: 1p 2p 3p 2i 3i pi ip 2u up 2in 3in inp pin pni.
const std::vector<std::string>& query_type_names();
bool is_negation_type(std::string_view type);

// Instances whose grounding is drawn from random walks on split.full; every
// instance has a nonempty full-graph answer set, and a nonempty hard set when
// `require_hard` is set.
std::vector<QueryInstance> sample_instances(const DatasetSplit& split,
                                            std::string_view type, int count,
                                            std::uint64_t seed,
                                            bool require_hard = false);

// JSON-lines codec. Terms: {"c": id} | {"x": k} | "y"; relation "eq" is the
// equality predicate.
std::string serialize_query(const Efo1Query& query);
Efo1Query parse_query(std::string_view line);
std::string serialize_instance(const QueryInstance& instance);
QueryInstance parse_instance(std::string_view line);

void write_instances(const std::filesystem::path& path,
                     const std::vector<QueryInstance>& instances);
std::vector<QueryInstance> read_instances(const std::filesystem::path& path);

}  // namespace lmpnn
