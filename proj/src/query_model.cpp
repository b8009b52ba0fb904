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
#include "lmpnn/query_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <optional>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "lmpnn/error.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {
namespace {

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

// Backtracking join over the variables of one conjunctive query. Variable
// slot m is the free variable; slots 0..m-1 are existentials.
class ConjunctiveSearch {
 public:
  ConjunctiveSearch(const ConjunctiveQuery& cq, int existential_count,
                    const KnowledgeGraph& kg)
      : cq_(cq), m_(existential_count), kg_(kg),
        value_(existential_count + 1, -1),
        used_(existential_count + 1, 0),
        found_(kg.entity_count(), 0) {
    for (const Atom& a : cq.atoms) {
      for (const Term& t : {a.head, a.tail}) {
        if (!t.is_constant()) used_[slot(t)] = 1;
      }
    }
  }

  int used_existentials() const {
    return static_cast<int>(std::count(used_.begin(), used_.end() - 1, 1));
  }

  void run(std::vector<char>& answers) {
    // Atoms over constants only are fixed facts.
    for (const Atom& a : cq_.atoms) {
      if (a.head.is_constant() && a.tail.is_constant() && !holds(a)) return;
    }
    search();
    for (std::size_t e = 0; e < found_.size(); ++e) {
      if (found_[e]) answers[e] = 1;
    }
  }

 private:
  int slot(const Term& t) const { return t.is_free() ? m_ : t.value; }

  std::optional<EntityId> resolve(const Term& t) const {
    if (t.is_constant()) return t.value;
    const EntityId v = value_[slot(t)];
    if (v < 0) return std::nullopt;
    return v;
  }

  bool holds(const Atom& a) const {
    const EntityId h = *resolve(a.head);
    const EntityId t = *resolve(a.tail);
    const bool truth = a.is_equality() ? h == t : kg_.contains(h, a.relation, t);
    return truth != a.negated;
  }

  // Candidates for `var` from one positive atom whose other end is bound.
  // Returns false when no such atom exists.
  bool candidates_for(int var, std::span<const EntityId>& out,
                      EntityId& single) const {
    bool have = false;
    for (const Atom& a : cq_.atoms) {
      if (a.negated) continue;
      const bool head_is = !a.head.is_constant() && slot(a.head) == var;
      const bool tail_is = !a.tail.is_constant() && slot(a.tail) == var;
      if (head_is == tail_is) continue;
      const auto other = resolve(head_is ? a.tail : a.head);
      if (!other) continue;
      std::span<const EntityId> list;
      if (a.is_equality()) {
        single = *other;
        list = std::span<const EntityId>(&single, 1);
      } else {
        list = kg_.neighbors(*other, a.relation,
                             head_is ? Direction::kTailToHead : Direction::kHeadToTail);
      }
      if (!have || list.size() < out.size()) out = list;
      have = true;
    }
    return have;
  }

  void search() {
    if (value_[m_] >= 0 && found_[value_[m_]]) return;
    // Pick the unbound variable with the smallest candidate list.
    int best_var = -1;
    std::span<const EntityId> best_list;
    EntityId best_single = -1;
    bool best_constrained = false;
    for (int v = 0; v <= m_; ++v) {
      if (!used_[v] || value_[v] >= 0) continue;
      std::span<const EntityId> list;
      EntityId single = -1;
      const bool constrained = candidates_for(v, list, single);
      const bool better = best_var < 0 || (constrained && !best_constrained) ||
                          (constrained == best_constrained && constrained &&
                           list.size() < best_list.size());
      if (better) {
        best_var = v;
        best_list = list;
        best_single = single;
        best_constrained = constrained;
      }
    }
    if (best_var < 0) {
      found_[value_[m_]] = 1;
      return;
    }
    std::vector<EntityId> all;
    if (!best_constrained) {
      all.resize(kg_.entity_count());
      for (EntityId e = 0; e < kg_.entity_count(); ++e) all[e] = e;
      best_list = all;
    } else if (best_list.size() == 1 && best_list.data() == &best_single) {
      all.assign(1, best_single);
      best_list = all;
    }
    for (EntityId candidate : best_list) {
      if (best_var == m_ && found_[candidate]) continue;
      value_[best_var] = candidate;
      if (consistent(best_var)) search();
    }
    value_[best_var] = -1;
  }

  // Checks every atom that mentions `var` and is now fully bound.
  bool consistent(int var) const {
    for (const Atom& a : cq_.atoms) {
      const bool mentions = (!a.head.is_constant() && slot(a.head) == var) ||
                            (!a.tail.is_constant() && slot(a.tail) == var);
      if (!mentions) continue;
      if (!resolve(a.head) || !resolve(a.tail)) continue;
      if (!holds(a)) return false;
    }
    return true;
  }

  const ConjunctiveQuery& cq_;
  int m_;
  const KnowledgeGraph& kg_;
  std::vector<EntityId> value_;
  std::vector<char> used_;
  std::vector<char> found_;
};

// ---------------------------------------------------------------------------
// Query-type catalog
// ---------------------------------------------------------------------------

struct SlotTerm {
  enum class Kind { kConst, kVar, kFree } kind = Kind::kFree;
  int index = 0;
  friend auto operator<=>(const SlotTerm&, const SlotTerm&) = default;
};

struct PatternAtom {
  int relation_slot = 0;
  SlotTerm head;
  SlotTerm tail;
  bool negated = false;
  friend auto operator<=>(const PatternAtom&, const PatternAtom&) = default;
};

struct Pattern {
  std::string name;
  std::vector<std::vector<PatternAtom>> disjuncts;
  int constant_slots = 0;
  int relation_slots = 0;
  int variable_slots = 0;
};

SlotTerm parse_slot_term(std::string_view s) {
  if (s == "y") return {SlotTerm::Kind::kFree, 0};
  const int index = std::stoi(std::string(s.substr(1)));
  return {s[0] == 'c' ? SlotTerm::Kind::kConst : SlotTerm::Kind::kVar, index};
}

// Compact notation: "r0(c0,x0) & !r1(c1,x0) | ...". Constants sit at the
// leaves and y at the root.
Pattern parse_pattern(std::string name, std::string_view text) {
  Pattern p;
  p.name = std::move(name);
  p.disjuncts.emplace_back();
  std::size_t i = 0;
  auto skip = [&] { while (i < text.size() && text[i] == ' ') ++i; };
  while (true) {
    skip();
    PatternAtom atom;
    if (text[i] == '!') { atom.negated = true; ++i; }
    const std::size_t open = text.find('(', i);
    const std::size_t comma = text.find(',', open);
    const std::size_t close = text.find(')', comma);
    atom.relation_slot = std::stoi(std::string(text.substr(i + 1, open - i - 1)));
    atom.head = parse_slot_term(text.substr(open + 1, comma - open - 1));
    atom.tail = parse_slot_term(text.substr(comma + 1, close - comma - 1));
    p.disjuncts.back().push_back(atom);
    p.relation_slots = std::max(p.relation_slots, atom.relation_slot + 1);
    for (const SlotTerm& t : {atom.head, atom.tail}) {
      if (t.kind == SlotTerm::Kind::kConst) p.constant_slots = std::max(p.constant_slots, t.index + 1);
      if (t.kind == SlotTerm::Kind::kVar) p.variable_slots = std::max(p.variable_slots, t.index + 1);
    }
    i = close + 1;
    skip();
    if (i >= text.size()) break;
    if (text[i] == '|') p.disjuncts.emplace_back();
    ++i;
  }
  return p;
}

const std::vector<Pattern>& catalog() {
  static const std::vector<Pattern> patterns = [] {
    std::vector<Pattern> out;
    auto add = [&](const char* name, const char* text) { out.push_back(parse_pattern(name, text)); };
    add("1p", "r0(c0,y)");
    add("2p", "r0(c0,x0) & r1(x0,y)");
    add("3p", "r0(c0,x0) & r1(x0,x1) & r2(x1,y)");
    add("2i", "r0(c0,y) & r1(c1,y)");
    add("3i", "r0(c0,y) & r1(c1,y) & r2(c2,y)");
    add("pi", "r0(c0,x0) & r1(x0,y) & r2(c1,y)");
    add("ip", "r0(c0,x0) & r1(c1,x0) & r2(x0,y)");
    add("2u", "r0(c0,y) | r1(c1,y)");
    add("up", "r0(c0,x0) & r2(x0,y) | r1(c1,x0) & r2(x0,y)");
    add("2in", "r0(c0,y) & !r1(c1,y)");
    add("3in", "r0(c0,y) & r1(c1,y) & !r2(c2,y)");
    // Argument order as in the query-graph illustration of INP.
    add("inp", "r0(x0,c0) & !r1(c1,x0) & r2(y,x0)");
    add("pin", "r0(c0,x0) & r1(x0,y) & !r2(c1,y)");
    add("pni", "r0(c0,x0) & !r1(x0,y) & r2(c1,y)");
    return out;
  }();
  return patterns;
}

const Pattern& find_pattern(std::string_view type) {
  for (const Pattern& p : catalog()) {
    if (p.name == type) return p;
  }
  throw Error(ErrorCode::kArgument, fmt::format("unknown query type '{}'", type));
}

// ---------------------------------------------------------------------------
// Grounding
// ---------------------------------------------------------------------------

class Grounder {
 public:
  Grounder(const Pattern& pattern, const KnowledgeGraph& kg, Rng& rng)
      : pattern_(pattern), kg_(kg), rng_(rng) {
    by_relation_.resize(kg.relation_count());
    for (const Triple& t : kg.triples()) by_relation_[t.relation].push_back(t);
    for (const auto& d : pattern.disjuncts) {
      for (const PatternAtom& a : d) {
        if (std::find(atoms_.begin(), atoms_.end(), a) == atoms_.end()) atoms_.push_back(a);
      }
    }
  }

  // One grounding attempt; nullopt when the random walk dead-ends.
  std::optional<Efo1Query> attempt() {
    consts_.assign(pattern_.constant_slots, -1);
    vars_.assign(pattern_.variable_slots, -1);
    rels_.assign(pattern_.relation_slots, -1);
    free_ = -1;
    std::vector<char> done(atoms_.size(), 0);
    auto positive_pending = [&] {
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (!atoms_[i].negated && !done[i]) return true;
      }
      return false;
    };
    // Start at an atom touching y so the walk is rooted at the answer.
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const PatternAtom& a = atoms_[i];
      if (!a.negated && (a.head.kind == SlotTerm::Kind::kFree ||
                         a.tail.kind == SlotTerm::Kind::kFree)) {
        if (!ground_positive(a)) return std::nullopt;
        done[i] = 1;
        break;
      }
    }
    while (positive_pending()) {
      std::size_t pick = atoms_.size();
      for (std::size_t i = 0; i < atoms_.size() && pick == atoms_.size(); ++i) {
        if (!atoms_[i].negated && !done[i] &&
            (value(atoms_[i].head) >= 0 || value(atoms_[i].tail) >= 0)) {
          pick = i;
        }
      }
      for (std::size_t i = 0; i < atoms_.size() && pick == atoms_.size(); ++i) {
        if (!atoms_[i].negated && !done[i]) pick = i;
      }
      if (!ground_positive(atoms_[pick])) return std::nullopt;
      done[pick] = 1;
    }
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (atoms_[i].negated && !ground_negated(atoms_[i])) return std::nullopt;
    }
    return instantiate();
  }

 private:
  EntityId& value(const SlotTerm& t) {
    switch (t.kind) {
      case SlotTerm::Kind::kConst: return consts_[t.index];
      case SlotTerm::Kind::kVar: return vars_[t.index];
      case SlotTerm::Kind::kFree: break;
    }
    return free_;
  }

  std::optional<Triple> random_triple(RelationId r) {
    const std::vector<Triple>& pool = r >= 0 ? by_relation_[r] : kg_.triples();
    if (pool.empty()) return std::nullopt;
    return pool[rng_.uniform_index(pool.size())];
  }

  bool ground_positive(const PatternAtom& a) {
    EntityId& h = value(a.head);
    EntityId& t = value(a.tail);
    RelationId& r = rels_[a.relation_slot];
    if (h >= 0 && t >= 0) {
      if (r >= 0) return kg_.contains(h, r, t);
      std::vector<RelationId> options;
      for (RelationId c = 0; c < kg_.relation_count(); ++c) {
        if (kg_.contains(h, c, t)) options.push_back(c);
      }
      if (options.empty()) return false;
      r = options[rng_.uniform_index(options.size())];
      return true;
    }
    if (h < 0 && t < 0) {
      const auto triple = random_triple(r);
      if (!triple) return false;
      h = triple->head;
      r = triple->relation;
      t = triple->tail;
      return true;
    }
    // Extend the walk from the assigned end.
    const bool from_head = h >= 0;
    const EntityId anchor = from_head ? h : t;
    const Direction dir = from_head ? Direction::kHeadToTail : Direction::kTailToHead;
    std::vector<std::pair<RelationId, EntityId>> options;
    for (RelationId c = 0; c < kg_.relation_count(); ++c) {
      if (r >= 0 && c != r) continue;
      for (EntityId e : kg_.neighbors(anchor, c, dir)) options.emplace_back(c, e);
    }
    if (options.empty()) return false;
    const auto [rel, other] = options[rng_.uniform_index(options.size())];
    r = rel;
    (from_head ? t : h) = other;
    return true;
  }

  // Negated atoms must be false on the witness assignment but non-vacuous:
  // the chosen relation/constant is drawn from an existing triple.
  bool ground_negated(const PatternAtom& a) {
    EntityId& h = value(a.head);
    EntityId& t = value(a.tail);
    RelationId& r = rels_[a.relation_slot];
    if (h >= 0 && t >= 0) {
      if (r >= 0) return !kg_.contains(h, r, t);
      std::vector<RelationId> active;
      std::vector<RelationId> any;
      for (RelationId c = 0; c < kg_.relation_count(); ++c) {
        if (kg_.contains(h, c, t)) continue;
        any.push_back(c);
        if (!kg_.neighbors(h, c, Direction::kHeadToTail).empty()) active.push_back(c);
      }
      const auto& pool = active.empty() ? any : active;
      if (pool.empty()) return false;
      r = pool[rng_.uniform_index(pool.size())];
      return true;
    }
    for (int tries = 0; tries < 64; ++tries) {
      const auto triple = random_triple(r);
      if (!triple) return false;
      if (h >= 0) {
        if (triple->head == h || kg_.contains(h, triple->relation, triple->tail)) continue;
        t = triple->tail;
      } else if (t >= 0) {
        if (triple->tail == t || kg_.contains(triple->head, triple->relation, t)) continue;
        h = triple->head;
      } else {
        const auto tail = static_cast<EntityId>(rng_.uniform_index(kg_.entity_count()));
        if (kg_.contains(triple->head, triple->relation, tail)) continue;
        h = triple->head;
        t = tail;
      }
      r = triple->relation;
      return true;
    }
    return false;
  }

  Term to_term(const SlotTerm& s) const {
    switch (s.kind) {
      case SlotTerm::Kind::kConst: return Term::constant(consts_[s.index]);
      case SlotTerm::Kind::kVar: return Term::existential(s.index);
      case SlotTerm::Kind::kFree: break;
    }
    return Term::free();
  }

  Efo1Query instantiate() const {
    Efo1Query q;
    q.existential_count = pattern_.variable_slots;
    for (const auto& d : pattern_.disjuncts) {
      ConjunctiveQuery cq;
      for (const PatternAtom& a : d) {
        cq.atoms.push_back({rels_[a.relation_slot], to_term(a.head), to_term(a.tail), a.negated});
      }
      q.disjuncts.push_back(std::move(cq));
    }
    return q;
  }

  const Pattern& pattern_;
  const KnowledgeGraph& kg_;
  Rng& rng_;
  std::vector<std::vector<Triple>> by_relation_;
  std::vector<PatternAtom> atoms_;
  std::vector<EntityId> consts_;
  std::vector<EntityId> vars_;
  std::vector<RelationId> rels_;
  EntityId free_ = -1;
};

// ---------------------------------------------------------------------------
// JSON codec
// ---------------------------------------------------------------------------

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParse, fmt::format("{}: {}", path, what));
}

OrderedJson term_to_json(const Term& t) {
  switch (t.kind) {
    case Term::Kind::kConstant: return {{"c", t.value}};
    case Term::Kind::kExistential: return {{"x", t.value}};
    case Term::Kind::kFree: break;
  }
  return "y";
}

Term term_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "y") return Term::free();
    parse_fail(path, fmt::format("free variable '{}' is not 'y'; only one free variable "
                                 "is allowed",
                                 j.get<std::string>()));
  }
  if (!j.is_object() || j.size() != 1) parse_fail(path, "expected {\"c\":id}, {\"x\":k} or \"y\"");
  const auto& [key, val] = *j.items().begin();
  if (!val.is_number_integer() || val.get<std::int64_t>() < 0) {
    parse_fail(path + "." + key, "expected a non-negative integer");
  }
  if (key == "c") return Term::constant(val.get<EntityId>());
  if (key == "x") return Term::existential(val.get<int>());
  parse_fail(path, fmt::format("unknown term kind '{}'", key));
}

OrderedJson query_to_json(const Efo1Query& q) {
  OrderedJson disjuncts = OrderedJson::array();
  for (const auto& cq : q.disjuncts) {
    OrderedJson atoms = OrderedJson::array();
    for (const Atom& a : cq.atoms) {
      OrderedJson atom;
      atom["rel"] = a.is_equality() ? OrderedJson("eq") : OrderedJson(a.relation);
      atom["head"] = term_to_json(a.head);
      atom["tail"] = term_to_json(a.tail);
      atom["neg"] = a.negated;
      atoms.push_back(std::move(atom));
    }
    disjuncts.push_back(std::move(atoms));
  }
  return disjuncts;
}

Efo1Query query_from_json(const Json& root) {
  if (!root.is_object()) parse_fail("$", "expected a JSON object");
  if (!root.contains("disjuncts")) parse_fail("$", "missing field 'disjuncts'");
  const Json& ds = root.at("disjuncts");
  if (!ds.is_array() || ds.empty()) parse_fail("disjuncts", "expected a nonempty array");
  Efo1Query q;
  int max_x = -1;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string dpath = fmt::format("disjuncts[{}]", i);
    if (!ds[i].is_array() || ds[i].empty()) parse_fail(dpath, "expected a nonempty atom array");
    ConjunctiveQuery cq;
    for (std::size_t j = 0; j < ds[i].size(); ++j) {
      const std::string apath = fmt::format("{}[{}]", dpath, j);
      const Json& aj = ds[i][j];
      if (!aj.is_object()) parse_fail(apath, "expected an atom object");
      for (const char* key : {"rel", "head", "tail"}) {
        if (!aj.contains(key)) parse_fail(apath, fmt::format("missing field '{}'", key));
      }
      Atom atom;
      const Json& rel = aj.at("rel");
      if (rel.is_string() && rel.get<std::string>() == "eq") {
        atom.relation = kEqualityRelation;
      } else if (rel.is_number_integer() && rel.get<std::int64_t>() >= 0) {
        atom.relation = rel.get<RelationId>();
      } else {
        parse_fail(apath + ".rel", "expected a non-negative integer or \"eq\"");
      }
      atom.head = term_from_json(aj.at("head"), apath + ".head");
      atom.tail = term_from_json(aj.at("tail"), apath + ".tail");
      if (aj.contains("neg")) {
        const Json& neg = aj.at("neg");
        if (neg.is_boolean()) atom.negated = neg.get<bool>();
        else if (neg.is_number_integer() && (neg == 0 || neg == 1)) atom.negated = neg == 1;
        else parse_fail(apath + ".neg", "expected a boolean or 0/1");
      }
      for (const Term& t : {atom.head, atom.tail}) {
        if (t.is_existential()) max_x = std::max(max_x, t.value);
      }
      cq.atoms.push_back(atom);
    }
    q.disjuncts.push_back(std::move(cq));
  }
  q.existential_count = max_x + 1;
  try {
    q.validate();
  } catch (const Error& e) {
    parse_fail("disjuncts", e.what());
  }
  return q;
}

AnswerSet answers_from_json(const Json& root, const char* key) {
  AnswerSet out;
  if (!root.contains(key)) return out;
  const Json& arr = root.at(key);
  if (!arr.is_array()) parse_fail(key, "expected an array of entity ids");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer() || arr[i].get<std::int64_t>() < 0) {
      parse_fail(fmt::format("{}[{}]", key, i), "expected a non-negative integer");
    }
    out.push_back(arr[i].get<EntityId>());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Json parse_json_line(std::string_view line) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    parse_fail("$", e.what());
  }
}

}  // namespace

void Efo1Query::validate() const {
  if (disjuncts.empty()) throw Error(ErrorCode::kStructure, "query has no disjuncts");
  if (existential_count < 0) throw Error(ErrorCode::kStructure, "negative existential count");
  std::vector<char> seen(existential_count, 0);
  for (std::size_t i = 0; i < disjuncts.size(); ++i) {
    bool has_free = false;
    for (const Atom& a : disjuncts[i].atoms) {
      if (a.relation < 0 && !a.is_equality()) {
        throw Error(ErrorCode::kStructure, fmt::format("invalid relation id {}", a.relation));
      }
      if (a.is_equality() && !a.negated && a.head == a.tail) {
        throw Error(ErrorCode::kStructure, "non-negated equality between identical terms");
      }
      for (const Term& t : {a.head, a.tail}) {
        if (t.is_free()) has_free = true;
        if (t.is_existential()) {
          if (t.value < 0 || t.value >= existential_count) {
            throw Error(ErrorCode::kStructure,
                        fmt::format("existential x{} outside 0..{}", t.value,
                                    existential_count - 1));
          }
          seen[t.value] = 1;
        }
      }
    }
    if (!has_free) {
      throw Error(ErrorCode::kStructure,
                  fmt::format("disjunct {} does not mention the free variable", i));
    }
    build_query_graph(disjuncts[i]);  // connectivity
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCode::kStructure, "existential indices are not dense");
  }
}

QueryGraph build_query_graph(const ConjunctiveQuery& cq) {
  if (cq.atoms.empty()) throw Error(ErrorCode::kStructure, "conjunctive query has no atoms");
  QueryGraph g;
  auto node_of = [&](const Term& t) {
    const auto it = std::find(g.nodes.begin(), g.nodes.end(), t);
    if (it != g.nodes.end()) return static_cast<int>(it - g.nodes.begin());
    g.nodes.push_back(t);
    return static_cast<int>(g.nodes.size() - 1);
  };
  for (const Atom& a : cq.atoms) {
    const int src = node_of(a.head);
    const int dst = node_of(a.tail);
    g.edges.push_back({src, dst, a.relation, a.negated});
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].is_free()) g.free_node = static_cast<int>(i);
  }
  if (g.free_node < 0) throw Error(ErrorCode::kStructure, "query graph has no free variable node");

  std::vector<char> reached(g.nodes.size(), 0);
  std::deque<int> frontier{0};
  reached[0] = 1;
  while (!frontier.empty()) {
    const int n = frontier.front();
    frontier.pop_front();
    for (const QueryEdge& e : g.edges) {
      for (auto [a, b] : {std::pair{e.src, e.dst}, std::pair{e.dst, e.src}}) {
        if (a == n && !reached[b]) {
          reached[b] = 1;
          frontier.push_back(b);
        }
      }
    }
  }
  if (std::find(reached.begin(), reached.end(), 0) != reached.end()) {
    throw Error(ErrorCode::kStructure, "query graph is disconnected");
  }
  return g;
}

int query_depth(const QueryGraph& g) {
  std::vector<int> dist(g.nodes.size(), -1);
  std::deque<int> frontier{g.free_node};
  dist[g.free_node] = 0;
  while (!frontier.empty()) {
    const int n = frontier.front();
    frontier.pop_front();
    for (const QueryEdge& e : g.edges) {
      for (auto [a, b] : {std::pair{e.src, e.dst}, std::pair{e.dst, e.src}}) {
        if (a == n && dist[b] < 0) {
          dist[b] = dist[n] + 1;
          frontier.push_back(b);
        }
      }
    }
  }
  int depth = -1;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].is_constant()) depth = std::max(depth, dist[i]);
  }
  if (depth < 0) throw Error(ErrorCode::kDepth, "query graph has no constant node");
  return depth;
}

AnswerSet oracle_answers(const ConjunctiveQuery& cq, int existential_count,
                         const KnowledgeGraph& kg, double guard) {
  ConjunctiveSearch search(cq, existential_count, kg);
  const double work = std::pow(static_cast<double>(kg.entity_count()),
                               search.used_existentials());
  if (work > guard) {
    throw Error(ErrorCode::kCapacity,
                fmt::format("{}^{} assignments exceed the enumeration guard {}",
                            kg.entity_count(), search.used_existentials(), guard));
  }
  std::vector<char> answers(kg.entity_count(), 0);
  search.run(answers);
  AnswerSet out;
  for (EntityId e = 0; e < kg.entity_count(); ++e) {
    if (answers[e]) out.push_back(e);
  }
  return out;
}

AnswerSet oracle_answers(const Efo1Query& query, const KnowledgeGraph& kg, double guard) {
  AnswerSet out;
  for (const ConjunctiveQuery& cq : query.disjuncts) {
    const AnswerSet part = oracle_answers(cq, query.existential_count, kg, guard);
    AnswerSet merged;
    std::set_union(out.begin(), out.end(), part.begin(), part.end(), std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

AnswerSet QueryInstance::all_answers() const {
  AnswerSet out;
  std::set_union(easy.begin(), easy.end(), hard.begin(), hard.end(), std::back_inserter(out));
  return out;
}

const std::vector<std::string>& query_type_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Pattern& p : catalog()) out.push_back(p.name);
    return out;
  }();
  return names;
}

bool is_negation_type(std::string_view type) {
  const Pattern& p = find_pattern(type);
  for (const auto& d : p.disjuncts) {
    for (const PatternAtom& a : d) {
      if (a.negated) return true;
    }
  }
  return false;
}

std::vector<QueryInstance> sample_instances(const DatasetSplit& split, std::string_view type,
                                            int count, std::uint64_t seed,
                                            bool require_hard) {
  const Pattern& pattern = find_pattern(type);
  if (count < 0) throw Error(ErrorCode::kArgument, "instance count must be non-negative");
  const auto& names = query_type_names();
  const auto type_index = static_cast<std::uint64_t>(
      std::find(names.begin(), names.end(), type) - names.begin());
  Rng rng = Rng(seed).fork(type_index);
  Grounder grounder(pattern, split.full, rng);
  constexpr int kMaxAttempts = 1000;
  std::vector<QueryInstance> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::optional<QueryInstance> instance;
    for (int attempt = 0; attempt < kMaxAttempts && !instance; ++attempt) {
      auto query = grounder.attempt();
      if (!query) continue;
      AnswerSet full = oracle_answers(*query, split.full);
      if (full.empty()) continue;
      QueryInstance inst;
      inst.type = std::string(type);
      inst.query = std::move(*query);
      inst.easy = oracle_answers(inst.query, split.observed);
      std::set_difference(full.begin(), full.end(), inst.easy.begin(), inst.easy.end(),
                          std::back_inserter(inst.hard));
      if (require_hard && inst.hard.empty()) continue;
      instance = std::move(inst);
    }
    if (!instance) {
      throw Error(ErrorCode::kSampling,
                  fmt::format("could not ground a '{}' query after {} attempts", type,
                              kMaxAttempts));
    }
    out.push_back(std::move(*instance));
  }
  return out;
}

std::string serialize_query(const Efo1Query& query) {
  OrderedJson root;
  root["disjuncts"] = query_to_json(query);
  return root.dump();
}

Efo1Query parse_query(std::string_view line) { return query_from_json(parse_json_line(line)); }

std::string serialize_instance(const QueryInstance& instance) {
  OrderedJson root;
  root["type"] = instance.type;
  root["disjuncts"] = query_to_json(instance.query);
  root["easy"] = instance.easy;
  root["hard"] = instance.hard;
  return root.dump();
}

QueryInstance parse_instance(std::string_view line) {
  const Json root = parse_json_line(line);
  QueryInstance inst;
  inst.query = query_from_json(root);
  if (root.contains("type")) {
    if (!root.at("type").is_string()) parse_fail("type", "expected a string");
    inst.type = root.at("type").get<std::string>();
  }
  inst.easy = answers_from_json(root, "easy");
  inst.hard = answers_from_json(root, "hard");
  return inst;
}

void write_instances(const std::filesystem::path& path,
                     const std::vector<QueryInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  for (const QueryInstance& inst : instances) out << serialize_instance(inst) << '\n';
}

std::vector<QueryInstance> read_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  std::vector<QueryInstance> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_instance(line));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

}  // namespace lmpnn
