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
#include "lmpnn/lmpnn_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "blob_io.hpp"
#include "lmpnn/error.hpp"
#include "lmpnn/message_encoding.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {

std::string_view message_mode_name(MessageMode mode) {
  return mode == MessageMode::kKgeCat ? "kgecat" : "closed_form";
}

MessageMode parse_message_mode(std::string_view name) {
  if (name == "closed_form") return MessageMode::kClosedForm;
  if (name == "kgecat") return MessageMode::kKgeCat;
  throw Error(ErrorCode::kArgument,
              fmt::format("unknown message mode '{}' (closed_form|kgecat)", name));
}

std::string_view join_mode_name(JoinMode mode) {
  return mode == JoinMode::kMinRank ? "min_rank" : "max";
}

JoinMode parse_join_mode(std::string_view name) {
  if (name == "max") return JoinMode::kMax;
  if (name == "min_rank") return JoinMode::kMinRank;
  throw Error(ErrorCode::kArgument, fmt::format("unknown join mode '{}' (max|min_rank)", name));
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

Eigen::Index LmpnnParams::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + v_x.size() + v_y.size() +
         (message == MessageMode::kKgeCat ? kgecat.size() : 0);
}

namespace {

template <typename Params, typename Fn>
void for_each_block(Params& p, Fn&& fn) {
  fn(p.w1.data(), p.w1.size());
  fn(p.b1.data(), p.b1.size());
  fn(p.w2.data(), p.w2.size());
  fn(p.b2.data(), p.b2.size());
  fn(p.v_x.data(), p.v_x.size());
  fn(p.v_y.data(), p.v_y.size());
  if (p.message == MessageMode::kKgeCat) fn(p.kgecat.data(), p.kgecat.size());
}

}  // namespace

Vec LmpnnParams::flatten() const {
  Vec out(parameter_count());
  Eigen::Index at = 0;
  for_each_block(*this, [&](const double* data, Eigen::Index n) {
    std::copy(data, data + n, out.data() + at);
    at += n;
  });
  return out;
}

void LmpnnParams::assign_flat(const VecRef& flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorCode::kShape, fmt::format("expected {} parameters, got {}",
                                               parameter_count(), flat.size()));
  }
  Eigen::Index at = 0;
  for_each_block(*this, [&](double* data, Eigen::Index n) {
    std::copy(flat.data() + at, flat.data() + at + n, data);
    at += n;
  });
}

LmpnnParams LmpnnParams::zeros_like() const {
  LmpnnParams z = *this;
  for_each_block(z, [](double* data, Eigen::Index n) { std::fill(data, data + n, 0.0); });
  return z;
}

LmpnnParams init_params(int dim, int hidden, double epsilon, std::uint64_t seed,
                        MessageMode message, int relation_width) {
  if (dim <= 0 || hidden <= 0) {
    throw Error(ErrorCode::kConfig, fmt::format("bad MLP shape dim={} hidden={}", dim, hidden));
  }
  if (message == MessageMode::kKgeCat && relation_width <= 0) {
    throw Error(ErrorCode::kConfig, "KGE-Cat messages need the relation width");
  }
  Rng rng(seed);
  auto fill = [&](double* data, Eigen::Index n, double scale) {
    for (Eigen::Index i = 0; i < n; ++i) data[i] = scale * rng.normal();
  };
  LmpnnParams p;
  p.epsilon = epsilon;
  p.message = message;
  p.w1.resize(hidden, dim);
  p.b1 = Vec::Zero(hidden);
  p.w2.resize(dim, hidden);
  p.b2 = Vec::Zero(dim);
  p.v_x.resize(dim);
  p.v_y.resize(dim);
  fill(p.w1.data(), p.w1.size(), std::sqrt(2.0 / dim));
  fill(p.w2.data(), p.w2.size(), std::sqrt(1.0 / hidden));
  fill(p.v_x.data(), dim, std::sqrt(1.0 / dim));
  fill(p.v_y.data(), dim, std::sqrt(1.0 / dim));
  if (message == MessageMode::kKgeCat) {
    const int width = dim + relation_width + 2;
    p.kgecat.resize(dim, width);
    fill(p.kgecat.data(), p.kgecat.size(), std::sqrt(1.0 / width));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

Vec kgecat_feature(const VecRef& source, const VecRef& relation_params, Direction direction,
                   bool negated) {
  Vec f(source.size() + relation_params.size() + 2);
  f << source, relation_params, direction == Direction::kTailToHead ? 1.0 : 0.0,
      negated ? 1.0 : 0.0;
  return f;
}

Vec encode_message_kgecat(const VecRef& feature, const RowMatrix& linear) {
  if (linear.cols() != feature.size()) {
    throw Error(ErrorCode::kShape, fmt::format("KGE-Cat feature width {} does not match {}",
                                               feature.size(), linear.cols()));
  }
  return linear * feature;
}

namespace {

Vec node_message(const EmbeddingTable& table, const LmpnnParams& params, const VecRef& source,
                 RelationId relation, Direction direction, bool negated) {
  if (relation == kEqualityRelation || params.message == MessageMode::kClosedForm) {
    return encode_message(table, source, relation, direction, negated);
  }
  return encode_message_kgecat(
      kgecat_feature(source, table.relation_row(relation), direction, negated), params.kgecat);
}

// J^T g for node_message w.r.t. its source; KGE-Cat also accumulates dM.
Vec node_message_vjp(const EmbeddingTable& table, const LmpnnParams& params,
                     const VecRef& source, RelationId relation, Direction direction,
                     bool negated, const VecRef& g, LmpnnParams& grad) {
  if (relation == kEqualityRelation || params.message == MessageMode::kClosedForm) {
    return encode_message_vjp(table, relation, direction, negated, g);
  }
  const Vec feature = kgecat_feature(source, table.relation_row(relation), direction, negated);
  grad.kgecat.noalias() += g * feature.transpose();
  return params.kgecat.leftCols(source.size()).transpose() * g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

NodeStates init_node_states(const QueryGraph& g, const EmbeddingTable& table,
                            const LmpnnParams& params) {
  if (params.dim() != table.backend.dim) {
    throw Error(ErrorCode::kShape, fmt::format("MLP width {} does not match embedding dim {}",
                                               params.dim(), table.backend.dim));
  }
  NodeStates z(g.node_count(), params.dim());
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const Term& t = g.nodes[n];
    if (t.is_constant()) {
      z.row(n) = table.entity_row(t.value).transpose();
    } else if (t.is_existential()) {
      z.row(n) = params.v_x.transpose();
    } else {
      z.row(n) = params.v_y.transpose();
    }
  }
  return z;
}

RowMatrix aggregate_messages(const QueryGraph& g, const EmbeddingTable& table,
                             const LmpnnParams& params, const NodeStates& states) {
  RowMatrix a = params.epsilon * states;
  for (const QueryEdge& e : g.edges) {
    a.row(e.dst) += node_message(table, params, states.row(e.src).transpose(), e.relation,
                                 Direction::kHeadToTail, e.negated)
                        .transpose();
    a.row(e.src) += node_message(table, params, states.row(e.dst).transpose(), e.relation,
                                 Direction::kTailToHead, e.negated)
                        .transpose();
  }
  return a;
}

namespace {

RowMatrix hidden_preactivation(const LmpnnParams& p, const RowMatrix& a) {
  RowMatrix h = a * p.w1.transpose();
  h.rowwise() += p.b1.transpose();
  return h;
}

NodeStates mlp_output(const LmpnnParams& p, const RowMatrix& hidden_pre) {
  NodeStates z = hidden_pre.cwiseMax(0.0) * p.w2.transpose();
  z.rowwise() += p.b2.transpose();
  return z;
}

void check_finite(const QueryGraph& g, const NodeStates& z, int layer) {
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    if (!z.row(n).allFinite()) {
      const Term& t = g.nodes[n];
      const std::string name = t.is_constant()      ? fmt::format("c{}", t.value)
                               : t.is_existential() ? fmt::format("x{}", t.value)
                                                    : std::string("y");
      throw Error(ErrorCode::kNumeric,
                  fmt::format("non-finite state at node {} ({}) after layer {}", n, name, layer));
    }
  }
}

}  // namespace

NodeStates layer_update(const QueryGraph& g, const EmbeddingTable& table,
                        const LmpnnParams& params, const NodeStates& states) {
  NodeStates z = mlp_output(params, hidden_preactivation(params, aggregate_messages(g, table, params, states)));
  check_finite(g, z, 1);
  return z;
}

int resolve_depth(const QueryGraph& g, std::optional<int> depth_override, int offset) {
  const int base = depth_override ? *depth_override : query_depth(g);
  return std::max(1, base + offset);
}

ForwardTrace forward_trace(const QueryGraph& g, const EmbeddingTable& table,
                           const LmpnnParams& params, int depth) {
  ForwardTrace trace;
  trace.free_node = g.free_node;
  trace.states.push_back(init_node_states(g, table, params));
  for (int l = 0; l < depth; ++l) {
    trace.aggregated.push_back(aggregate_messages(g, table, params, trace.states.back()));
    trace.hidden_pre.push_back(hidden_preactivation(params, trace.aggregated.back()));
    trace.states.push_back(mlp_output(params, trace.hidden_pre.back()));
    check_finite(g, trace.states.back(), l + 1);
  }
  return trace;
}

Vec forward_conjunctive(const QueryGraph& g, const EmbeddingTable& table,
                        const LmpnnParams& params, std::optional<int> depth_override) {
  return forward_trace(g, table, params, resolve_depth(g, depth_override)).output();
}

void backward_conjunctive(const QueryGraph& g, const EmbeddingTable& table,
                          const LmpnnParams& params, const ForwardTrace& trace,
                          const VecRef& d_output, LmpnnParams& grad) {
  const int depth = static_cast<int>(trace.aggregated.size());
  RowMatrix d_states = RowMatrix::Zero(g.node_count(), params.dim());
  d_states.row(g.free_node) = d_output.transpose();
  for (int l = depth - 1; l >= 0; --l) {
    const RowMatrix& hpre = trace.hidden_pre[l];
    const RowMatrix hact = hpre.cwiseMax(0.0);
    grad.w2.noalias() += d_states.transpose() * hact;
    grad.b2 += d_states.colwise().sum().transpose();
    RowMatrix d_hidden = d_states * params.w2;
    d_hidden.array() *= (hpre.array() > 0.0).cast<double>();
    grad.w1.noalias() += d_hidden.transpose() * trace.aggregated[l];
    grad.b1 += d_hidden.colwise().sum().transpose();
    const RowMatrix d_agg = d_hidden * params.w1;

    const NodeStates& z = trace.states[l];
    RowMatrix d_prev = params.epsilon * d_agg;
    for (const QueryEdge& e : g.edges) {
      d_prev.row(e.src) += node_message_vjp(table, params, z.row(e.src).transpose(), e.relation,
                                            Direction::kHeadToTail, e.negated,
                                            d_agg.row(e.dst).transpose(), grad)
                               .transpose();
      d_prev.row(e.dst) += node_message_vjp(table, params, z.row(e.dst).transpose(), e.relation,
                                            Direction::kTailToHead, e.negated,
                                            d_agg.row(e.src).transpose(), grad)
                               .transpose();
    }
    d_states = std::move(d_prev);
  }
  // Layer-0 states: constants are frozen lookups, variables are parameters.
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.nodes[n].is_existential()) grad.v_x += d_states.row(n).transpose();
    if (g.nodes[n].is_free()) grad.v_y += d_states.row(n).transpose();
  }
}

// ---------------------------------------------------------------------------
// Ranking and DNF join
// ---------------------------------------------------------------------------

Vec cosine_scores(const VecRef& zq, const EmbeddingTable& table) {
  const double qn = zq.norm();
  if (!(qn > 0.0) || !std::isfinite(qn)) {
    throw Error(ErrorCode::kNumeric, "query embedding has zero or non-finite norm");
  }
  Vec scores = table.entity * (zq / qn);
  for (Eigen::Index e = 0; e < scores.size(); ++e) {
    const double en = table.entity.row(e).norm();
    scores[e] = en > 0.0 ? scores[e] / en : 0.0;
  }
  return scores;
}

Ranking rank_scores(const VecRef& scores, std::span<const EntityId> exclude) {
  std::vector<char> drop(scores.size(), 0);
  for (EntityId e : exclude) {
    if (e >= 0 && e < scores.size()) drop[e] = 1;
  }
  Ranking out;
  out.reserve(scores.size());
  for (Eigen::Index e = 0; e < scores.size(); ++e) {
    if (!drop[e]) out.push_back({static_cast<EntityId>(e), scores[e]});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
  return out;
}

Ranking score_and_rank(const VecRef& zq, const EmbeddingTable& table,
                       std::span<const EntityId> exclude) {
  return rank_scores(cosine_scores(zq, table), exclude);
}

Vec join_scores(const std::vector<Vec>& per_disjunct, JoinMode mode) {
  if (per_disjunct.empty()) throw Error(ErrorCode::kArgument, "nothing to join");
  if (mode == JoinMode::kMax) {
    Vec out = per_disjunct.front();
    for (std::size_t i = 1; i < per_disjunct.size(); ++i) out = out.cwiseMax(per_disjunct[i]);
    return out;
  }
  Vec best = Vec::Constant(per_disjunct.front().size(), -std::numeric_limits<double>::infinity());
  for (const Vec& s : per_disjunct) {
    const Ranking r = rank_scores(s);
    for (std::size_t pos = 0; pos < r.size(); ++pos) {
      best[r[pos].entity] = std::max(best[r[pos].entity], -static_cast<double>(pos + 1));
    }
  }
  return best;
}

Vec answer_scores(const Efo1Query& q, const EmbeddingTable& table, const LmpnnParams& params,
                  const AnswerOptions& options) {
  std::vector<Vec> per;
  per.reserve(q.disjuncts.size());
  for (const ConjunctiveQuery& cq : q.disjuncts) {
    const QueryGraph g = build_query_graph(cq);
    const int depth = resolve_depth(g, options.depth_override, options.depth_offset);
    per.push_back(cosine_scores(forward_trace(g, table, params, depth).output(), table));
  }
  return join_scores(per, options.join);
}

Ranking answer_dnf(const Efo1Query& q, const EmbeddingTable& table, const LmpnnParams& params,
                   const AnswerOptions& options) {
  return rank_scores(answer_scores(q, table, params, options));
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const LmpnnParams& params, std::string_view backend,
                     const std::filesystem::path& header_path) {
  const auto blob_name = header_path.stem().string() + ".bin";
  nlohmann::ordered_json header = {
      {"dim", params.dim()},
      {"hidden", params.hidden()},
      {"epsilon", params.epsilon},
      {"message", std::string(message_mode_name(params.message))},
      {"kgecat_width", params.message == MessageMode::kKgeCat ? params.kgecat.cols() : 0},
      {"backend", std::string(backend)},
      {"blob", blob_name},
  };
  std::ofstream out(header_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", header_path.string()));
  out << header.dump(2) << '\n';
  const Vec flat = params.flatten();
  detail::write_f32_blob(header_path.parent_path() / blob_name,
                         std::span<const double>(flat.data(), flat.size()));
}

LmpnnParams load_checkpoint(const std::filesystem::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", header_path.string()));
  LmpnnParams p;
  int dim = 0;
  int hidden = 0;
  Eigen::Index kgecat_width = 0;
  std::string blob;
  try {
    nlohmann::json header;
    in >> header;
    dim = header.at("dim").get<int>();
    hidden = header.at("hidden").get<int>();
    p.epsilon = header.at("epsilon").get<double>();
    p.message = parse_message_mode(header.at("message").get<std::string>());
    kgecat_width = header.at("kgecat_width").get<Eigen::Index>();
    blob = header.at("blob").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                fmt::format("{}: bad checkpoint header: {}", header_path.string(), e.what()));
  }
  if (dim <= 0 || hidden <= 0) throw Error(ErrorCode::kShape, "checkpoint has empty MLP");
  p.w1.resize(hidden, dim);
  p.b1.resize(hidden);
  p.w2.resize(dim, hidden);
  p.b2.resize(dim);
  p.v_x.resize(dim);
  p.v_y.resize(dim);
  if (p.message == MessageMode::kKgeCat) p.kgecat.resize(dim, kgecat_width);
  const auto values = detail::read_f32_blob(header_path.parent_path() / blob,
                                            static_cast<std::size_t>(p.parameter_count()));
  p.assign_flat(Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size())));
  if (!p.flatten().allFinite()) throw Error(ErrorCode::kNumeric, "checkpoint has NaN or Inf");
  return p;
}

}  // namespace lmpnn
