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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lmpnn/kge_backends.hpp"
#include "lmpnn/query_model.hpp"

namespace lmpnn {

enum class MessageMode { kClosedForm, kKgeCat };
std::string_view message_mode_name(MessageMode mode);
MessageMode parse_message_mode(std::string_view name);

// One shared MLP  z' = W2 relu(W1 a + b1) + b2  plus the two variable
// embeddings. In KGE-Cat mode a learned linear map replaces the closed-form
// messages.
struct LmpnnParams {
  RowMatrix w1;  // hidden x dim
  Vec b1;
  RowMatrix w2;  // dim x hidden
  Vec b2;
  Vec v_x;
  Vec v_y;
  double epsilon = 0.1;
  MessageMode message = MessageMode::kClosedForm;
  RowMatrix kgecat;  // dim x (dim + relation_width + 2), KGE-Cat only

  int dim() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }

  // Trainable coordinates in checkpoint order: W1, b1, W2, b2, v_x, v_y[, kgecat].
  Eigen::Index parameter_count() const;
  Vec flatten() const;
  void assign_flat(const VecRef& flat);
  // Same shapes, all zeros; used as a gradient accumulator.
  LmpnnParams zeros_like() const;
};

LmpnnParams init_params(int dim, int hidden, double epsilon, std::uint64_t seed,
                        MessageMode message = MessageMode::kClosedForm,
                        int relation_width = 0);

// Node states, one row per query-graph node.
using NodeStates = RowMatrix;

NodeStates init_node_states(const QueryGraph& g, const EmbeddingTable& table,
                            const LmpnnParams& params);

// eps * z_n + sum of incoming messages, for every node.
RowMatrix aggregate_messages(const QueryGraph& g, const EmbeddingTable& table,
                             const LmpnnParams& params, const NodeStates& states);
NodeStates layer_update(const QueryGraph& g, const EmbeddingTable& table,
                        const LmpnnParams& params, const NodeStates& states);

// query_depth(g) unless overridden, plus offset, floored at 1.
int resolve_depth(const QueryGraph& g, std::optional<int> depth_override, int offset = 0);

struct ForwardTrace {
  std::vector<NodeStates> states;     // depth + 1 entries
  std::vector<RowMatrix> aggregated;  // MLP inputs per layer
  std::vector<RowMatrix> hidden_pre;  // W1 a + b1 per layer
  int free_node = -1;

  VecRef output() const { return states.back().row(free_node).transpose(); }
};

ForwardTrace forward_trace(const QueryGraph& g, const EmbeddingTable& table,
                           const LmpnnParams& params, int depth);
Vec forward_conjunctive(const QueryGraph& g, const EmbeddingTable& table,
                        const LmpnnParams& params,
                        std::optional<int> depth_override = std::nullopt);

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(z_free) at the
// last layer. Entity and relation tables receive no gradient.
void backward_conjunctive(const QueryGraph& g, const EmbeddingTable& table,
                          const LmpnnParams& params, const ForwardTrace& trace,
                          const VecRef& d_output, LmpnnParams& grad);

struct Ranked {
  EntityId entity = 0;
  double score = 0.0;
  friend bool operator==(const Ranked&, const Ranked&) = default;
};
using Ranking = std::vector<Ranked>;

// Cosine of zq against every entity row. Throws kNumeric for a zero zq.
Vec cosine_scores(const VecRef& zq, const EmbeddingTable& table);
// Descending score, ties by ascending id, entities in `exclude` dropped.
Ranking rank_scores(const VecRef& scores, std::span<const EntityId> exclude = {});
Ranking score_and_rank(const VecRef& zq, const EmbeddingTable& table,
                       std::span<const EntityId> exclude = {});

enum class JoinMode { kMax, kMinRank };
std::string_view join_mode_name(JoinMode mode);
JoinMode parse_join_mode(std::string_view name);

struct AnswerOptions {
  JoinMode join = JoinMode::kMax;
  std::optional<int> depth_override;
  int depth_offset = 0;
};

// Joined per-entity scores over the disjuncts. kMinRank yields -min rank.
Vec answer_scores(const Efo1Query& q, const EmbeddingTable& table, const LmpnnParams& params,
                  const AnswerOptions& options = {});
Ranking answer_dnf(const Efo1Query& q, const EmbeddingTable& table, const LmpnnParams& params,
                   const AnswerOptions& options = {});
// Joins per-disjunct score vectors; shared with the CQD baseline.
Vec join_scores(const std::vector<Vec>& per_disjunct, JoinMode mode);

// [entity state, relation params, direction bit (1 = t2h), negation bit].
Vec kgecat_feature(const VecRef& source, const VecRef& relation_params, Direction direction,
                   bool negated);
Vec encode_message_kgecat(const VecRef& feature, const RowMatrix& linear);

// JSON header plus little-endian float32 blob in flatten() order.
void save_checkpoint(const LmpnnParams& params, std::string_view backend,
                     const std::filesystem::path& header_path);
LmpnnParams load_checkpoint(const std::filesystem::path& header_path);

}  // namespace lmpnn
