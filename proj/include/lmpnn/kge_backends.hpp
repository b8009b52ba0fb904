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
#include <functional>
#include <string>
#include <string_view>

#include "lmpnn/kg_store.hpp"
#include "lmpnn/linalg.hpp"

namespace lmpnn {

// Embedding layout: every backend uses one flat real vector per entity.
// ComplEx and RotatE interleave (real, imaginary) pairs, so coordinate k of
// the complex vector lives at indices 2k and 2k+1.
enum class BackendKind { kComplEx, kDistMult, kTransE, kRescal, kRotatE };

std::string_view backend_name(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

struct Backend {
  BackendKind kind = BackendKind::kComplEx;
  int dim = 0;           // flat real width of an entity embedding
  double margin = 9.0;   // gamma, distance-based kinds only
  double reg_weight = 1e-3;
  int reg_power = 3;

  bool distance_based() const {
    return kind == BackendKind::kTransE || kind == BackendKind::kRotatE;
  }
  // RESCAL: dim*dim (row-major W_r); RotatE: dim/2 angles; otherwise dim.
  int relation_width() const;
  void validate() const;
};

// Defaults: q = 3 for inner-product kinds, q = 2 for distance kinds.
Backend make_backend(BackendKind kind, int dim);

// phi(h, r, t).
double score(const Backend& backend, const VecRef& h, const VecRef& r, const VecRef& t);
// psi = sigmoid(phi).
double truth_value(const Backend& backend, const VecRef& h, const VecRef& r,
                   const VecRef& t);
double sigmoid(double x);

// f(h, r): the closed-form tail estimate.
Vec forward_estimate(const Backend& backend, const VecRef& h, const VecRef& r);
// J^T g where J = d f(h, r) / d h. f is affine in h for every kind.
Vec forward_estimate_vjp(const Backend& backend, const VecRef& r, const VecRef& g);

// Relation parameters r' with score(t, r', h) == score(h, r, t).
Vec reciprocal_embedding(const Backend& backend, const VecRef& r);

struct ScoreGradient {
  double score = 0.0;
  Vec d_head;
  Vec d_relation;
  Vec d_tail;
};
ScoreGradient score_gradient(const Backend& backend, const VecRef& h,
                             const VecRef& r, const VecRef& t);

struct EmbeddingTable {
  Backend backend;
  RowMatrix entity;      // entity_count x dim
  RowMatrix relation;    // relation_count x relation_width
  RowMatrix reciprocal;  // relation_count x relation_width

  int entity_count() const { return static_cast<int>(entity.rows()); }
  int relation_count() const { return static_cast<int>(relation.rows()); }
  VecRef entity_row(EntityId e) const;
  VecRef relation_row(RelationId r) const;
  VecRef reciprocal_row(RelationId r) const;

  // Recomputes `reciprocal` from `relation` with the analytic rule.
  void refresh_reciprocals();
};

EmbeddingTable random_table(const Backend& backend, int entity_count,
                            int relation_count, std::uint64_t seed,
                            double init_scale = 1e-1);

struct KgeTrainHyper {
  double lr = 0.1;
  int batch_size = 64;
  int negatives_per_positive = 16;
  int epochs = 200;
  std::uint64_t seed = 0;
  double init_scale = 1e-1;
};

using KgeEpochCallback = std::function<void(int epoch, double mean_loss)>;

// Logistic loss on observed triples with head/tail-corrupted negatives plus
// lambda * ||.||^q on the embeddings touched by each batch; Adagrad updates.
EmbeddingTable train_embeddings(const DatasetSplit& split, const Backend& backend,
                                const KgeTrainHyper& hyper,
                                const KgeEpochCallback& on_epoch = {});

// Filtered MRR of tail and head prediction over the triples of `queries`,
// filtering every other known triple of `known`.
double link_prediction_mrr(const EmbeddingTable& table, const KnowledgeGraph& queries,
                           const KnowledgeGraph& known);

// JSON header plus little-endian float32 blob: entities, relations, reciprocals.
void save_table(const EmbeddingTable& table, const std::filesystem::path& header_path);
EmbeddingTable load_table(const std::filesystem::path& header_path);

}  // namespace lmpnn
