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

#include "lmpnn/kge_backends.hpp"
#include "lmpnn/query_model.hpp"

namespace lmpnn {

struct MessageQuery {
  Vec source;
  RelationId relation = 0;  // kEqualityRelation selects the equality message
  Direction direction = Direction::kHeadToTail;
  bool negated = false;
};

// Relation parameters applied in head-to-tail form: r for h2t, r^-1 for t2h.
VecRef message_relation(const EmbeddingTable& table, RelationId relation,
                        Direction direction);

// +-f(source, r) for h2t and +-f(source, r^-1) for t2h, normalization fixed to 1.
Vec encode_message(const EmbeddingTable& table, const VecRef& source,
                   RelationId relation, Direction direction, bool negated);
Vec encode_message(const EmbeddingTable& table, const MessageQuery& mq);
Vec encode_message_with_relation(const Backend& backend, const VecRef& source,
                                 const VecRef& relation_params, bool negated);
Vec encode_equality_message(const VecRef& source, bool negated);

// J^T g for the message as a function of its source embedding.
Vec encode_message_vjp(const EmbeddingTable& table, RelationId relation,
                       Direction direction, bool negated, const VecRef& g);

// The ComplEx message before the normalizer is set to 1: s / sqrt(3 lambda |s|).
Vec complex_normalized_message(const VecRef& collapsed, double lambda);

double cosine(const VecRef& a, const VecRef& b);

struct ClosedFormCheck {
  Vec closed_form;
  Vec numeric_argmax;
  double cosine_gap = 0.0;
};

// Maximizes psi - lambda |x|^q (1 - psi when negated) over the unknown end by
// Adam on finite-difference gradients, independent of the closed form.
// Throws kVerification when no restart converges.
ClosedFormCheck verify_closed_form(const EmbeddingTable& table, const MessageQuery& mq,
                                   double lambda, int oracle_steps, std::uint64_t seed,
                                   int restarts = 4);

}  // namespace lmpnn
