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
#include "lmpnn/message_encoding.hpp"

#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "lmpnn/error.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {

VecRef message_relation(const EmbeddingTable& table, RelationId relation,
                        Direction direction) {
  return direction == Direction::kHeadToTail ? table.relation_row(relation)
                                             : table.reciprocal_row(relation);
}

Vec encode_message_with_relation(const Backend& backend, const VecRef& source,
                                 const VecRef& relation_params, bool negated) {
  Vec out = forward_estimate(backend, source, relation_params);
  if (negated) out = -out;
  return out;
}

Vec encode_equality_message(const VecRef& source, bool negated) {
  return negated ? Vec(-source) : Vec(source);
}

Vec encode_message(const EmbeddingTable& table, const VecRef& source, RelationId relation,
                   Direction direction, bool negated) {
  if (relation == kEqualityRelation) return encode_equality_message(source, negated);
  return encode_message_with_relation(table.backend, source,
                                      message_relation(table, relation, direction), negated);
}

Vec encode_message(const EmbeddingTable& table, const MessageQuery& mq) {
  return encode_message(table, mq.source, mq.relation, mq.direction, mq.negated);
}

Vec encode_message_vjp(const EmbeddingTable& table, RelationId relation, Direction direction,
                       bool negated, const VecRef& g) {
  Vec out = relation == kEqualityRelation
                ? Vec(g)
                : forward_estimate_vjp(table.backend, message_relation(table, relation, direction), g);
  if (negated) out = -out;
  return out;
}

Vec complex_normalized_message(const VecRef& collapsed, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::kArgument, "lambda must be positive");
  const double n = collapsed.norm();
  if (n == 0.0) return Vec::Zero(collapsed.size());
  return collapsed / std::sqrt(3.0 * lambda * n);
}

double cosine(const VecRef& a, const VecRef& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return a.dot(b) / denom;
}

namespace {

// The one-hop objective in x for the atom r(source, x) (h2t) or r(x, source)
// (t2h), always with the original relation.
class OneHopObjective {
 public:
  OneHopObjective(const EmbeddingTable& table, const MessageQuery& mq, double lambda)
      : backend_(table.backend), relation_(table.relation_row(mq.relation)),
        source_(mq.source), forward_(mq.direction == Direction::kHeadToTail),
        negated_(mq.negated), lambda_(lambda) {}

  double operator()(const Vec& x) const {
    const double psi = forward_ ? truth_value(backend_, source_, relation_, x)
                                : truth_value(backend_, x, relation_, source_);
    const double truth = negated_ ? 1.0 - psi : psi;
    return truth - lambda_ * std::pow(x.norm(), backend_.reg_power);
  }

  Vec gradient(Vec x) const {
    constexpr double kStep = 1e-6;
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double keep = x[i];
      x[i] = keep + kStep;
      const double up = (*this)(x);
      x[i] = keep - kStep;
      const double down = (*this)(x);
      x[i] = keep;
      g[i] = (up - down) / (2.0 * kStep);
    }
    return g;
  }

 private:
  const Backend& backend_;
  VecRef relation_;
  VecRef source_;
  bool forward_;
  bool negated_;
  double lambda_;
};

}  // namespace

ClosedFormCheck verify_closed_form(const EmbeddingTable& table, const MessageQuery& mq,
                                   double lambda, int oracle_steps, std::uint64_t seed,
                                   int restarts) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::kArgument, "lambda must be positive");
  if (mq.relation == kEqualityRelation) {
    throw Error(ErrorCode::kArgument, "the equality message has no optimization problem");
  }
  if (table.backend.dim > 64) {
    throw Error(ErrorCode::kArgument, fmt::format("dim {} exceeds 64", table.backend.dim));
  }
  if (oracle_steps < 1 || restarts < 1) {
    throw Error(ErrorCode::kArgument, "oracle_steps and restarts must be positive");
  }
  ClosedFormCheck check;
  check.closed_form = encode_message(table, mq);
  const OneHopObjective objective(table, mq, lambda);
  const int dim = table.backend.dim;

  Rng rng(seed);
  double best_value = -std::numeric_limits<double>::infinity();
  double fallback_value = best_value;
  Vec fallback;
  bool any_converged = false;
  for (int restart = 0; restart < restarts; ++restart) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = 0.1 * rng.normal();
    Vec m = Vec::Zero(dim);
    Vec v = Vec::Zero(dim);
    constexpr double kLr = 0.02;
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    double tail_start = objective(x);
    const int tail_from = oracle_steps - std::max(1, oracle_steps / 10);
    for (int step = 1; step <= oracle_steps; ++step) {
      if (step == tail_from) tail_start = objective(x);
      const Vec g = objective.gradient(x);
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
      const double mhat = 1.0 / (1.0 - std::pow(kBeta1, step));
      const double vhat = 1.0 / (1.0 - std::pow(kBeta2, step));
      // Cosine decay lets the iterate settle on the kink of distance scores.
      const double lr = kLr * 0.5 * (1.0 + std::cos(M_PI * (step - 1) / oracle_steps));
      x += lr * (m * mhat).cwiseQuotient(((v * vhat).cwiseSqrt().array() + 1e-12).matrix());
    }
    const double value = objective(x);
    if (!std::isfinite(value) || !x.allFinite() || x.norm() < 1e-12) continue;
    if (value > fallback_value) {
      fallback_value = value;
      fallback = x;
    }
    const bool converged = std::abs(value - tail_start) <= 1e-4 * (1.0 + std::abs(value));
    any_converged = any_converged || converged;
    if (converged && value > best_value) {
      best_value = value;
      check.numeric_argmax = x;
    }
  }
  if (!any_converged) {
    const double gap = fallback.size() ? 1.0 - cosine(check.closed_form, fallback) : 1.0;
    throw Error(ErrorCode::kVerification,
                fmt::format("numeric argmax did not converge in {} restarts of {} steps "
                            "(best gap {:.3e})",
                            restarts, oracle_steps, gap));
  }
  check.cosine_gap = 1.0 - cosine(check.closed_form, check.numeric_argmax);
  return check;
}

}  // namespace lmpnn
