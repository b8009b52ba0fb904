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
#include "lmpnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "lmpnn/error.hpp"

namespace lmpnn {

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kConfig, "temperature must be positive");
  if (negatives < 1) throw Error(ErrorCode::kConfig, "need at least one negative");
  if (lr < 0.0 || weight_decay < 0.0) {
    throw Error(ErrorCode::kConfig, "lr and weight_decay must be non-negative");
  }
  if (batch_size < 1 || epochs < 0) throw Error(ErrorCode::kConfig, "bad batch size or epochs");
}

double nce_from_cosines(double positive, std::span<const double> negatives, double temperature) {
  double peak = positive / temperature;
  for (double c : negatives) peak = std::max(peak, c / temperature);
  double sum = std::exp(positive / temperature - peak);
  for (double c : negatives) sum += std::exp(c / temperature - peak);
  return peak + std::log(sum) - positive / temperature;
}

std::vector<NceSample> make_batch(std::span<const QueryInstance> instances,
                                  std::span<const std::size_t> indices, int negatives,
                                  int entity_count, Rng& rng) {
  std::vector<NceSample> batch;
  batch.reserve(indices.size());
  for (std::size_t i : indices) {
    const QueryInstance& inst = instances[i];
    const AnswerSet answers = inst.all_answers();
    if (answers.empty()) {
      throw Error(ErrorCode::kArgument, fmt::format("instance {} has no answers", i));
    }
    NceSample s;
    s.query = inst.query;
    s.answer = answers[rng.uniform_index(answers.size())];
    s.negatives.resize(negatives);
    for (EntityId& e : s.negatives) e = static_cast<EntityId>(rng.uniform_index(entity_count));
    batch.push_back(std::move(s));
  }
  return batch;
}

namespace {

struct DisjunctPass {
  QueryGraph graph;
  ForwardTrace trace;
  Vec unit;     // z / |z|
  double norm;  // |z|
};

// Loss of one sample; when `grad` is given, accumulates scale * d(loss)/d(params).
double sample_loss(const NceSample& s, const EmbeddingTable& table, const RowMatrix& unit_entities,
                   const LmpnnParams& params, const TrainConfig& cfg, LmpnnParams* grad,
                   double scale) {
  std::vector<DisjunctPass> passes;
  for (const ConjunctiveQuery& cq : s.query.disjuncts) {
    DisjunctPass p;
    p.graph = build_query_graph(cq);
    p.trace = forward_trace(p.graph, table, params,
                            resolve_depth(p.graph, std::nullopt, cfg.depth_offset));
    const Vec z = p.trace.output();
    p.norm = z.norm();
    if (!(p.norm > 0.0)) throw Error(ErrorCode::kNumeric, "query embedding collapsed to zero");
    p.unit = z / p.norm;
    passes.push_back(std::move(p));
  }
  // Logit of entity e is max over disjuncts of cos(z_i, e) / T.
  const int k = static_cast<int>(s.negatives.size());
  std::vector<EntityId> entities;
  entities.reserve(k + 1);
  entities.push_back(s.answer);
  entities.insert(entities.end(), s.negatives.begin(), s.negatives.end());
  std::vector<double> cos(k + 1);
  std::vector<int> which(k + 1, 0);
  for (int j = 0; j <= k; ++j) {
    const auto row = unit_entities.row(entities[j]);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < passes.size(); ++i) {
      const double c = row.dot(passes[i].unit.transpose());
      if (c > best) {
        best = c;
        which[j] = static_cast<int>(i);
      }
    }
    cos[j] = best;
  }
  const double loss = nce_from_cosines(cos[0], std::span<const double>(cos).subspan(1),
                                       cfg.temperature);
  if (grad == nullptr) return loss;

  // d loss / d logit_j = softmax_j - [j == 0].
  double peak = -std::numeric_limits<double>::infinity();
  for (double c : cos) peak = std::max(peak, c / cfg.temperature);
  std::vector<double> prob(k + 1);
  double total = 0.0;
  for (int j = 0; j <= k; ++j) total += prob[j] = std::exp(cos[j] / cfg.temperature - peak);
  std::vector<Vec> d_unit(passes.size(), Vec::Zero(params.dim()));
  for (int j = 0; j <= k; ++j) {
    const double d_logit = prob[j] / total - (j == 0 ? 1.0 : 0.0);
    d_unit[which[j]] += (d_logit / cfg.temperature) * unit_entities.row(entities[j]).transpose();
  }
  for (std::size_t i = 0; i < passes.size(); ++i) {
    const DisjunctPass& p = passes[i];
    // d unit / d z = (I - u u^T) / |z|
    const Vec d_z = (d_unit[i] - p.unit * p.unit.dot(d_unit[i])) / p.norm;
    backward_conjunctive(p.graph, table, params, p.trace, scale * d_z, *grad);
  }
  return loss;
}

RowMatrix unit_rows(const RowMatrix& m) {
  RowMatrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

void check_batch(std::span<const NceSample> batch, const EmbeddingTable& table) {
  if (batch.empty()) throw Error(ErrorCode::kArgument, "empty NCE batch");
  for (const NceSample& s : batch) {
    const auto bad = [&](EntityId e) { return e < 0 || e >= table.entity_count(); };
    if (bad(s.answer) || std::any_of(s.negatives.begin(), s.negatives.end(), bad)) {
      throw Error(ErrorCode::kLookup, "NCE sample references an unknown entity");
    }
  }
}

double batch_loss(std::span<const NceSample> batch, const EmbeddingTable& table,
                  const RowMatrix& unit_entities, const LmpnnParams& params,
                  const TrainConfig& cfg, LmpnnParams* grad) {
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const NceSample& s : batch) {
    total += sample_loss(s, table, unit_entities, params, cfg, grad, scale);
  }
  return total * scale;
}

}  // namespace

double nce_loss(std::span<const NceSample> batch, const EmbeddingTable& table,
                const LmpnnParams& params, const TrainConfig& cfg) {
  check_batch(batch, table);
  return batch_loss(batch, table, unit_rows(table.entity), params, cfg, nullptr);
}

double nce_loss_and_gradient(std::span<const NceSample> batch, const EmbeddingTable& table,
                             const LmpnnParams& params, const TrainConfig& cfg,
                             LmpnnParams& grad) {
  check_batch(batch, table);
  grad = params.zeros_like();
  const double loss = batch_loss(batch, table, unit_rows(table.entity), params, cfg, &grad);
  if (!grad.flatten().allFinite()) throw Error(ErrorCode::kNumeric, "NaN in NCE gradient");
  return loss;
}

AdamW::AdamW(Eigen::Index size, double lr, double weight_decay, double beta1, double beta2,
             double eps)
    : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(Vec::Zero(size)), v_(Vec::Zero(size)) {}

void AdamW::step(Vec& params, const VecRef& grad) {
  ++step_count_;
  params *= 1.0 - lr_ * weight_decay_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

LmpnnParams train_lmpnn(const EmbeddingTable& table, std::span<const QueryInstance> instances,
                        const LmpnnParams& initial, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
  cfg.validate();
  if (instances.empty()) throw Error(ErrorCode::kArgument, "no training instances");
  LmpnnParams params = initial;
  LmpnnParams grad = params.zeros_like();
  Vec flat = params.flatten();
  AdamW optimizer(flat.size(), cfg.lr, cfg.weight_decay);
  const RowMatrix unit_entities = unit_rows(table.entity);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const auto batch = make_batch(instances, std::span(order).subspan(begin, end - begin),
                                    cfg.negatives, table.entity_count(), rng);
      grad = params.zeros_like();
      double loss = 0.0;
      try {
        loss = batch_loss(batch, table, unit_entities, params, cfg, &grad);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        throw Error(ErrorCode::kTraining, fmt::format("epoch {}: {}", epoch, e.what()));
      }
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kTraining, fmt::format("loss diverged in epoch {}", epoch));
      }
      loss_sum += loss * static_cast<double>(end - begin);
      optimizer.step(flat, grad.flatten());
      if (!flat.allFinite()) {
        throw Error(ErrorCode::kTraining, fmt::format("parameters diverged in epoch {}", epoch));
      }
      params.assign_flat(flat);
    }
    if (on_epoch) {
      const auto elapsed = std::chrono::steady_clock::now() - start;
      on_epoch({epoch, loss_sum / static_cast<double>(instances.size()),
                std::chrono::duration<double, std::milli>(elapsed).count()});
    }
  }
  return params;
}

}  // namespace lmpnn
