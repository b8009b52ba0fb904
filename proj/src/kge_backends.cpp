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
#include "lmpnn/kge_backends.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "blob_io.hpp"
#include "lmpnn/error.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {
namespace {

// Interleaved complex helpers: a (x) b, conj(a) (x) b.
Vec complex_mul(const VecRef& a, const VecRef& b) {
  Vec out(b.size());
  for (Eigen::Index k = 0; k + 1 < b.size(); k += 2) {
    out[k] = a[k] * b[k] - a[k + 1] * b[k + 1];
    out[k + 1] = a[k] * b[k + 1] + a[k + 1] * b[k];
  }
  return out;
}

Vec complex_conj_mul(const VecRef& a, const VecRef& b) {
  Vec out(b.size());
  for (Eigen::Index k = 0; k + 1 < b.size(); k += 2) {
    out[k] = a[k] * b[k] + a[k + 1] * b[k + 1];
    out[k + 1] = a[k] * b[k + 1] - a[k + 1] * b[k];
  }
  return out;
}

// Rotation by angles theta (one per complex coordinate).
Vec rotate(const VecRef& theta, const VecRef& h, double sign) {
  Vec out(h.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double c = std::cos(theta[k]);
    const double s = sign * std::sin(theta[k]);
    out[2 * k] = c * h[2 * k] - s * h[2 * k + 1];
    out[2 * k + 1] = c * h[2 * k + 1] + s * h[2 * k];
  }
  return out;
}

Eigen::Map<const RowMatrix> rescal_matrix(const VecRef& r, int dim) {
  return Eigen::Map<const RowMatrix>(r.data(), dim, dim);
}

void check_shapes(const Backend& b, const VecRef& h, const VecRef& r) {
  if (h.size() != b.dim || r.size() != b.relation_width()) {
    throw Error(ErrorCode::kShape,
                fmt::format("{} expects entity width {} and relation width {}, got {} and {}",
                            backend_name(b.kind), b.dim, b.relation_width(), h.size(),
                            r.size()));
  }
}

double norm_pow(const VecRef& x, int q) { return std::pow(x.norm(), q); }

// Gradient of ||x||_2^q.
Vec norm_pow_grad(const VecRef& x, int q) {
  if (q == 2) return 2.0 * x;
  const double n = x.norm();
  return q * std::pow(n, q - 2) * x;
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

std::string_view backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kComplEx: return "complex";
    case BackendKind::kDistMult: return "distmult";
    case BackendKind::kTransE: return "transe";
    case BackendKind::kRescal: return "rescal";
    case BackendKind::kRotatE: return "rotate";
  }
  return "unknown";
}

BackendKind parse_backend_kind(std::string_view name) {
  for (BackendKind k : {BackendKind::kComplEx, BackendKind::kDistMult, BackendKind::kTransE,
                        BackendKind::kRescal, BackendKind::kRotatE}) {
    if (backend_name(k) == name) return k;
  }
  throw Error(ErrorCode::kConfig, fmt::format("unknown backend '{}'", name));
}

int Backend::relation_width() const {
  switch (kind) {
    case BackendKind::kRescal: return dim * dim;
    case BackendKind::kRotatE: return dim / 2;
    default: return dim;
  }
}

void Backend::validate() const {
  if (dim <= 0) throw Error(ErrorCode::kConfig, "embedding dim must be positive");
  if ((kind == BackendKind::kComplEx || kind == BackendKind::kRotatE) && dim % 2 != 0) {
    throw Error(ErrorCode::kConfig,
                fmt::format("{} needs an even dim, got {}", backend_name(kind), dim));
  }
  if (reg_weight < 0) throw Error(ErrorCode::kConfig, "reg_weight must be >= 0");
  if (reg_power != 2 && reg_power != 3) throw Error(ErrorCode::kConfig, "reg_power must be 2 or 3");
}

Backend make_backend(BackendKind kind, int dim) {
  Backend b;
  b.kind = kind;
  b.dim = dim;
  b.reg_power = b.distance_based() ? 2 : 3;
  b.validate();
  return b;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec forward_estimate(const Backend& b, const VecRef& h, const VecRef& r) {
  check_shapes(b, h, r);
  switch (b.kind) {
    case BackendKind::kComplEx: return complex_mul(r, h);
    case BackendKind::kDistMult: return r.cwiseProduct(h);
    case BackendKind::kTransE: return r + h;
    case BackendKind::kRescal: return rescal_matrix(r, b.dim) * h;
    case BackendKind::kRotatE: return rotate(r, h, 1.0);
  }
  return {};
}

Vec forward_estimate_vjp(const Backend& b, const VecRef& r, const VecRef& g) {
  check_shapes(b, g, r);
  switch (b.kind) {
    case BackendKind::kComplEx: return complex_conj_mul(r, g);
    case BackendKind::kDistMult: return r.cwiseProduct(g);
    case BackendKind::kTransE: return g;
    case BackendKind::kRescal: return rescal_matrix(r, b.dim).transpose() * g;
    case BackendKind::kRotatE: return rotate(r, g, -1.0);
  }
  return {};
}

double score(const Backend& b, const VecRef& h, const VecRef& r, const VecRef& t) {
  const Vec f = forward_estimate(b, h, r);
  if (t.size() != b.dim) {
    throw Error(ErrorCode::kShape, fmt::format("tail width {} != {}", t.size(), b.dim));
  }
  if (b.distance_based()) return b.margin - (f - t).norm();
  return f.dot(t);
}

double truth_value(const Backend& b, const VecRef& h, const VecRef& r, const VecRef& t) {
  return sigmoid(score(b, h, r, t));
}

Vec reciprocal_embedding(const Backend& b, const VecRef& r) {
  if (r.size() != b.relation_width()) {
    throw Error(ErrorCode::kShape, fmt::format("relation width {} != {}", r.size(),
                                               b.relation_width()));
  }
  switch (b.kind) {
    case BackendKind::kComplEx: {
      Vec out = r;
      for (Eigen::Index k = 1; k < out.size(); k += 2) out[k] = -out[k];
      return out;
    }
    case BackendKind::kDistMult: return r;
    case BackendKind::kTransE: return -r;
    case BackendKind::kRotatE: return -r;
    case BackendKind::kRescal: {
      RowMatrix wt = rescal_matrix(r, b.dim).transpose();
      return Eigen::Map<const Vec>(wt.data(), wt.size());
    }
  }
  return {};
}

ScoreGradient score_gradient(const Backend& b, const VecRef& h, const VecRef& r,
                             const VecRef& t) {
  const Vec f = forward_estimate(b, h, r);
  ScoreGradient g;
  Vec d_f;  // d score / d f
  if (b.distance_based()) {
    const Vec diff = f - t;
    const double n = diff.norm();
    g.score = b.margin - n;
    d_f = n > 0 ? Vec(-diff / n) : Vec(Vec::Zero(b.dim));
    g.d_tail = -d_f;
  } else {
    g.score = f.dot(t);
    d_f = t;
    g.d_tail = f;
  }
  g.d_head = forward_estimate_vjp(b, r, d_f);
  switch (b.kind) {
    case BackendKind::kComplEx: {
      // d/dr_re = Re(h conj(g)), d/dr_im = Im(conj(h) g) per coordinate.
      g.d_relation.resize(r.size());
      for (Eigen::Index k = 0; k < r.size(); k += 2) {
        g.d_relation[k] = h[k] * d_f[k] + h[k + 1] * d_f[k + 1];
        g.d_relation[k + 1] = h[k] * d_f[k + 1] - h[k + 1] * d_f[k];
      }
      break;
    }
    case BackendKind::kDistMult: g.d_relation = h.cwiseProduct(d_f); break;
    case BackendKind::kTransE: g.d_relation = d_f; break;
    case BackendKind::kRescal: {
      RowMatrix outer = d_f * h.transpose();
      g.d_relation = Eigen::Map<const Vec>(outer.data(), outer.size());
      break;
    }
    case BackendKind::kRotatE: {
      // d f_k / d theta_k = i f_k.
      g.d_relation.resize(r.size());
      for (Eigen::Index k = 0; k < r.size(); ++k) {
        g.d_relation[k] = -f[2 * k + 1] * d_f[2 * k] + f[2 * k] * d_f[2 * k + 1];
      }
      break;
    }
  }
  return g;
}

VecRef EmbeddingTable::entity_row(EntityId e) const {
  if (e < 0 || e >= entity_count()) {
    throw Error(ErrorCode::kLookup, fmt::format("entity id {} out of range", e));
  }
  return entity.row(e).transpose();
}

VecRef EmbeddingTable::relation_row(RelationId r) const {
  if (r < 0 || r >= relation_count()) {
    throw Error(ErrorCode::kLookup, fmt::format("relation id {} out of range", r));
  }
  return relation.row(r).transpose();
}

VecRef EmbeddingTable::reciprocal_row(RelationId r) const {
  if (r < 0 || r >= relation_count()) {
    throw Error(ErrorCode::kLookup, fmt::format("relation id {} out of range", r));
  }
  return reciprocal.row(r).transpose();
}

void EmbeddingTable::refresh_reciprocals() {
  reciprocal.resize(relation.rows(), relation.cols());
  for (Eigen::Index r = 0; r < relation.rows(); ++r) {
    reciprocal.row(r) = reciprocal_embedding(backend, relation.row(r).transpose()).transpose();
  }
}

EmbeddingTable random_table(const Backend& backend, int entity_count,
                            int relation_count, std::uint64_t seed, double init_scale) {
  backend.validate();
  Rng rng(seed);
  EmbeddingTable table;
  table.backend = backend;
  table.entity.resize(entity_count, backend.dim);
  table.relation.resize(relation_count, backend.relation_width());
  for (Eigen::Index i = 0; i < table.entity.size(); ++i) {
    table.entity.data()[i] = init_scale * rng.normal();
  }
  for (Eigen::Index i = 0; i < table.relation.size(); ++i) {
    // RotatE angles start uniform on the circle.
    table.relation.data()[i] = backend.kind == BackendKind::kRotatE
                                   ? (2.0 * rng.uniform() - 1.0) * 3.141592653589793
                                   : init_scale * rng.normal();
  }
  table.refresh_reciprocals();
  return table;
}

namespace {

// Row-sparse Adagrad over one embedding matrix.
class SparseAdagrad {
 public:
  SparseAdagrad(Eigen::Index rows, Eigen::Index cols, double lr)
      : grad_(RowMatrix::Zero(rows, cols)),
        accum_(RowMatrix::Zero(rows, cols)),
        touched_flag_(rows, 0),
        lr_(lr) {}

  void add(Eigen::Index row, const VecRef& g) {
    grad_.row(row) += g.transpose();
    if (!touched_flag_[row]) {
      touched_flag_[row] = 1;
      touched_.push_back(row);
    }
  }

  void step(RowMatrix& params) {
    for (Eigen::Index row : touched_) {
      auto g = grad_.row(row);
      accum_.row(row) += g.cwiseProduct(g);
      params.row(row).array() -= lr_ * g.array() / (accum_.row(row).array().sqrt() + 1e-10);
      g.setZero();
      touched_flag_[row] = 0;
    }
    touched_.clear();
  }

 private:
  RowMatrix grad_;
  RowMatrix accum_;
  std::vector<char> touched_flag_;
  std::vector<Eigen::Index> touched_;
  double lr_;
};

}  // namespace

EmbeddingTable train_embeddings(const DatasetSplit& split, const Backend& backend,
                                const KgeTrainHyper& hyper, const KgeEpochCallback& on_epoch) {
  backend.validate();
  if (hyper.lr < 0 || hyper.batch_size <= 0 || hyper.negatives_per_positive <= 0 ||
      hyper.epochs < 0) {
    throw Error(ErrorCode::kConfig, "invalid KGE training hyperparameters");
  }
  const KnowledgeGraph& kg = split.observed;
  if (hyper.epochs > 0 && kg.size() == 0) {
    throw Error(ErrorCode::kTraining, "observed graph has no triples to train on");
  }
  EmbeddingTable table = random_table(backend, kg.entity_count(), kg.relation_count(),
                                      hyper.seed, hyper.init_scale);
  Rng rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  SparseAdagrad entity_opt(table.entity.rows(), table.entity.cols(), hyper.lr);
  SparseAdagrad relation_opt(table.relation.rows(), table.relation.cols(), hyper.lr);
  const bool reg_relation = backend.kind != BackendKind::kRotatE;
  const double lambda = backend.reg_weight;
  const int q = backend.reg_power;
  const int k_neg = hyper.negatives_per_positive;

  std::vector<Triple> order = kg.triples();
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Triple& pos = order[i];
        auto accumulate = [&](const Triple& t, double d_score) {
          const ScoreGradient g = score_gradient(backend, table.entity_row(t.head),
                                                 table.relation_row(t.relation),
                                                 table.entity_row(t.tail));
          entity_opt.add(t.head, scale * d_score * g.d_head);
          entity_opt.add(t.tail, scale * d_score * g.d_tail);
          relation_opt.add(t.relation, scale * d_score * g.d_relation);
        };
        // Minimized: softplus(-s) for the positive, softplus(s) / K per negative.
        const double s_pos = score(backend, table.entity_row(pos.head),
                                   table.relation_row(pos.relation),
                                   table.entity_row(pos.tail));
        accumulate(pos, sigmoid(s_pos) - 1.0);
        batch_loss += softplus(-s_pos);
        for (int k = 0; k < k_neg; ++k) {
          Triple neg = pos;
          const auto e = static_cast<EntityId>(rng.uniform_index(kg.entity_count()));
          if (rng.uniform() < 0.5) neg.head = e; else neg.tail = e;
          const double s_neg = score(backend, table.entity_row(neg.head),
                                     table.relation_row(neg.relation),
                                     table.entity_row(neg.tail));
          accumulate(neg, sigmoid(s_neg) / k_neg);
          batch_loss += softplus(s_neg) / k_neg;
        }
        if (lambda > 0) {
          for (EntityId e : {pos.head, pos.tail}) {
            batch_loss += lambda * norm_pow(table.entity_row(e), q);
            entity_opt.add(e, scale * lambda * norm_pow_grad(table.entity_row(e), q));
          }
          if (reg_relation) {
            batch_loss += lambda * norm_pow(table.relation_row(pos.relation), q);
            relation_opt.add(pos.relation,
                             scale * lambda * norm_pow_grad(table.relation_row(pos.relation), q));
          }
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::kTraining,
                    fmt::format("KGE training diverged (non-finite loss) in epoch {}", epoch));
      }
      epoch_loss += batch_loss;
      entity_opt.step(table.entity);
      relation_opt.step(table.relation);
    }
    if (!table.entity.allFinite() || !table.relation.allFinite()) {
      throw Error(ErrorCode::kTraining,
                  fmt::format("KGE training diverged (non-finite embedding) in epoch {}", epoch));
    }
    if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(order.size()));
  }
  table.refresh_reciprocals();
  return table;
}

double link_prediction_mrr(const EmbeddingTable& table, const KnowledgeGraph& queries,
                           const KnowledgeGraph& known) {
  if (queries.size() == 0) return 0.0;
  const Backend& b = table.backend;
  const int n = table.entity_count();
  std::vector<double> scores(n);
  double total = 0.0;
  auto rank_of = [&](EntityId target, std::span<const EntityId> filtered) {
    int rank = 1;
    for (EntityId e = 0; e < n; ++e) {
      if (e == target || std::binary_search(filtered.begin(), filtered.end(), e)) continue;
      if (scores[e] > scores[target] || (scores[e] == scores[target] && e < target)) ++rank;
    }
    return rank;
  };
  for (const Triple& t : queries.triples()) {
    const VecRef rel = table.relation_row(t.relation);
    for (EntityId e = 0; e < n; ++e) {
      scores[e] = score(b, table.entity_row(t.head), rel, table.entity_row(e));
    }
    total += 1.0 / rank_of(t.tail, known.neighbors(t.head, t.relation, Direction::kHeadToTail));
    for (EntityId e = 0; e < n; ++e) {
      scores[e] = score(b, table.entity_row(e), rel, table.entity_row(t.tail));
    }
    total += 1.0 / rank_of(t.head, known.neighbors(t.tail, t.relation, Direction::kTailToHead));
  }
  return total / (2.0 * static_cast<double>(queries.size()));
}

void save_table(const EmbeddingTable& table, const std::filesystem::path& header_path) {
  const Backend& b = table.backend;
  const auto blob_name = header_path.stem().string() + ".bin";
  const nlohmann::ordered_json header = {
      {"backend", std::string(backend_name(b.kind))},
      {"dim", b.dim},
      {"entity_count", table.entity_count()},
      {"relation_count", table.relation_count()},
      {"margin", b.margin},
      {"reg_weight", b.reg_weight},
      {"reg_power", b.reg_power},
      {"blob", blob_name},
  };
  std::ofstream out(header_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", header_path.string()));
  out << header.dump(2) << '\n';
  std::vector<double> values;
  values.reserve(table.entity.size() + 2 * table.relation.size());
  values.insert(values.end(), table.entity.data(), table.entity.data() + table.entity.size());
  values.insert(values.end(), table.relation.data(),
                table.relation.data() + table.relation.size());
  values.insert(values.end(), table.reciprocal.data(),
                table.reciprocal.data() + table.reciprocal.size());
  detail::write_f32_blob(header_path.parent_path() / blob_name, values);
}

EmbeddingTable load_table(const std::filesystem::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", header_path.string()));
  EmbeddingTable table;
  std::string blob;
  int entity_count = 0;
  int relation_count = 0;
  try {
    nlohmann::json header;
    in >> header;
    table.backend.kind = parse_backend_kind(header.at("backend").get<std::string>());
    table.backend.dim = header.at("dim").get<int>();
    table.backend.margin = header.at("margin").get<double>();
    table.backend.reg_weight = header.at("reg_weight").get<double>();
    table.backend.reg_power = header.at("reg_power").get<int>();
    entity_count = header.at("entity_count").get<int>();
    relation_count = header.at("relation_count").get<int>();
    blob = header.at("blob").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                fmt::format("{}: bad checkpoint header: {}", header_path.string(), e.what()));
  }
  table.backend.validate();
  const int width = table.backend.relation_width();
  const std::size_t ne = static_cast<std::size_t>(entity_count) * table.backend.dim;
  const std::size_t nr = static_cast<std::size_t>(relation_count) * width;
  const auto values = detail::read_f32_blob(header_path.parent_path() / blob, ne + 2 * nr);
  table.entity = Eigen::Map<const RowMatrix>(values.data(), entity_count, table.backend.dim);
  table.relation = Eigen::Map<const RowMatrix>(values.data() + ne, relation_count, width);
  table.reciprocal = Eigen::Map<const RowMatrix>(values.data() + ne + nr, relation_count, width);
  if (!table.entity.allFinite() || !table.relation.allFinite() ||
      !table.reciprocal.allFinite()) {
    throw Error(ErrorCode::kNumeric, "checkpoint contains NaN or Inf entries");
  }
  return table;
}

}  // namespace lmpnn
