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
#include "lmpnn/cqd_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/core.h>
#include <fmt/format.h>

#include "lmpnn/error.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {

std::string_view tnorm_name(TNormKind kind) {
  return kind == TNormKind::kGodel ? "godel" : "product";
}

TNormKind parse_tnorm(std::string_view name) {
  if (name == "product") return TNormKind::kProduct;
  if (name == "godel") return TNormKind::kGodel;
  throw Error(ErrorCode::kArgument, fmt::format("unknown t-norm '{}' (product|godel)", name));
}

double tnorm(TNormKind kind, double a, double b) {
  return kind == TNormKind::kGodel ? std::min(a, b) : a * b;
}

namespace {

const Vec& lookup(const VariableAssignment& assignment, const Term& t) {
  const Vec* v = nullptr;
  if (t.is_free()) {
    v = &assignment.free;
  } else if (t.value < static_cast<int>(assignment.existential.size())) {
    v = &assignment.existential[t.value];
  }
  if (v == nullptr || v->size() == 0) {
    throw Error(ErrorCode::kArgument,
                t.is_free() ? std::string("variable y is unassigned")
                            : fmt::format("variable x{} is unassigned", t.value));
  }
  return *v;
}

struct AtomEval {
  double value = 0.0;  // psi or 1 - psi
  double psi = 0.0;
};

void reject_equality(const ConjunctiveQuery& cq) {
  for (const Atom& a : cq.atoms) {
    if (a.is_equality()) {
      throw Error(ErrorCode::kArgument, "CQD truth values are undefined for equality atoms");
    }
  }
}

}  // namespace

double conjunctive_truth_value(const ConjunctiveQuery& cq, const VariableAssignment& assignment,
                               const EmbeddingTable& table, TNormKind kind) {
  reject_equality(cq);
  double tv = 1.0;
  for (const Atom& a : cq.atoms) {
    const Vec h = a.head.is_constant() ? Vec(table.entity_row(a.head.value)) : lookup(assignment, a.head);
    const Vec t = a.tail.is_constant() ? Vec(table.entity_row(a.tail.value)) : lookup(assignment, a.tail);
    const double psi = truth_value(table.backend, h, table.relation_row(a.relation), t);
    tv = tnorm(kind, tv, a.negated ? 1.0 - psi : psi);
  }
  return tv;
}

namespace {

// Variable slots: 0..m-1 existentials, m the free variable.
class CqdProblem {
 public:
  CqdProblem(const ConjunctiveQuery& cq, int existential_count, const EmbeddingTable& table,
             TNormKind kind)
      : cq_(cq), m_(existential_count), table_(table), kind_(kind),
        used_(existential_count + 1, 0) {
    reject_equality(cq);
    for (const Atom& a : cq.atoms) {
      for (const Term& t : {a.head, a.tail}) {
        if (!t.is_constant()) used_[slot(t)] = 1;
      }
    }
  }

  int slots() const { return m_ + 1; }
  bool used(int s) const { return used_[s] != 0; }
  int free_slot() const { return m_; }

  // Objective value and its gradient w.r.t. every used slot.
  double evaluate(const std::vector<Vec>& x, std::vector<Vec>* grad) const {
    const Backend& b = table_.backend;
    std::vector<AtomEval> evals(cq_.atoms.size());
    std::vector<ScoreGradient> sg(cq_.atoms.size());
    for (std::size_t i = 0; i < cq_.atoms.size(); ++i) {
      const Atom& a = cq_.atoms[i];
      sg[i] = score_gradient(b, embedding(a.head, x), table_.relation_row(a.relation),
                             embedding(a.tail, x));
      evals[i].psi = sigmoid(sg[i].score);
      evals[i].value = a.negated ? 1.0 - evals[i].psi : evals[i].psi;
    }
    double tv = 1.0;
    for (const AtomEval& e : evals) tv = tnorm(kind_, tv, e.value);
    double reg = 0.0;
    for (int s = 0; s < slots(); ++s) {
      if (used(s)) reg += std::pow(x[s].norm(), b.reg_power);
    }
    const double objective = tv - b.reg_weight * reg;
    if (grad == nullptr) return objective;

    for (int s = 0; s < slots(); ++s) grad->at(s) = Vec::Zero(b.dim);
    // d tv / d value_i
    std::vector<double> d_value(evals.size(), 0.0);
    if (kind_ == TNormKind::kProduct) {
      for (std::size_t i = 0; i < evals.size(); ++i) {
        double others = 1.0;
        for (std::size_t j = 0; j < evals.size(); ++j) {
          if (j != i) others *= evals[j].value;
        }
        d_value[i] = others;
      }
    } else {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < evals.size(); ++i) {
        if (evals[i].value < evals[arg].value) arg = i;
      }
      d_value[arg] = 1.0;
    }
    for (std::size_t i = 0; i < evals.size(); ++i) {
      const Atom& a = cq_.atoms[i];
      const double d_score =
          d_value[i] * (a.negated ? -1.0 : 1.0) * evals[i].psi * (1.0 - evals[i].psi);
      if (!a.head.is_constant()) grad->at(slot(a.head)) += d_score * sg[i].d_head;
      if (!a.tail.is_constant()) grad->at(slot(a.tail)) += d_score * sg[i].d_tail;
    }
    for (int s = 0; s < slots(); ++s) {
      if (!used(s)) continue;
      const double n = x[s].norm();
      if (n > 0.0) {
        grad->at(s) -= b.reg_weight * b.reg_power * std::pow(n, b.reg_power - 2) * x[s];
      }
    }
    return objective;
  }

 private:
  int slot(const Term& t) const { return t.is_free() ? m_ : t.value; }

  Vec embedding(const Term& t, const std::vector<Vec>& x) const {
    return t.is_constant() ? Vec(table_.entity_row(t.value)) : x[slot(t)];
  }

  const ConjunctiveQuery& cq_;
  int m_;
  const EmbeddingTable& table_;
  TNormKind kind_;
  std::vector<char> used_;
};

Vec optimize_free(const CqdProblem& problem, const EmbeddingTable& table,
                  const CqdOptions& options, Rng& rng) {
  const int dim = table.backend.dim;
  const int slots = problem.slots();
  double best_value = -std::numeric_limits<double>::infinity();
  Vec best;
  for (int restart = 0; restart < options.restarts; ++restart) {
    std::vector<Vec> x(slots, Vec::Zero(dim));
    for (int s = 0; s < slots; ++s) {
      for (int i = 0; i < dim; ++i) x[s][i] = options.init_scale * rng.normal();
    }
    std::vector<Vec> m(slots, Vec::Zero(dim));
    std::vector<Vec> v(slots, Vec::Zero(dim));
    std::vector<Vec> g(slots);
    bool finite = true;
    for (int step = 1; step <= options.steps && finite; ++step) {
      problem.evaluate(x, &g);
      const double c1 = 1.0 - std::pow(0.9, step);
      const double c2 = 1.0 - std::pow(0.999, step);
      for (int s = 0; s < slots; ++s) {
        if (!problem.used(s)) continue;
        m[s] = 0.9 * m[s] + 0.1 * g[s];
        v[s] = 0.999 * v[s] + 0.001 * g[s].cwiseProduct(g[s]);
        x[s].array() += options.lr * (m[s].array() / c1) / ((v[s].array() / c2).sqrt() + 1e-8);
        finite = finite && x[s].allFinite();
      }
    }
    if (!finite) continue;
    const double value = problem.evaluate(x, nullptr);
    if (std::isfinite(value) && value > best_value && x[problem.free_slot()].norm() > 0.0) {
      best_value = value;
      best = x[problem.free_slot()];
    }
  }
  if (best.size() == 0) {
    throw Error(ErrorCode::kOptimization, fmt::format("all {} CQD restarts diverged",
                                                      options.restarts));
  }
  return best;
}

}  // namespace

Vec cqd_scores(const Efo1Query& q, const EmbeddingTable& table, const CqdOptions& options) {
  if (options.steps < 0 || options.restarts < 1) {
    throw Error(ErrorCode::kConfig, "CQD needs steps >= 0 and restarts >= 1");
  }
  Rng rng(options.seed);
  std::vector<Vec> per;
  for (const ConjunctiveQuery& cq : q.disjuncts) {
    const CqdProblem problem(cq, q.existential_count, table, options.tnorm);
    per.push_back(cosine_scores(optimize_free(problem, table, options, rng), table));
  }
  return join_scores(per, options.join);
}

Ranking cqd_optimize(const Efo1Query& q, const EmbeddingTable& table, const CqdOptions& options) {
  return rank_scores(cqd_scores(q, table, options));
}

std::vector<std::pair<double, double>> landscape_profile(int grid_points) {
  if (grid_points < 3) throw Error(ErrorCode::kArgument, "grid needs at least 3 points");
  std::vector<std::pair<double, double>> out;
  out.reserve(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    const double x = static_cast<double>(i) / (grid_points - 1);
    const double d = x - 0.3;
    out.emplace_back(x, (1.0 - x * x) * (d * d));
  }
  return out;
}

void write_landscape_csv(const std::vector<std::pair<double, double>>& profile,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << "x,J\n";
  for (const auto& [x, j] : profile) out << fmt::format("{:.17g},{:.17g}\n", x, j);
}

}  // namespace lmpnn
