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
#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lmpnn/error.hpp"
#include "lmpnn/kge_backends.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {
namespace {

constexpr BackendKind kAllKinds[] = {BackendKind::kComplEx, BackendKind::kDistMult,
                                     BackendKind::kTransE, BackendKind::kRescal,
                                     BackendKind::kRotatE};

Vec random_vec(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

class PerBackend : public ::testing::TestWithParam<BackendKind> {};

TEST_P(PerBackend, ReciprocalReversesTheTriple) {
  const Backend b = make_backend(GetParam(), 8);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec h = random_vec(rng, 8);
    const Vec t = random_vec(rng, 8);
    const Vec r = random_vec(rng, b.relation_width());
    EXPECT_NEAR(score(b, t, reciprocal_embedding(b, r), h), score(b, h, r, t), 1e-9);
  }
}

TEST_P(PerBackend, ScoreGradientMatchesFiniteDifferences) {
  const Backend b = make_backend(GetParam(), 6);
  Rng rng(2);
  const Vec h = random_vec(rng, 6);
  const Vec r = random_vec(rng, b.relation_width());
  const Vec t = random_vec(rng, 6);
  const ScoreGradient g = score_gradient(b, h, r, t);
  EXPECT_NEAR(g.score, score(b, h, r, t), 1e-12);
  constexpr double kStep = 1e-6;
  auto check = [&](const Vec& base, const Vec& analytic, auto&& eval) {
    for (Eigen::Index i = 0; i < base.size(); ++i) {
      Vec up = base;
      Vec down = base;
      up[i] += kStep;
      down[i] -= kStep;
      EXPECT_NEAR(analytic[i], (eval(up) - eval(down)) / (2 * kStep), 1e-6) << "coord " << i;
    }
  };
  check(h, g.d_head, [&](const Vec& x) { return score(b, x, r, t); });
  check(r, g.d_relation, [&](const Vec& x) { return score(b, h, x, t); });
  check(t, g.d_tail, [&](const Vec& x) { return score(b, h, r, x); });
}

TEST_P(PerBackend, ForwardVjpIsTheTransposedJacobian) {
  const Backend b = make_backend(GetParam(), 6);
  Rng rng(3);
  const Vec r = random_vec(rng, b.relation_width());
  const Vec g = random_vec(rng, 6);
  const Vec vjp = forward_estimate_vjp(b, r, g);
  const Vec h0 = random_vec(rng, 6);
  for (int i = 0; i < 6; ++i) {
    Vec e = Vec::Zero(6);
    e[i] = 1.0;
    // f is affine in h, so one difference is exact up to rounding.
    const double col = g.dot(forward_estimate(b, h0 + e, r) - forward_estimate(b, h0, r));
    EXPECT_NEAR(vjp[i], col, 1e-10);
  }
}

TEST_P(PerBackend, TruthValueStaysInsideTheUnitInterval) {
  const Backend b = make_backend(GetParam(), 8);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const double psi = truth_value(b, random_vec(rng, 8), random_vec(rng, b.relation_width()),
                                   random_vec(rng, 8));
    EXPECT_GT(psi, 0.0);
    EXPECT_LT(psi, 1.0);
  }
}

class InnerProduct : public ::testing::TestWithParam<BackendKind> {};

TEST_P(InnerProduct, ScoresAreLinearInTheTail) {
  const Backend b = make_backend(GetParam(), 8);
  Rng rng(5);
  const Vec h = random_vec(rng, 8);
  const Vec r = random_vec(rng, b.relation_width());
  const Vec t1 = random_vec(rng, 8);
  const Vec t2 = random_vec(rng, 8);
  EXPECT_NEAR(score(b, h, r, 0.7 * t1 - 1.3 * t2),
              0.7 * score(b, h, r, t1) - 1.3 * score(b, h, r, t2), 1e-10);
}

TEST_P(PerBackend, TableRoundTripsThroughFloat32Checkpoint) {
  testing::TempDir dir;
  const EmbeddingTable t = testing::toy_table(GetParam(), 8, 7, 3, 9);
  save_table(t, dir.path() / "kge.json");
  const EmbeddingTable back = load_table(dir.path() / "kge.json");
  EXPECT_EQ(back.backend.kind, t.backend.kind);
  EXPECT_EQ(back.entity_count(), 7);
  EXPECT_LT((back.entity - t.entity).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((back.reciprocal - t.reciprocal).cwiseAbs().maxCoeff(), 1e-6);
}

auto kind_label = [](const auto& info) { return std::string(backend_name(info.param)); };
INSTANTIATE_TEST_SUITE_P(AllBackends, PerBackend, ::testing::ValuesIn(kAllKinds), kind_label);
INSTANTIATE_TEST_SUITE_P(InnerProductBackends, InnerProduct,
                         ::testing::Values(BackendKind::kComplEx, BackendKind::kDistMult,
                                           BackendKind::kRescal),
                         kind_label);

TEST(Score, WorkedValues) {
  EXPECT_DOUBLE_EQ(score(make_backend(BackendKind::kComplEx, 2), vec({1, 0}), vec({1, 0}),
                         vec({1, 0})),
                   1.0);
  Backend transe = make_backend(BackendKind::kTransE, 2);
  transe.margin = 1.0;
  EXPECT_DOUBLE_EQ(score(transe, vec({0, 0}), vec({0.3, 0.4}), vec({0.3, 0.4})), 1.0);
  const Backend dm = make_backend(BackendKind::kDistMult, 3);
  Rng rng(6);
  const Vec h = random_vec(rng, 3);
  const Vec r = random_vec(rng, 3);
  const Vec t = random_vec(rng, 3);
  EXPECT_NEAR(score(dm, h, r, t), score(dm, t, r, h), 1e-14);
}

TEST(Score, ComplExMatchesStdComplexArithmetic) {
  const Backend b = make_backend(BackendKind::kComplEx, 8);
  Rng rng(7);
  const Vec h = random_vec(rng, 8);
  const Vec r = random_vec(rng, 8);
  const Vec t = random_vec(rng, 8);
  double direct = 0.0;
  double swapped = 0.0;
  for (int k = 0; k < 4; ++k) {
    const std::complex<double> hc(h[2 * k], h[2 * k + 1]);
    const std::complex<double> rc(r[2 * k], r[2 * k + 1]);
    const std::complex<double> tc(t[2 * k], t[2 * k + 1]);
    direct += (hc * rc * std::conj(tc)).real();
    swapped += (tc * std::conj(rc) * std::conj(hc)).real();
  }
  EXPECT_NEAR(score(b, h, r, t), direct, 1e-10);
  EXPECT_NEAR(direct, swapped, 1e-10);
}

TEST(TruthValue, SigmoidOfScore) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  const Backend b = make_backend(BackendKind::kComplEx, 2);
  EXPECT_NEAR(truth_value(b, vec({1e3, 0}), vec({1, 0}), vec({1, 0})), 1.0, 1e-6);
  // psi(s) + psi(-s) = 1
  EXPECT_NEAR(truth_value(b, vec({0.4, 0.1}), vec({1, 0}), vec({1, 0})) +
                  truth_value(b, vec({-0.4, -0.1}), vec({1, 0}), vec({1, 0})),
              1.0, 1e-15);
}

TEST(ForwardEstimate, WorkedValues) {
  const Vec f = forward_estimate(make_backend(BackendKind::kTransE, 2), vec({0, 0}), vec({0.3, 0.4}));
  EXPECT_DOUBLE_EQ(f[0], 0.3);
  EXPECT_DOUBLE_EQ(f[1], 0.4);
  const Vec h = vec({0.5, -1.5, 2.0, 0.25});
  const Vec identity = vec({1, 0, 1, 0});
  EXPECT_EQ(forward_estimate(make_backend(BackendKind::kComplEx, 4), h, identity), h);
  const Vec rotated = forward_estimate(make_backend(BackendKind::kRotatE, 4), h,
                                       vec({std::numbers::pi, std::numbers::pi}));
  EXPECT_LT((rotated + h).cwiseAbs().maxCoeff(), 1e-12);
  const Vec w = vec({1, 2, 3, 4});  // RESCAL d = 2, row-major
  const Vec rescal = forward_estimate(make_backend(BackendKind::kRescal, 2), vec({1, 1}), w);
  EXPECT_DOUBLE_EQ(rescal[0], 3.0);
  EXPECT_DOUBLE_EQ(rescal[1], 7.0);
}

TEST(Reciprocal, WorkedValues) {
  const Vec transe = reciprocal_embedding(make_backend(BackendKind::kTransE, 2), vec({0.3, 0.4}));
  EXPECT_DOUBLE_EQ(transe[0], -0.3);
  EXPECT_DOUBLE_EQ(transe[1], -0.4);
  const Vec r = vec({0.1, 0.2, 0.3});
  EXPECT_EQ(reciprocal_embedding(make_backend(BackendKind::kDistMult, 3), r), r);
  const Vec c = reciprocal_embedding(make_backend(BackendKind::kComplEx, 2), vec({0.1, 0.2}));
  EXPECT_DOUBLE_EQ(c[0], 0.1);
  EXPECT_DOUBLE_EQ(c[1], -0.2);
}

TEST(Backend, ValidatesShape) {
  EXPECT_THROW(make_backend(BackendKind::kComplEx, 3).validate(), Error);
  EXPECT_THROW(make_backend(BackendKind::kRotatE, 5).validate(), Error);
  EXPECT_NO_THROW(make_backend(BackendKind::kTransE, 5).validate());
  EXPECT_EQ(make_backend(BackendKind::kRescal, 4).relation_width(), 16);
  EXPECT_EQ(make_backend(BackendKind::kRotatE, 4).relation_width(), 2);
  EXPECT_EQ(make_backend(BackendKind::kComplEx, 4).reg_power, 3);
  EXPECT_EQ(make_backend(BackendKind::kTransE, 4).reg_power, 2);
  EXPECT_EQ(parse_backend_kind("rotate"), BackendKind::kRotatE);
  EXPECT_THROW(parse_backend_kind("conve"), Error);
}

TEST(Table, LookupsAreChecked) {
  const EmbeddingTable t = testing::toy_table(BackendKind::kComplEx, 4, 3, 2, 1);
  EXPECT_THROW(t.entity_row(3), Error);
  EXPECT_THROW(t.relation_row(-1), Error);
  EXPECT_THROW(t.reciprocal_row(2), Error);
}

TEST(Training, MemorizesTheBenchmarkSplit) {
  const DatasetSplit split = testing::benchmark_split(7);
  const EmbeddingTable t = train_embeddings(split, make_backend(BackendKind::kComplEx, 64),
                                            testing::memorizing_hyper(1));
  EXPECT_GE(link_prediction_mrr(t, split.observed, split.full), 0.95);
}

TEST(Training, ZeroEpochsReturnsTheInitialization) {
  const DatasetSplit split = testing::benchmark_split(7);
  const Backend b = make_backend(BackendKind::kDistMult, 8);
  KgeTrainHyper h;
  h.epochs = 0;
  h.seed = 4;
  const EmbeddingTable t = train_embeddings(split, b, h);
  const EmbeddingTable init = random_table(b, 50, 5, 4, h.init_scale);
  EXPECT_EQ(t.entity, init.entity);
  EXPECT_EQ(t.relation, init.relation);
}

TEST(Training, DeterministicGivenSeed) {
  const DatasetSplit split = testing::benchmark_split(7);
  KgeTrainHyper h;
  h.epochs = 5;
  h.seed = 2;
  for (BackendKind kind : kAllKinds) {
    const Backend b = make_backend(kind, 8);
    EXPECT_EQ(train_embeddings(split, b, h).entity, train_embeddings(split, b, h).entity)
        << backend_name(kind);
  }
}

TEST(Training, ReportsEpochLossAndDivergence) {
  const DatasetSplit split = testing::benchmark_split(7);
  KgeTrainHyper h;
  h.epochs = 3;
  std::vector<int> seen;
  train_embeddings(split, make_backend(BackendKind::kTransE, 8), h,
                   [&](int epoch, double loss) {
                     seen.push_back(epoch);
                     EXPECT_TRUE(std::isfinite(loss));
                   });
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3}));
  h.lr = 1e200;
  h.init_scale = 1e150;
  try {
    train_embeddings(split, make_backend(BackendKind::kComplEx, 8), h);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraining);
  }
}

TEST(LinkPrediction, RandomTableScoresInsideTheUnitInterval) {
  const DatasetSplit split = testing::benchmark_split(7);
  const EmbeddingTable t = testing::toy_table(BackendKind::kComplEx, 8, 50, 5, 3);
  const double mrr = link_prediction_mrr(t, split.observed, split.full);
  EXPECT_GT(mrr, 0.0);
  EXPECT_LT(mrr, 0.5);
}

}  // namespace
}  // namespace lmpnn
