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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lmpnn/error.hpp"
#include "lmpnn/training.hpp"

namespace lmpnn {
namespace {

Term c(EntityId e) { return Term::constant(e); }
Term y() { return Term::free(); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "nothing thrown";
  return ErrorCode::kIo;
}

TEST(Nce, AnalyticValues) {
  const std::vector<double> far(128, -1.0);
  EXPECT_NEAR(nce_from_cosines(1.0, far, 0.05), std::log1p(128 * std::exp(-40.0)), 1e-15);
  EXPECT_LT(nce_from_cosines(1.0, far, 0.05), 1e-14);
  const std::vector<double> same(16, 0.3);
  EXPECT_NEAR(nce_from_cosines(0.3, same, 0.05), std::log(17.0), 1e-12);
  EXPECT_NEAR(nce_from_cosines(0.3, same, 0.1), std::log(17.0), 1e-12);
  EXPECT_GE(nce_from_cosines(-1.0, std::vector<double>(4, 1.0), 0.05), 0.0);
}

struct Fixture {
  DatasetSplit split = testing::benchmark_split(4);
  EmbeddingTable table = testing::toy_table(BackendKind::kComplEx, 8, 50, 5, 6);
  LmpnnParams params = init_params(8, 12, 0.1, 3);
  TrainConfig cfg;
  Fixture() {
    cfg.negatives = 6;
    cfg.seed = 1;
  }
  std::vector<NceSample> batch(const std::vector<std::string>& types, int per_type) {
    std::vector<QueryInstance> inst;
    for (const auto& t : types) {
      for (auto& q : sample_instances(split, t, per_type, 2)) inst.push_back(q);
    }
    std::vector<std::size_t> idx(inst.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(5);
    return make_batch(inst, idx, cfg.negatives, table.entity_count(), rng);
  }
};

void expect_gradient_matches(const std::vector<NceSample>& batch, const Fixture& f,
                             double step) {
  LmpnnParams grad = f.params.zeros_like();
  const double loss = nce_loss_and_gradient(batch, f.table, f.params, f.cfg, grad);
  EXPECT_NEAR(loss, nce_loss(batch, f.table, f.params, f.cfg), 1e-12);
  const Vec analytic = grad.flatten();
  const Vec base = f.params.flatten();
  LmpnnParams probe = f.params;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Vec p = base;
    p[i] += step;
    probe.assign_flat(p);
    const double up = nce_loss(batch, f.table, probe, f.cfg);
    p[i] = base[i] - step;
    probe.assign_flat(p);
    const double down = nce_loss(batch, f.table, probe, f.cfg);
    const double fd = (up - down) / (2.0 * step);
    EXPECT_NEAR(analytic[i], fd, 1e-4 * std::max(std::abs(fd), 1e-2)) << "coordinate " << i;
  }
}

TEST(Gradient, MatchesFiniteDifferencesOnMixedTypes) {
  Fixture f;
  expect_gradient_matches(f.batch({"1p", "2in", "up", "pni"}, 2), f, 1e-5);
}

TEST(Gradient, MatchesWithEpsilonAndDeeperUnrolls) {
  Fixture f;
  f.params.epsilon = 0.7;
  f.cfg.depth_offset = 1;
  f.cfg.temperature = 0.2;
  expect_gradient_matches(f.batch({"3p", "inp"}, 2), f, 1e-5);
}

TEST(Gradient, OneHopLeavesTheExistentialVectorAlone) {
  Fixture f;
  LmpnnParams grad = f.params.zeros_like();
  nce_loss_and_gradient(f.batch({"1p", "2i", "3in"}, 3), f.table, f.params, f.cfg, grad);
  EXPECT_TRUE(grad.v_x.isZero(0.0));
  EXPECT_FALSE(grad.v_y.isZero(0.0));
}

TEST(Gradient, SaturatedBatchIsFlat) {
  // Entity 0 points along u, the rest along -u. A DistMult all-ones relation
  // and an identity MLP make z(r(0, y)) = emb(0).
  EmbeddingTable table;
  table.backend = make_backend(BackendKind::kDistMult, 4);
  table.entity = RowMatrix(4, 4);
  table.entity.row(0) << 1.0, 2.0, -1.0, 0.5;
  for (int e = 1; e < 4; ++e) table.entity.row(e) = -table.entity.row(0);
  table.relation = RowMatrix::Ones(1, 4);
  table.refresh_reciprocals();
  LmpnnParams p = init_params(4, 4, 0.0, 1);
  p.w1.setIdentity();
  p.w2.setIdentity();
  p.b1.setConstant(10.0);
  p.b2.setConstant(-10.0);
  p.v_y.setZero();
  TrainConfig cfg;
  NceSample s{{}, 0, {1, 2, 3}};
  s.query.disjuncts = {{{{0, c(0), y()}}}};
  const std::vector<NceSample> batch{s};
  LmpnnParams grad = p.zeros_like();
  const double loss = nce_loss_and_gradient(batch, table, p, cfg, grad);
  EXPECT_LT(loss, 1e-12);
  EXPECT_LT(grad.flatten().norm(), 1e-6);
}

TEST(Gradient, Errors) {
  Fixture f;
  LmpnnParams grad = f.params.zeros_like();
  EXPECT_EQ(code_of([&] { nce_loss_and_gradient({}, f.table, f.params, f.cfg, grad); }),
            ErrorCode::kArgument);
  auto batch = f.batch({"1p"}, 1);
  batch[0].negatives[0] = 500;
  EXPECT_EQ(code_of([&] { nce_loss(batch, f.table, f.params, f.cfg); }), ErrorCode::kLookup);
}

TEST(Batch, AnswersAndNegativesAreValid) {
  Fixture f;
  std::vector<QueryInstance> inst = sample_instances(f.split, "2p", 30, 8);
  std::vector<std::size_t> idx = {3, 7, 11};
  Rng rng(2);
  const auto batch = make_batch(inst, idx, 9, 50, rng);
  ASSERT_EQ(batch.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const AnswerSet all = inst[idx[i]].all_answers();
    EXPECT_TRUE(std::binary_search(all.begin(), all.end(), batch[i].answer));
    EXPECT_EQ(batch[i].negatives.size(), 9u);
    for (EntityId e : batch[i].negatives) EXPECT_TRUE(e >= 0 && e < 50);
    EXPECT_EQ(batch[i].query, inst[idx[i]].query);
  }
}

TEST(Config, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.temperature = 0.0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::kConfig);
  cfg = TrainConfig{};
  cfg.negatives = 0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::kConfig);
  cfg = TrainConfig{};
  cfg.lr = -1.0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::kConfig);
}

TEST(AdamWTest, DecayIsDecoupledFromTheGradient) {
  AdamW opt(3, 0.1, 0.5);
  Vec p(3);
  p << 1.0, -2.0, 4.0;
  opt.step(p, Vec::Zero(3));
  Vec expected(3);
  expected << 0.95, -1.9, 3.8;
  EXPECT_TRUE(p.isApprox(expected, 1e-15));
  AdamW plain(2, 0.01, 0.0);
  Vec q = Vec::Zero(2);
  Vec g(2);
  g << 3.0, -1e-3;
  plain.step(q, g);
  // First bias-corrected step has magnitude lr regardless of |g|.
  EXPECT_NEAR(q[0], -0.01, 1e-9);
  EXPECT_NEAR(q[1], 0.01, 1e-7);
}

std::vector<QueryInstance> small_set(const DatasetSplit& split) {
  std::vector<QueryInstance> all;
  for (const std::string t : {"1p", "2p", "2in", "inp"}) {
    for (auto& q : sample_instances(split, t, 25, 3)) all.push_back(q);
  }
  return all;
}

TEST(Train, ZeroLearningRateChangesNothing) {
  Fixture f;
  f.cfg.lr = 0.0;
  f.cfg.epochs = 2;
  f.cfg.batch_size = 16;
  const auto inst = small_set(f.split);
  EXPECT_EQ(train_lmpnn(f.table, inst, f.params, f.cfg).flatten(), f.params.flatten());
}

TEST(Train, LossFallsDeterministicallyAndTheTableStaysFrozen) {
  Fixture f;
  f.cfg.lr = 3e-3;
  f.cfg.epochs = 25;
  f.cfg.batch_size = 16;
  f.cfg.negatives = 16;
  const auto inst = small_set(f.split);
  const EmbeddingTable before = f.table;
  std::vector<double> losses;
  const LmpnnParams a = train_lmpnn(f.table, inst, f.params, f.cfg,
                                    [&](const EpochStats& s) { losses.push_back(s.mean_loss); });
  ASSERT_EQ(losses.size(), 25u);
  EXPECT_LT(losses.back(), 0.8 * losses.front());
  EXPECT_EQ(f.table.entity, before.entity);
  EXPECT_EQ(f.table.relation, before.relation);
  const LmpnnParams b = train_lmpnn(f.table, inst, f.params, f.cfg);
  EXPECT_EQ(a.flatten(), b.flatten());
  f.cfg.seed = 2;
  EXPECT_NE(train_lmpnn(f.table, inst, f.params, f.cfg).flatten(), a.flatten());
}

TEST(Train, DivergenceIsReported) {
  Fixture f;
  f.cfg.lr = 1e308;
  f.cfg.weight_decay = 0.0;
  f.cfg.epochs = 3;
  f.cfg.batch_size = 8;
  const auto inst = small_set(f.split);
  try {
    train_lmpnn(f.table, inst, f.params, f.cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraining) << e.what();
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace lmpnn
