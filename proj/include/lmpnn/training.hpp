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
#include <functional>
#include <span>
#include <vector>

#include "lmpnn/lmpnn_core.hpp"
#include "lmpnn/query_model.hpp"
#include "lmpnn/rng.hpp"

namespace lmpnn {

struct TrainConfig {
  double temperature = 0.05;
  int negatives = 128;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 1024;
  int epochs = 200;
  std::uint64_t seed = 0;
  int depth_offset = 0;

  void validate() const;
};

// One positive answer with its K noise entities.
struct NceSample {
  Efo1Query query;
  EntityId answer = 0;
  std::vector<EntityId> negatives;
};

// -log softmax of the positive among cos/T logits.
double nce_from_cosines(double positive, std::span<const double> negatives, double temperature);

// Draws one answer per instance and K uniform negatives (collisions allowed).
std::vector<NceSample> make_batch(std::span<const QueryInstance> instances,
                                  std::span<const std::size_t> indices, int negatives,
                                  int entity_count, Rng& rng);

double nce_loss(std::span<const NceSample> batch, const EmbeddingTable& table,
                const LmpnnParams& params, const TrainConfig& cfg);
// Batch-mean loss; `grad` is overwritten with its exact gradient w.r.t. the
// MLP, v_x and v_y (and the KGE-Cat map when enabled).
double nce_loss_and_gradient(std::span<const NceSample> batch, const EmbeddingTable& table,
                             const LmpnnParams& params, const TrainConfig& cfg,
                             LmpnnParams& grad);

// Adam with decoupled weight decay on a flat parameter vector.
class AdamW {
 public:
  AdamW(Eigen::Index size, double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8);
  void step(Vec& params, const VecRef& grad);

 private:
  double lr_;
  double weight_decay_;
  double beta1_;
  double beta2_;
  double eps_;
  long step_count_ = 0;
  Vec m_;
  Vec v_;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double wall_ms = 0.0;
};
using EpochCallback = std::function<void(const EpochStats&)>;

// Instances supply the positives; each epoch visits every instance once.
// Throws kTraining on a non-finite loss.
LmpnnParams train_lmpnn(const EmbeddingTable& table, std::span<const QueryInstance> instances,
                        const LmpnnParams& initial, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = {});

}  // namespace lmpnn
