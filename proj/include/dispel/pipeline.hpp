/*
 * Copyright 2026 The Dispel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dispel/dataset.hpp"
#include "dispel/groupeval.hpp"
#include "dispel/io.hpp"
#include "dispel/linmodel.hpp"
#include "dispel/mixer.hpp"

namespace dispel {

// Embedding files share the dataset formats; see io.hpp.
inline Dataset load_embeddings(const std::string& path, FileFormat format) {
  return load_dataset(path, format);
}

enum class SplitSource { validation_half, training };

struct ClassBalance {
  enum class Kind { upsample_minor_class, as_is, quota } kind = Kind::as_is;
  // Quotas are keyed by group so per-group prescriptions (the
  // Waterbirds-style 948/52/43/957 split) are expressible; a per-class
  // quota is the special case of equal counts across a class's groups.
  std::map<GroupId, Eigen::Index> quota;
};

struct SplitPlan {
  SplitSource source = SplitSource::training;  // provenance of `data`
  ClassBalance class_balance;
  Eigen::Index l_per_group = 0;  // 0 means max = smallest group size
  std::uint64_t seed = 0;
};

// Applies the class-balance rule: upsample_minor_class duplicates uniform
// redraws of the smaller class until class sizes match (originals first,
// duplicates appended); quota samples each listed group to its count,
// with replacement only when the count exceeds availability.
Dataset build_ft_split(const Dataset& data, const SplitPlan& plan);

// Exactly l rows per group present in `data`, sampled without
// replacement; l = 0 resolves to the smallest group size. Throws when l
// exceeds a group's size, naming the group.
Dataset build_balanced_split(const Dataset& data, Eigen::Index l,
                             std::uint64_t seed);

// Seeded uniform half split, stratified by group (odd groups leave the
// extra row in the first half).
std::pair<Dataset, Dataset> split_half_by_group(const Dataset& data,
                                                std::uint64_t seed);

struct RetrainConfig {
  enum class Optimizer { sgd_early_stop, l1_logreg_averaged };
  Optimizer optimizer = Optimizer::sgd_early_stop;
  double learning_rate = 0.05;
  double l1_strength = 0.0;    // l1_logreg_averaged only
  std::int64_t epochs = 60;    // sgd: max epochs; l1: iteration budget
  std::int64_t patience = 10;  // sgd only
  int subset_repeats = 10;     // l1 only; 1 fits the full subset once
  // Optional per-class loss multipliers; classes absent from the map
  // weigh 1. Excluded from default sweeps.
  std::map<int, double> class_loss_weight;
  std::uint64_t seed = 0;
};

// Logistic-loss head retraining on +-1 labels with a bias.
//
// sgd_early_stop: one stochastic pass per epoch in a fresh shuffled order,
// evaluating worst-group validation accuracy after every epoch; returns
// the weights of the best epoch and stops after `patience` epochs without
// strict improvement.
//
// l1_logreg_averaged: subset_repeats proximal-gradient (soft-threshold)
// fits of l1-regularized logistic regression, each on an independent
// half-size row subset (the full set when subset_repeats = 1), averaged
// arithmetically.
ModelWeights retrain_head(const Dataset& d_mixed, const Dataset& val,
                          const RetrainConfig& cfg,
                          const GroupUniverse& universe);

// One-vs-rest heads for datasets whose y column carries class ids rather
// than +-1 labels; prediction is the argmax score, ties to the smaller id.
struct MulticlassHead {
  std::vector<int> labels;          // ascending class ids
  std::vector<ModelWeights> heads;  // same order as labels
  int predict(const Eigen::Ref<const Eigen::RowVectorXf>& x) const;
};

// Fits one retrain_head per class on the +-1 relabeled problem (val is
// relabeled the same way, so early stopping sees the per-class groups).
MulticlassHead retrain_multiclass(const Dataset& d_mixed, const Dataset& val,
                                  const RetrainConfig& cfg);

// Argmax accuracy per (a, y) group; worst minimizes over the universe
// restriction exactly like evaluate_accuracy.
GroupReport multiclass_accuracy(const MulticlassHead& head,
                                const Dataset& data,
                                const GroupUniverse& universe);

struct SweepGrid {
  std::vector<double> alphas;
  std::vector<double> s_values;
};

struct SweepCell {
  double alpha = 0.0;
  double s = 0.0;
  double wg_val_acc = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> table;  // alpha-major, then s, matching the grid
  ModelWeights best_weights;
  double best_alpha = 0.0;
  double best_s = 0.0;
  double best_acc = 0.0;
};

// Mixes, retrains, and scores every (alpha, s) cell on worst-group
// validation accuracy. Cells run in parallel: cell mixing uses the seed
// derive(cfg.seed, cell index) while retraining shares cfg.seed, so
// alpha = 0 cells reproduce the unmixed baseline exactly. Ties prefer
// smaller s, then smaller alpha.
SweepResult sweep(const Dataset& d_ft, const Dataset& d_bal,
                  const Dataset& val, const SweepGrid& grid,
                  const RetrainConfig& cfg, const GroupUniverse& universe);

}  // namespace dispel
