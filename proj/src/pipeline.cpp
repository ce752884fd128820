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
#include "dispel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "dispel/errors.hpp"
#include "dispel/parallel.hpp"
#include "dispel/rng.hpp"

namespace dispel {
namespace {

// Sub-stream tags for the pipeline's independent random choices.
constexpr std::uint64_t kTagUpsample = 0x75;
constexpr std::uint64_t kTagQuota = 0x71;
constexpr std::uint64_t kTagBalanced = 0x62;
constexpr std::uint64_t kTagHalf = 0x68;
constexpr std::uint64_t kTagShuffle = 0x73;
constexpr std::uint64_t kTagSubset = 0x6c;
constexpr std::uint64_t kTagCell = 0x63;

// First k entries of a seeded Fisher-Yates shuffle of `items`.
std::vector<Eigen::Index> sample_without_replacement(
    std::vector<Eigen::Index> items, Eigen::Index k, rng::Stream& stream) {
  const auto n = static_cast<Eigen::Index>(items.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           stream.next_below(static_cast<std::uint64_t>(
                               n - i)));
    std::swap(items[static_cast<std::size_t>(i)],
              items[static_cast<std::size_t>(j)]);
  }
  items.resize(static_cast<std::size_t>(k));
  return items;
}

void require_binary_labels(const Dataset& data, const char* who) {
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (data.y[i] != 1 && data.y[i] != -1) {
      throw ValidationError(std::string(who) +
                            " expects labels +1/-1, found " +
                            std::to_string(data.y[i]) + " at row " +
                            std::to_string(i));
    }
  }
}

// Per-row loss multipliers resolved from the per-class map; classes
// absent from the map weigh 1.
std::vector<double> resolve_loss_weights(const Dataset& data,
                                         const RetrainConfig& cfg) {
  for (const auto& [label, weight] : cfg.class_loss_weight) {
    if (weight < 0.0) {
      throw ValidationError("class " + std::to_string(label) +
                            " has a negative loss weight");
    }
  }
  std::vector<double> out(static_cast<std::size_t>(data.rows()), 1.0);
  if (cfg.class_loss_weight.empty()) return out;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto it = cfg.class_loss_weight.find(data.y[i]);
    if (it != cfg.class_loss_weight.end()) {
      out[static_cast<std::size_t>(i)] = it->second;
    }
  }
  return out;
}

ModelWeights sgd_early_stop(const Dataset& train, const Dataset& val,
                            const RetrainConfig& cfg,
                            const GroupUniverse& universe,
                            const std::vector<double>& loss_weight) {
  const Eigen::Index n = train.rows();
  const Eigen::Index d = train.dim();
  ModelWeights current;
  current.w = Eigen::VectorXd::Zero(d);
  current.b = 0.0;
  ModelWeights best = current;
  double best_acc = -1.0;
  std::int64_t stale = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng::Stream shuffle(rng::derive(cfg.seed, kTagShuffle,
                                    static_cast<std::uint64_t>(epoch)));
    for (Eigen::Index i = 0; i < n - 1; ++i) {
      const auto j = i + static_cast<Eigen::Index>(shuffle.next_below(
                             static_cast<std::uint64_t>(n - i)));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }
    for (const Eigen::Index i : order) {
      const double y = train.y[i];
      const Eigen::VectorXd x = train.x.row(i).transpose().cast<double>();
      const double z = y * (current.w.dot(x) + *current.b);
      const double g = loss_weight[static_cast<std::size_t>(i)] * -y /
                       (1.0 + std::exp(z));
      current.w -= cfg.learning_rate * g * x;
      *current.b -= cfg.learning_rate * g;
    }
    if (!current.w.allFinite() || !std::isfinite(*current.b)) {
      throw NumericalError("sgd diverged at epoch " + std::to_string(epoch));
    }
    const double acc =
        evaluate_accuracy(current, val, universe).worst_value;
    if (acc > best_acc) {
      best_acc = acc;
      best = current;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return best;
}

// Proximal gradient (ISTA) for mean logistic loss + l1 penalty on w; the
// bias is unpenalized. Fixed iteration budget, step 1 / L with L from the
// augmented Gram (logistic curvature is at most 1/4).
ModelWeights l1_logistic_fit(const Dataset& data,
                             const std::vector<Eigen::Index>& rows,
                             const RetrainConfig& cfg,
                             const std::vector<double>& loss_weight) {
  const Eigen::Index d = data.dim();
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  Eigen::VectorXd cw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = data.x.row(rows[static_cast<std::size_t>(i)]).cast<double>();
    y[i] = data.y[rows[static_cast<std::size_t>(i)]];
    cw[i] = loss_weight[static_cast<std::size_t>(
        rows[static_cast<std::size_t>(i)])];
  }
  // Curvature bound from rows scaled by sqrt of their loss weight: the
  // weighted logistic Hessian is at most 1/4 of this augmented Gram.
  const Eigen::MatrixXd xs = cw.cwiseSqrt().asDiagonal() * x;
  Eigen::MatrixXd aug(d + 1, d + 1);
  aug.topLeftCorner(d, d) = xs.transpose() * xs;
  aug.topRightCorner(d, 1) =
      (cw.asDiagonal() * x).colwise().sum().transpose();
  aug.bottomLeftCorner(1, d) = (cw.asDiagonal() * x).colwise().sum();
  aug(d, d) = cw.sum();
  const double lipschitz =
      power_iteration_max_eig(aug) / (4.0 * static_cast<double>(n));
  const double step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
  const double shrink = step * cfg.l1_strength;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  for (std::int64_t it = 0; it < cfg.epochs; ++it) {
    const Eigen::VectorXd z =
        y.array() * ((x * w).array() + b);  // margin per row
    const Eigen::VectorXd coef =
        (cw.array() * -y.array() / (1.0 + z.array().exp())).matrix() /
        static_cast<double>(n);
    const Eigen::VectorXd grad_w = x.transpose() * coef;
    const double grad_b = coef.sum();
    w -= step * grad_w;
    b -= step * grad_b;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = w[j];
      w[j] = v > shrink ? v - shrink : (v < -shrink ? v + shrink : 0.0);
    }
    if (!w.allFinite() || !std::isfinite(b)) {
      throw NumericalError("l1 logistic fit diverged at iteration " +
                           std::to_string(it));
    }
  }
  ModelWeights out;
  out.w = std::move(w);
  out.b = b;
  return out;
}

ModelWeights l1_logreg_averaged(const Dataset& train,
                                const RetrainConfig& cfg,
                                const std::vector<double>& loss_weight) {
  const Eigen::Index n = train.rows();
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(train.dim());
  double b_sum = 0.0;
  for (int rep = 0; rep < cfg.subset_repeats; ++rep) {
    std::vector<Eigen::Index> rows;
    if (cfg.subset_repeats == 1) {
      rows = all;
    } else {
      rng::Stream stream(rng::derive(cfg.seed, kTagSubset,
                                     static_cast<std::uint64_t>(rep)));
      rows = sample_without_replacement(all, std::max<Eigen::Index>(
                                                 1, n / 2),
                                        stream);
    }
    const ModelWeights fit = l1_logistic_fit(train, rows, cfg, loss_weight);
    w_sum += fit.w;
    b_sum += *fit.b;
  }
  ModelWeights out;
  out.w = w_sum / cfg.subset_repeats;
  out.b = b_sum / cfg.subset_repeats;
  return out;
}

// One-vs-rest view: y becomes +1 on the positive class and -1 elsewhere;
// attributes stay, so the relabeled groups partition the originals.
Dataset relabel_one_vs_rest(const Dataset& data, int positive) {
  Dataset out = data;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.y[i] = data.y[i] == positive ? 1 : -1;
  }
  out.rebuild_index();
  return out;
}

}  // namespace

Dataset build_ft_split(const Dataset& data, const SplitPlan& plan) {
  if (data.rows() == 0) {
    throw ValidationError("build_ft_split needs a nonempty dataset");
  }
  switch (plan.class_balance.kind) {
    case ClassBalance::Kind::as_is:
      return data;
    case ClassBalance::Kind::upsample_minor_class: {
      require_binary_labels(data, "upsample_minor_class");
      std::vector<Eigen::Index> pos, neg;
      for (Eigen::Index i = 0; i < data.rows(); ++i) {
        (data.y[i] == 1 ? pos : neg).push_back(i);
      }
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.rows()));
      for (Eigen::Index i = 0; i < data.rows(); ++i) {
        rows[static_cast<std::size_t>(i)] = i;
      }
      const auto& minor = pos.size() < neg.size() ? pos : neg;
      const auto& major = pos.size() < neg.size() ? neg : pos;
      if (minor.empty()) {
        throw ValidationError("upsampling needs both classes present");
      }
      rng::Stream stream(rng::derive(plan.seed, kTagUpsample));
      for (std::size_t k = minor.size(); k < major.size(); ++k) {
        rows.push_back(minor[stream.next_below(minor.size())]);
      }
      return take_rows(data, rows);
    }
    case ClassBalance::Kind::quota: {
      std::vector<Eigen::Index> rows;
      std::uint64_t ordinal = 0;
      for (const auto& [gid, want] : plan.class_balance.quota) {
        const auto it = data.group_index.find(gid);
        if (it == data.group_index.end()) {
          throw ValidationError("quota references absent group " +
                                to_string(gid));
        }
        rng::Stream stream(rng::derive(plan.seed, kTagQuota, ordinal++));
        const auto& pool = it->second;
        if (want <= static_cast<Eigen::Index>(pool.size())) {
          auto chosen = sample_without_replacement(pool, want, stream);
          rows.insert(rows.end(), chosen.begin(), chosen.end());
        } else {
          for (Eigen::Index k = 0; k < want; ++k) {
            rows.push_back(pool[stream.next_below(pool.size())]);
          }
        }
      }
      return take_rows(data, rows);
    }
  }
  throw ValidationError("unknown class balance kind");
}

Dataset build_balanced_split(const Dataset& data, Eigen::Index l,
                             std::uint64_t seed) {
  if (data.rows() == 0) {
    throw ValidationError("build_balanced_split needs a nonempty dataset");
  }
  Eigen::Index want = l;
  if (want == 0) {
    want = data.rows();
    for (const auto& [gid, pool] : data.group_index) {
      want = std::min(want, static_cast<Eigen::Index>(pool.size()));
    }
  }
  std::vector<Eigen::Index> rows;
  std::uint64_t ordinal = 0;
  for (const auto& [gid, pool] : data.group_index) {
    if (want > static_cast<Eigen::Index>(pool.size())) {
      throw ValidationError("group " + to_string(gid) + " has only " +
                            std::to_string(pool.size()) + " rows, need " +
                            std::to_string(want));
    }
    rng::Stream stream(rng::derive(seed, kTagBalanced, ordinal++));
    auto chosen = sample_without_replacement(pool, want, stream);
    std::sort(chosen.begin(), chosen.end());
    rows.insert(rows.end(), chosen.begin(), chosen.end());
  }
  return take_rows(data, rows);
}

std::pair<Dataset, Dataset> split_half_by_group(const Dataset& data,
                                                std::uint64_t seed) {
  std::vector<Eigen::Index> first, second;
  std::uint64_t ordinal = 0;
  for (const auto& [gid, pool] : data.group_index) {
    rng::Stream stream(rng::derive(seed, kTagHalf, ordinal++));
    const auto n = static_cast<Eigen::Index>(pool.size());
    auto shuffled = sample_without_replacement(pool, n, stream);
    const Eigen::Index keep = (n + 1) / 2;
    for (Eigen::Index i = 0; i < n; ++i) {
      (i < keep ? first : second).push_back(shuffled[
          static_cast<std::size_t>(i)]);
    }
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {take_rows(data, first), take_rows(data, second)};
}

ModelWeights retrain_head(const Dataset& d_mixed, const Dataset& val,
                          const RetrainConfig& cfg,
                          const GroupUniverse& universe) {
  if (d_mixed.rows() == 0) {
    throw ValidationError("retrain_head needs training rows");
  }
  if (cfg.patience > cfg.epochs) {
    throw ValidationError("patience cannot exceed the epoch budget");
  }
  if (cfg.subset_repeats < 1) {
    throw ValidationError("subset_repeats must be at least 1");
  }
  require_binary_labels(d_mixed, "retrain_head");
  const std::vector<double> loss_weight = resolve_loss_weights(d_mixed, cfg);
  if (cfg.optimizer == RetrainConfig::Optimizer::sgd_early_stop) {
    return sgd_early_stop(d_mixed, val, cfg, universe, loss_weight);
  }
  return l1_logreg_averaged(d_mixed, cfg, loss_weight);
}

int MulticlassHead::predict(
    const Eigen::Ref<const Eigen::RowVectorXf>& x) const {
  if (labels.empty() || labels.size() != heads.size()) {
    throw ValidationError("multiclass head is empty or inconsistent");
  }
  const Eigen::VectorXd xd = x.transpose().cast<double>();
  int best_label = labels.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const ModelWeights& head = heads[k];
    const double score = head.w.dot(xd) + head.b.value_or(0.0);
    // Strict comparison with ascending labels resolves ties to the
    // smaller class id.
    if (score > best_score) {
      best_score = score;
      best_label = labels[k];
    }
  }
  return best_label;
}

MulticlassHead retrain_multiclass(const Dataset& d_mixed, const Dataset& val,
                                  const RetrainConfig& cfg) {
  if (d_mixed.rows() == 0) {
    throw ValidationError("retrain_multiclass needs training rows");
  }
  if (cfg.patience > cfg.epochs) {
    throw ValidationError("patience cannot exceed the epoch budget");
  }
  if (cfg.subset_repeats < 1) {
    throw ValidationError("subset_repeats must be at least 1");
  }
  // Loss weights key on the original class ids, before any relabeling.
  const std::vector<double> loss_weight = resolve_loss_weights(d_mixed, cfg);
  std::set<int> classes;
  for (Eigen::Index i = 0; i < d_mixed.rows(); ++i) {
    classes.insert(d_mixed.y[i]);
  }
  if (classes.size() < 2) {
    throw ValidationError("retrain_multiclass needs at least two classes");
  }
  MulticlassHead out;
  for (const int c : classes) {
    const Dataset train_c = relabel_one_vs_rest(d_mixed, c);
    ModelWeights w;
    if (cfg.optimizer == RetrainConfig::Optimizer::sgd_early_stop) {
      const Dataset val_c = relabel_one_vs_rest(val, c);
      w = sgd_early_stop(train_c, val_c, cfg, universe_of(val_c),
                         loss_weight);
    } else {
      w = l1_logreg_averaged(train_c, cfg, loss_weight);
    }
    out.labels.push_back(c);
    out.heads.push_back(std::move(w));
  }
  return out;
}

GroupReport multiclass_accuracy(const MulticlassHead& head,
                                const Dataset& data,
                                const GroupUniverse& universe) {
  return evaluate_rowwise(
      data, universe,
      [&](Eigen::Index i) {
        return head.predict(data.x.row(i)) == data.y[i] ? 1.0 : 0.0;
      },
      /*worst_is_min=*/true);
}

SweepResult sweep(const Dataset& d_ft, const Dataset& d_bal,
                  const Dataset& val, const SweepGrid& grid,
                  const RetrainConfig& cfg, const GroupUniverse& universe) {
  if (grid.alphas.empty() || grid.s_values.empty()) {
    throw ValidationError("the sweep grid must be nonempty");
  }
  const std::size_t cells = grid.alphas.size() * grid.s_values.size();
  std::vector<SweepCell> table(cells);
  std::vector<ModelWeights> fits(cells);
  parallel_tasks(static_cast<std::int64_t>(cells), [&](std::int64_t cell) {
    const std::size_t ai = static_cast<std::size_t>(cell) /
                           grid.s_values.size();
    const std::size_t si = static_cast<std::size_t>(cell) %
                           grid.s_values.size();
    MixConfig mc;
    mc.alpha = grid.alphas[ai];
    mc.s = grid.s_values[si];
    mc.seed = rng::derive(cfg.seed, kTagCell,
                          static_cast<std::uint64_t>(cell));
    auto [mixed, trace] = mix(d_ft, d_bal, mc);
    ModelWeights w = retrain_head(mixed, val, cfg, universe);
    const double acc = evaluate_accuracy(w, val, universe).worst_value;
    table[static_cast<std::size_t>(cell)] =
        SweepCell{mc.alpha, mc.s, acc};
    fits[static_cast<std::size_t>(cell)] = std::move(w);
  });
  SweepResult out;
  out.table = table;
  std::size_t best = 0;
  for (std::size_t c = 1; c < cells; ++c) {
    const SweepCell& cand = table[c];
    const SweepCell& inc = table[best];
    const bool better =
        cand.wg_val_acc > inc.wg_val_acc ||
        (cand.wg_val_acc == inc.wg_val_acc &&
         (cand.s < inc.s || (cand.s == inc.s && cand.alpha < inc.alpha)));
    if (better) best = c;
  }
  out.best_weights = fits[best];
  out.best_alpha = table[best].alpha;
  out.best_s = table[best].s;
  out.best_acc = table[best].wg_val_acc;
  return out;
}

}  // namespace dispel
