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

#include <functional>
#include <optional>
#include <vector>

#include "dispel/dataset.hpp"
#include "dispel/linmodel.hpp"

namespace dispel {

struct GroupUniverse {
  std::vector<GroupId> groups;
  // Worst-group reduction set G'; empty optional means all groups.
  std::optional<std::vector<GroupId>> restriction;
};

// Universe covering exactly the groups present in the dataset, in index
// order, with no restriction.
GroupUniverse universe_of(const Dataset& data);

struct GroupStat {
  Eigen::Index count = 0;
  double value = 0.0;  // accuracy or mean squared error
};

struct GroupReport {
  std::vector<std::pair<GroupId, GroupStat>> per_group;  // universe order
  GroupId worst_group;
  double worst_value = 0.0;
  double average = 0.0;  // unweighted mean over rows, not over groups
};

// Per-group accuracy of sign(w.x + b - threshold); scores tied at the
// threshold classify as +1. Worst group minimizes accuracy over the
// restriction. Throws ValidationError when a row's group is outside the
// universe or a restriction group has no rows.
GroupReport evaluate_accuracy(const ModelWeights& weights, const Dataset& data,
                              const GroupUniverse& universe,
                              double threshold = 0.0);

// Per-group mean squared error of w.x + b against y; worst group maximizes
// the loss over the restriction. Errors as above.
GroupReport evaluate_mse(const ModelWeights& weights, const Dataset& data,
                         const GroupUniverse& universe);

// Generic per-row reduction behind both reports, exposed so other scoring
// rules (the pipeline's argmax heads) share the universe bookkeeping:
// stat(i) is row i's contribution; worst_is_min picks the reduction sense.
GroupReport evaluate_rowwise(const Dataset& data,
                             const GroupUniverse& universe,
                             const std::function<double(Eigen::Index)>& stat,
                             bool worst_is_min);

}  // namespace dispel
