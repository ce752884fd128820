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
#include "dispel/groupeval.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <string>

#include "dispel/errors.hpp"

namespace dispel {

GroupReport evaluate_rowwise(const Dataset& data,
                             const GroupUniverse& universe,
                             const std::function<double(Eigen::Index)>& stat,
                             bool worst_is_min) {
  if (data.rows() == 0) {
    throw ValidationError("evaluation needs a nonempty dataset");
  }
  if (universe.groups.empty()) {
    throw ValidationError("the group universe is empty");
  }
  std::map<GroupId, GroupStat> table;
  for (const GroupId g : universe.groups) table.emplace(g, GroupStat{});
  if (universe.restriction.has_value()) {
    for (const GroupId g : *universe.restriction) {
      if (!table.count(g)) {
        throw ValidationError("restriction group " + to_string(g) +
                              " is not in the universe");
      }
    }
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto it = table.find(data.group(i));
    if (it == table.end()) {
      throw ValidationError("row " + std::to_string(i) + " has group " +
                            to_string(data.group(i)) +
                            " outside the declared universe");
    }
    const double v = stat(i);
    it->second.count += 1;
    it->second.value += v;
    total += v;
  }
  GroupReport out;
  out.average = total / static_cast<double>(data.rows());
  for (const GroupId g : universe.groups) {
    GroupStat s = table.at(g);
    if (s.count > 0) s.value /= static_cast<double>(s.count);
    out.per_group.emplace_back(g, s);
  }
  const auto& reduction =
      universe.restriction.has_value() ? *universe.restriction
                                       : universe.groups;
  bool found = false;
  for (const GroupId g : reduction) {
    const GroupStat s = table.at(g);
    if (s.count == 0) {
      throw ValidationError("worst-group reduction over empty group " +
                            to_string(g));
    }
    const double value = s.value / static_cast<double>(s.count);
    const bool better = worst_is_min ? value < out.worst_value
                                     : value > out.worst_value;
    if (!found || better) {
      out.worst_group = g;
      out.worst_value = value;
      found = true;
    }
  }
  return out;
}

GroupUniverse universe_of(const Dataset& data) {
  GroupUniverse out;
  for (const auto& [g, rows] : data.group_index) out.groups.push_back(g);
  return out;
}

GroupReport evaluate_accuracy(const ModelWeights& weights, const Dataset& data,
                              const GroupUniverse& universe,
                              double threshold) {
  if (weights.w.size() != data.dim()) {
    throw ValidationError("weights dimension does not match data");
  }
  return evaluate_rowwise(
      data, universe,
      [&](Eigen::Index i) {
        const double score = weights.score(data.x.row(i));
        const int pred = score >= threshold ? 1 : -1;  // ties go to +1
        return pred == data.y[i] ? 1.0 : 0.0;
      },
      /*worst_is_min=*/true);
}

GroupReport evaluate_mse(const ModelWeights& weights, const Dataset& data,
                         const GroupUniverse& universe) {
  if (weights.w.size() != data.dim()) {
    throw ValidationError("weights dimension does not match data");
  }
  return evaluate_rowwise(
      data, universe,
      [&](Eigen::Index i) {
        const double err = weights.score(data.x.row(i)) - data.y[i];
        return err * err;
      },
      /*worst_is_min=*/false);
}

}  // namespace dispel
