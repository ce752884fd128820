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
#include "dispel/dataset.hpp"

#include <charconv>
#include <utility>

#include "dispel/errors.hpp"

namespace dispel {

std::string to_string(GroupId g) {
  return std::to_string(g.a) + "|" + std::to_string(g.y);
}

GroupId parse_group(std::string_view text) {
  const auto bar = text.find('|');
  if (bar == std::string_view::npos) {
    throw ValidationError("group '" + std::string(text) +
                          "' is not in a|y form");
  }
  const auto parse_int = [&](std::string_view part) {
    int value = 0;
    const auto* begin = part.data();
    const auto* end = part.data() + part.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc() || result.ptr != end) {
      throw ValidationError("group '" + std::string(text) +
                            "' has a non-integer component");
    }
    return value;
  };
  return GroupId{parse_int(text.substr(0, bar)),
                 parse_int(text.substr(bar + 1))};
}

void Dataset::rebuild_index() {
  group_index.clear();
  for (Eigen::Index i = 0; i < rows(); ++i) {
    group_index[group(i)].push_back(i);
  }
}

Dataset make_dataset(MatrixXfRM x, Eigen::VectorXi y, Eigen::VectorXi a) {
  if (y.size() != x.rows() || a.size() != x.rows()) {
    throw ValidationError("dataset rows (" + std::to_string(x.rows()) +
                          ") do not match label/attribute lengths");
  }
  if (!x.allFinite()) {
    throw ValidationError("dataset features contain NaN or Inf");
  }
  Dataset out;
  out.x = std::move(x);
  out.y = std::move(y);
  out.a = std::move(a);
  out.rebuild_index();
  return out;
}

Dataset take_rows(const Dataset& from, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), from.dim());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.a.resize(static_cast<Eigen::Index>(rows.size()));
  Eigen::Index at = 0;
  for (const Eigen::Index r : rows) {
    if (r < 0 || r >= from.rows()) {
      throw ValidationError("row index " + std::to_string(r) +
                            " out of range");
    }
    out.x.row(at) = from.x.row(r);
    out.y[at] = from.y[r];
    out.a[at] = from.a[r];
    ++at;
  }
  out.rebuild_index();
  return out;
}

Dataset concat(const Dataset& first, const Dataset& second) {
  if (first.dim() != second.dim()) {
    throw ValidationError("cannot concatenate datasets of dimension " +
                          std::to_string(first.dim()) + " and " +
                          std::to_string(second.dim()));
  }
  Dataset out;
  out.x.resize(first.rows() + second.rows(), first.dim());
  out.x.topRows(first.rows()) = first.x;
  out.x.bottomRows(second.rows()) = second.x;
  out.y.resize(first.rows() + second.rows());
  out.y << first.y, second.y;
  out.a.resize(first.rows() + second.rows());
  out.a << first.a, second.a;
  out.rebuild_index();
  return out;
}

void validate(const DistSpec& spec) {
  if (!(spec.mu >= 0.0 && spec.mu <= 1.0)) {
    throw ValidationError("mu must lie in [0, 1], got " +
                          std::to_string(spec.mu));
  }
  if (spec.sigma1 < 0.0 || spec.sigma2 < 0.0 || spec.sigma_xi < 0.0) {
    throw ValidationError("noise standard deviations must be nonnegative");
  }
  if (spec.d < 2) {
    throw ValidationError("dimension must be at least 2, got " +
                          std::to_string(spec.d));
  }
  if (spec.d == 2 && spec.sigma_xi > 0.0) {
    throw ValidationError(
        "sigma_xi > 0 requires d >= 3 (no tail coordinates at d = 2)");
  }
}

}  // namespace dispel
