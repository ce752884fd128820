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

#include <Eigen/Dense>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dispel {

// Feature storage: 32-bit rows (embedding-file precision); all Gram and
// solver arithmetic upgrades to 64-bit.
using MatrixXfRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A group is the (attribute, label) pair. Attribute 0 marks rows whose
// spurious attribute is absent.
struct GroupId {
  int a = 0;
  int y = 0;
  auto operator<=>(const GroupId&) const = default;
};

std::string to_string(GroupId g);

// Parses the "a|y" encoding, e.g. "1|-1". Throws ValidationError.
GroupId parse_group(std::string_view text);

struct Dataset {
  MatrixXfRM x;        // n rows by d columns
  Eigen::VectorXi y;   // labels, +1 or -1 (class ids in pipeline mode)
  Eigen::VectorXi a;   // attributes, +1, -1, or 0
  std::map<GroupId, std::vector<Eigen::Index>> group_index;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
  GroupId group(Eigen::Index i) const { return GroupId{a[i], y[i]}; }

  // Rebuilds group_index from (a, y); callers mutate rows only before this.
  void rebuild_index();
};

// Validates shape consistency and finiteness, then builds the index.
Dataset make_dataset(MatrixXfRM x, Eigen::VectorXi y, Eigen::VectorXi a);

// Returns the rows of `from` listed in `rows` in order, as a new dataset.
Dataset take_rows(const Dataset& from, const std::vector<Eigen::Index>& rows);

// Row-wise concatenation; dimensions must match.
Dataset concat(const Dataset& first, const Dataset& second);

enum class SpuriousMode { present, absent };

// Parameters of the Gaussian family P(mu): y uniform on {+1,-1}; a = y
// with probability mu else -y (absent mode forces a = 0); x1 ~ N(y, s1^2);
// x2 ~ N(a, s2^2); the d-2 tail coordinates ~ N(0, sxi^2 / (d-2)).
struct DistSpec {
  double mu = 0.5;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma_xi = 0.0;  // total tail noise std, spread across d-2 coords
  Eigen::Index d = 3;
  SpuriousMode spurious_mode = SpuriousMode::present;
};

// Throws ValidationError on out-of-range fields. d = 2 is allowed only
// with sigma_xi = 0 (there are no tail coordinates to carry the noise).
void validate(const DistSpec& spec);

}  // namespace dispel
