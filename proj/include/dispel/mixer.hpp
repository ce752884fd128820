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

namespace dispel {

struct MixConfig {
  double alpha = 1.0;  // per-row mix probability
  double s = 0.0;      // mix weight toward the balanced partner
  std::uint64_t seed = 0;
};

struct MixTraceRow {
  bool mixed = false;
  Eigen::Index partner = -1;  // row index into d_bal; -1 when unmixed
  bool cross_class = false;   // partner drawn from the whole pool
};

using MixTrace = std::vector<MixTraceRow>;

// Candidate partners per class: label -> row indices of d_bal. Labels
// absent from d_bal are simply missing from the map.
std::map<int, std::vector<Eigen::Index>> build_class_pools(
    const Dataset& d_bal);

// Per row of d_ft, independently: with probability alpha draw a partner
// uniformly from the row's class pool (from all of d_bal when that pool is
// empty, flagged cross_class) and replace features with (1-s) x + s x'.
// Labels and attributes pass through untouched. Row i uses sub-stream
// derive(seed, i): one Bernoulli draw, then one partner draw when mixed.
// s = 0 copies the source row and s = 1 copies the partner row, bit for
// bit; interior s blends in 64-bit and rounds once per coordinate.
std::pair<Dataset, MixTrace> mix(const Dataset& d_ft, const Dataset& d_bal,
                                 const MixConfig& cfg);

}  // namespace dispel
