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
#include <utility>

#include "dispel/dataset.hpp"
#include "dispel/rng.hpp"

namespace dispel {

// Draws n i.i.d. rows from P(spec). Row i uses the sub-stream
// derive(seed, i), so generation is order independent and parallel safe.
// Zero-variance coordinates consume no draws and come out exact.
Dataset sample_dataset(const DistSpec& spec, Eigen::Index n,
                       std::uint64_t seed);

// m examples from P(1/2) with exact group balance: groups in ascending
// (a, y) order receive rows round robin, so counts are deterministic.
// spec.mu is ignored. m must divide evenly by the group count (4 when the
// spurious attribute is present, 2 when absent).
Dataset sample_balanced(const DistSpec& spec, Eigen::Index m,
                        std::uint64_t seed);

// m examples conditioned on a fixed (y, a) pair; features as in
// sample_dataset given that pair.
Dataset sample_single_group(const DistSpec& spec, int y, int a,
                            Eigen::Index m, std::uint64_t seed);

namespace detail {

// One row's (y, a) draw; consumes the same stream positions as
// sample_dataset so streaming consumers reproduce its rows bit for bit.
std::pair<int, int> sample_label_attr(const DistSpec& spec,
                                      rng::Stream& stream);

// Fills row[0..d) with the feature draw conditioned on (y, a).
void sample_features(const DistSpec& spec, int y, int a, rng::Stream& stream,
                     float* row);

}  // namespace detail

}  // namespace dispel
