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
#include "dispel/synthdata.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "dispel/errors.hpp"
#include "dispel/parallel.hpp"

namespace dispel {
namespace detail {

std::pair<int, int> sample_label_attr(const DistSpec& spec,
                                      rng::Stream& stream) {
  const int y = stream.next_uniform() < 0.5 ? 1 : -1;
  if (spec.spurious_mode == SpuriousMode::absent) return {y, 0};
  const int a = stream.next_bernoulli(spec.mu) ? y : -y;
  return {y, a};
}

void sample_features(const DistSpec& spec, int y, int a, rng::Stream& stream,
                     float* row) {
  row[0] = static_cast<float>(
      spec.sigma1 > 0.0 ? y + spec.sigma1 * stream.next_normal()
                        : static_cast<double>(y));
  const double mean2 =
      spec.spurious_mode == SpuriousMode::absent ? 0.0 : a;
  row[1] = static_cast<float>(
      spec.sigma2 > 0.0 ? mean2 + spec.sigma2 * stream.next_normal() : mean2);
  if (spec.d == 2) return;
  const double tail_std =
      spec.sigma_xi / std::sqrt(static_cast<double>(spec.d - 2));
  for (Eigen::Index j = 2; j < spec.d; ++j) {
    row[j] = static_cast<float>(
        tail_std > 0.0 ? tail_std * stream.next_normal() : 0.0);
  }
}

}  // namespace detail

namespace {

constexpr Eigen::Index kRowsPerTask = 4096;

// Fills rows [0, n) in parallel; pick(i) supplies (y, a) or draws it from
// the row stream when conditioned is false.
template <typename PickYA>
Dataset fill_rows(const DistSpec& spec, Eigen::Index n, std::uint64_t seed,
                  bool conditioned, PickYA pick) {
  Dataset out;
  out.x.resize(n, spec.d);
  out.y.resize(n);
  out.a.resize(n);
  const std::int64_t tasks = (n + kRowsPerTask - 1) / kRowsPerTask;
  parallel_tasks(tasks, [&](std::int64_t task) {
    const Eigen::Index begin = task * kRowsPerTask;
    const Eigen::Index end = std::min(n, begin + kRowsPerTask);
    for (Eigen::Index i = begin; i < end; ++i) {
      rng::Stream stream(rng::derive(seed, static_cast<std::uint64_t>(i)));
      int y, a;
      if (conditioned) {
        std::tie(y, a) = pick(i);
      } else {
        std::tie(y, a) = detail::sample_label_attr(spec, stream);
      }
      out.y[i] = y;
      out.a[i] = a;
      detail::sample_features(spec, y, a, stream, out.x.row(i).data());
    }
  });
  out.rebuild_index();
  return out;
}

}  // namespace

Dataset sample_dataset(const DistSpec& spec, Eigen::Index n,
                       std::uint64_t seed) {
  validate(spec);
  if (n <= 0) throw ValidationError("cannot sample an empty dataset (n = 0)");
  return fill_rows(spec, n, seed, false,
                   [](Eigen::Index) { return std::pair<int, int>{0, 0}; });
}

Dataset sample_balanced(const DistSpec& spec, Eigen::Index m,
                        std::uint64_t seed) {
  validate(spec);
  std::vector<GroupId> order;
  if (spec.spurious_mode == SpuriousMode::absent) {
    order = {{0, -1}, {0, 1}};
  } else {
    order = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  }
  const auto k = static_cast<Eigen::Index>(order.size());
  if (m < k || m % k != 0) {
    throw ValidationError("balanced sample size " + std::to_string(m) +
                          " must be a positive multiple of the group count " +
                          std::to_string(k));
  }
  return fill_rows(spec, m, seed, true, [&](Eigen::Index i) {
    const GroupId g = order[static_cast<std::size_t>(i % k)];
    return std::pair<int, int>{g.y, g.a};
  });
}

Dataset sample_single_group(const DistSpec& spec, int y, int a,
                            Eigen::Index m, std::uint64_t seed) {
  validate(spec);
  if (m <= 0) throw ValidationError("single-group sample needs m >= 1");
  if (y != 1 && y != -1) {
    throw ValidationError("label must be +1 or -1, got " + std::to_string(y));
  }
  const bool absent = spec.spurious_mode == SpuriousMode::absent;
  if (absent ? a != 0 : (a != 1 && a != -1)) {
    throw ValidationError("attribute " + std::to_string(a) +
                          " is invalid for this spurious mode");
  }
  return fill_rows(spec, m, seed, true,
                   [&](Eigen::Index) { return std::pair<int, int>{y, a}; });
}

}  // namespace dispel
