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
#include "dispel/mixer.hpp"

#include <string>

#include "dispel/errors.hpp"
#include "dispel/parallel.hpp"
#include "dispel/rng.hpp"

namespace dispel {

std::map<int, std::vector<Eigen::Index>> build_class_pools(
    const Dataset& d_bal) {
  if (d_bal.rows() == 0) {
    throw ValidationError("cannot build class pools from an empty dataset");
  }
  std::map<int, std::vector<Eigen::Index>> pools;
  for (Eigen::Index i = 0; i < d_bal.rows(); ++i) {
    pools[d_bal.y[i]].push_back(i);
  }
  return pools;
}

std::pair<Dataset, MixTrace> mix(const Dataset& d_ft, const Dataset& d_bal,
                                 const MixConfig& cfg) {
  if (d_bal.rows() == 0) {
    throw ValidationError("the balanced partner set is empty");
  }
  if (d_ft.dim() != d_bal.dim()) {
    throw ValidationError("dimension mismatch: fine-tune set has " +
                          std::to_string(d_ft.dim()) + ", balanced set has " +
                          std::to_string(d_bal.dim()));
  }
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0) ||
      !(cfg.s >= 0.0 && cfg.s <= 1.0)) {
    throw ValidationError("mix parameters need alpha and s in [0, 1]");
  }
  const auto pools = build_class_pools(d_bal);
  const Eigen::Index n = d_ft.rows();
  const Eigen::Index d = d_ft.dim();
  Dataset out;
  out.x.resize(n, d);
  out.y = d_ft.y;
  out.a = d_ft.a;
  MixTrace trace(static_cast<std::size_t>(n));
  constexpr Eigen::Index kRowsPerTask = 4096;
  const std::int64_t tasks = (n + kRowsPerTask - 1) / kRowsPerTask;
  parallel_tasks(tasks, [&](std::int64_t task) {
    const Eigen::Index begin = task * kRowsPerTask;
    const Eigen::Index end = std::min(n, begin + kRowsPerTask);
    for (Eigen::Index i = begin; i < end; ++i) {
      rng::Stream stream(
          rng::derive(cfg.seed, static_cast<std::uint64_t>(i)));
      auto& rec = trace[static_cast<std::size_t>(i)];
      if (!stream.next_bernoulli(cfg.alpha)) {
        out.x.row(i) = d_ft.x.row(i);
        continue;
      }
      rec.mixed = true;
      const auto pool = pools.find(d_ft.y[i]);
      Eigen::Index partner;
      if (pool == pools.end() || pool->second.empty()) {
        rec.cross_class = true;
        partner = static_cast<Eigen::Index>(
            stream.next_below(static_cast<std::uint64_t>(d_bal.rows())));
      } else {
        partner = pool->second[stream.next_below(pool->second.size())];
      }
      rec.partner = partner;
      if (cfg.s == 0.0) {
        out.x.row(i) = d_ft.x.row(i);
      } else if (cfg.s == 1.0) {
        out.x.row(i) = d_bal.x.row(partner);
      } else {
        for (Eigen::Index j = 0; j < d; ++j) {
          out.x(i, j) = static_cast<float>(
              (1.0 - cfg.s) * static_cast<double>(d_ft.x(i, j)) +
              cfg.s * static_cast<double>(d_bal.x(partner, j)));
        }
      }
    }
  });
  out.rebuild_index();
  return {std::move(out), std::move(trace)};
}

}  // namespace dispel
