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
#include <functional>

namespace dispel {

// Worker cap: DISPEL_THREADS when set and positive, else the logical core
// count. Always at least 1.
int worker_count();

// Runs fn(task) for task in [0, tasks) on up to worker_count() threads.
// Tasks are claimed from a shared counter; each task writes only its own
// output slot, so results are deterministic regardless of scheduling.
// The first exception thrown by any task is rethrown after all join.
void parallel_tasks(std::int64_t tasks,
                    const std::function<void(std::int64_t)>& fn);

}  // namespace dispel
