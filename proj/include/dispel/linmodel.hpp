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
#include <optional>
#include <vector>

#include "dispel/dataset.hpp"

namespace dispel {

struct ModelWeights {
  Eigen::VectorXd w;
  std::optional<double> b;  // bias; absent for pure ridge fits

  double score(const Eigen::Ref<const Eigen::RowVectorXf>& x) const {
    return x.cast<double>().dot(w) + b.value_or(0.0);
  }
};

struct RidgeConfig {
  double lambda = 0.0;
};

// Exact minimizer of (1/n)||Xw - y||^2 + lambda ||w||^2 (no bias), via the
// d x d normal equations and a symmetric indefinite factorization. The Gram
// matrix accumulates in 64-bit regardless of feature storage.
ModelWeights ridge_fit(const Dataset& data, const RidgeConfig& cfg);

struct GdConfig {
  double step_size = 0.0;  // 0 picks 0.9 * 2 / L, L from 30 power iterations
  std::int64_t epochs = 0;
  ModelWeights init;
  std::int64_t record_every = 1;
};

struct TrajectoryPoint {
  std::int64_t epoch = 0;
  ModelWeights weights;
};

struct GdResult {
  ModelWeights final;
  std::vector<TrajectoryPoint> trajectory;  // epochs 0, k, 2k, ... and last
};

// Full-batch gradient descent on mean squared error, with bias iff the
// init carries one. Throws NumericalError when the loss exceeds 10x its
// initial value (divergence).
GdResult gd_finetune(const Dataset& data, const GdConfig& cfg);

// Max-norm gradient of the (optionally ridge-regularized) MSE objective at
// the given weights; used by convergence checks.
double mse_gradient_norm(const Dataset& data, const ModelWeights& weights,
                         double lambda = 0.0);

// Returns w . e_k for the basis vector e_k, k in 1..d, matching the e1/e2
// naming of the core and spurious coordinates: alignment(w, 2) is the
// spurious entry.
double alignment(const ModelWeights& weights, Eigen::Index coordinate);

struct SpanDecomposition {
  Eigen::Vector2d core_spur_component;
  double noise_component_norm = 0.0;
  double full_norm = 0.0;
};

// Splits w into the (core, spurious) plane and the tail.
SpanDecomposition decompose(const ModelWeights& weights);

// Largest eigenvalue estimate of a symmetric PSD matrix by power iteration.
double power_iteration_max_eig(const Eigen::MatrixXd& m, int iterations = 30);

}  // namespace dispel
