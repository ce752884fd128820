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
#include "dispel/linmodel.hpp"

#include <cmath>
#include <string>

#include "dispel/errors.hpp"

namespace dispel {
namespace {

constexpr Eigen::Index kGramBlock = 4096;

// Second-moment statistics in 64-bit, accumulated over fixed-size row
// blocks so results do not depend on thread count.
struct Moments {
  Eigen::MatrixXd gram;   // (1/n) X^T X
  Eigen::VectorXd xy;     // (1/n) X^T y
  Eigen::VectorXd xbar;   // (1/n) sum x
  double ybar = 0.0;
  double ysq = 0.0;       // (1/n) sum y^2
};

Moments compute_moments(const Dataset& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.dim();
  Moments m;
  m.gram = Eigen::MatrixXd::Zero(d, d);
  m.xy = Eigen::VectorXd::Zero(d);
  m.xbar = Eigen::VectorXd::Zero(d);
  for (Eigen::Index r = 0; r < n; r += kGramBlock) {
    const Eigen::Index rows = std::min(kGramBlock, n - r);
    const Eigen::MatrixXd blk = data.x.middleRows(r, rows).cast<double>();
    const Eigen::VectorXd yblk = data.y.segment(r, rows).cast<double>();
    m.gram.selfadjointView<Eigen::Lower>().rankUpdate(blk.transpose(), 1.0);
    m.xy.noalias() += blk.transpose() * yblk;
    m.xbar += blk.colwise().sum().transpose();
    m.ybar += yblk.sum();
    m.ysq += yblk.squaredNorm();
  }
  m.gram = m.gram.selfadjointView<Eigen::Lower>();
  m.gram /= static_cast<double>(n);
  m.xy /= static_cast<double>(n);
  m.xbar /= static_cast<double>(n);
  m.ybar /= static_cast<double>(n);
  m.ysq /= static_cast<double>(n);
  return m;
}

}  // namespace

ModelWeights ridge_fit(const Dataset& data, const RidgeConfig& cfg) {
  if (data.rows() == 0) throw ValidationError("ridge_fit needs data rows");
  if (cfg.lambda < 0.0) {
    throw ValidationError("ridge penalty must be nonnegative");
  }
  if (!data.x.allFinite()) {
    throw ValidationError("ridge_fit features contain NaN or Inf");
  }
  const Moments m = compute_moments(data);
  Eigen::MatrixXd system = m.gram;
  system.diagonal().array() += cfg.lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError(
        "Gram factorization failed: the regularized Gram matrix is "
        "singular");
  }
  const Eigen::VectorXd pivots = ldlt.vectorD();
  const double largest = pivots.cwiseAbs().maxCoeff();
  const double smallest = pivots.cwiseAbs().minCoeff();
  if (!(smallest > largest * 1e-13)) {
    throw NumericalError(
        "the regularized Gram matrix is numerically singular; smallest "
        "pivot " +
        std::to_string(pivots.minCoeff()));
  }
  ModelWeights out;
  out.w = ldlt.solve(m.xy);
  if (!out.w.allFinite()) {
    throw NumericalError("ridge solution is not finite");
  }
  return out;
}

double power_iteration_max_eig(const Eigen::MatrixXd& m, int iterations) {
  const Eigen::Index d = m.rows();
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    v[j] = 1.0 / static_cast<double>(1 + j);
  }
  v.normalize();
  double eig = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd mv = m * v;
    const double norm = mv.norm();
    if (norm == 0.0) return 0.0;
    eig = v.dot(mv);
    v = mv / norm;
  }
  return eig;
}

GdResult gd_finetune(const Dataset& data, const GdConfig& cfg) {
  if (data.rows() == 0) throw ValidationError("gd_finetune needs data rows");
  if (cfg.init.w.size() != data.dim()) {
    throw ValidationError("init has dimension " +
                          std::to_string(cfg.init.w.size()) +
                          ", data has " + std::to_string(data.dim()));
  }
  if (cfg.record_every < 1) {
    throw ValidationError("record_every must be at least 1");
  }
  const bool with_bias = cfg.init.b.has_value();
  const Moments m = compute_moments(data);
  const Eigen::Index d = data.dim();

  double step = cfg.step_size;
  if (step == 0.0) {
    // L is the loss Hessian's largest eigenvalue: 2x the augmented Gram.
    Eigen::MatrixXd hess(d + (with_bias ? 1 : 0), d + (with_bias ? 1 : 0));
    hess.topLeftCorner(d, d) = m.gram;
    if (with_bias) {
      hess.topRightCorner(d, 1) = m.xbar;
      hess.bottomLeftCorner(1, d) = m.xbar.transpose();
      hess(d, d) = 1.0;
    }
    const double max_eig = power_iteration_max_eig(hess, 30);
    if (max_eig <= 0.0) {
      throw NumericalError("cannot derive a step size from a zero Gram");
    }
    step = 0.9 / max_eig;
  } else if (step < 0.0) {
    throw ValidationError("step size must be nonnegative");
  }

  Eigen::VectorXd w = cfg.init.w;
  double b = cfg.init.b.value_or(0.0);
  const auto pack = [&](std::int64_t epoch) {
    ModelWeights snap;
    snap.w = w;
    if (with_bias) snap.b = b;
    return TrajectoryPoint{epoch, std::move(snap)};
  };
  const auto loss_of = [&](const Eigen::VectorXd& gw,
                           const Eigen::VectorXd& wv, double bv) {
    double value = wv.dot(gw) - 2.0 * m.xy.dot(wv) + m.ysq;
    if (with_bias) {
      value += 2.0 * bv * m.xbar.dot(wv) + bv * bv - 2.0 * bv * m.ybar;
    }
    return value;
  };

  GdResult out;
  out.trajectory.push_back(pack(0));
  Eigen::VectorXd gw = m.gram * w;
  const double initial_loss = loss_of(gw, w, b);
  for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Eigen::VectorXd grad = 2.0 * (gw - m.xy);
    double grad_b = 0.0;
    if (with_bias) {
      grad += (2.0 * b) * m.xbar;
      grad_b = 2.0 * (m.xbar.dot(w) + b - m.ybar);
    }
    w -= step * grad;
    b -= step * grad_b;
    gw.noalias() = m.gram * w;
    const double loss = loss_of(gw, w, b);
    if (!std::isfinite(loss) || loss > 10.0 * initial_loss + 1e-12) {
      throw NumericalError("gradient descent diverged at epoch " +
                           std::to_string(epoch) + " (loss " +
                           std::to_string(loss) + ")");
    }
    if (epoch % cfg.record_every == 0 || epoch == cfg.epochs) {
      out.trajectory.push_back(pack(epoch));
    }
  }
  out.final = out.trajectory.back().weights;
  return out;
}

double mse_gradient_norm(const Dataset& data, const ModelWeights& weights,
                         double lambda) {
  const Moments m = compute_moments(data);
  Eigen::VectorXd grad =
      2.0 * (m.gram * weights.w - m.xy) + 2.0 * lambda * weights.w;
  double norm = 0.0;
  if (weights.b.has_value()) {
    grad += (2.0 * *weights.b) * m.xbar;
    norm = std::abs(2.0 * (m.xbar.dot(weights.w) + *weights.b - m.ybar));
  }
  return std::max(norm, grad.cwiseAbs().maxCoeff());
}

double alignment(const ModelWeights& weights, Eigen::Index coordinate) {
  if (coordinate < 1 || coordinate > weights.w.size()) {
    throw ValidationError("alignment coordinate " +
                          std::to_string(coordinate) +
                          " outside 1.." + std::to_string(weights.w.size()));
  }
  return weights.w[coordinate - 1];
}

SpanDecomposition decompose(const ModelWeights& weights) {
  if (weights.w.size() < 3) {
    throw ValidationError("decompose needs dimension at least 3");
  }
  SpanDecomposition out;
  out.core_spur_component = weights.w.head<2>();
  out.noise_component_norm = weights.w.tail(weights.w.size() - 2).norm();
  out.full_norm = weights.w.norm();
  return out;
}

}  // namespace dispel
