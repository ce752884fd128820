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
#include "dispel/theory.hpp"

#include <cmath>
#include <string>

#include "dispel/errors.hpp"
#include "dispel/mixer.hpp"
#include "dispel/parallel.hpp"
#include "dispel/rng.hpp"
#include "dispel/synthdata.hpp"

namespace dispel {
namespace {

DistSpec family_spec(double p, double sigma1, double r, Eigen::Index d,
                     Eigen::Index m) {
  DistSpec spec;
  spec.mu = p;
  spec.sigma1 = sigma1;
  spec.sigma2 = 0.0;
  spec.sigma_xi = std::sqrt(r * static_cast<double>(m));
  spec.d = d;
  return spec;
}

void validate_sim_sizes(Eigen::Index n, Eigen::Index d, Eigen::Index m,
                        int runs) {
  if (!(n >= d && d >= m && m >= 4)) {
    throw ValidationError("simulation sizes need n >= d >= m >= 4, got n=" +
                          std::to_string(n) + " d=" + std::to_string(d) +
                          " m=" + std::to_string(m));
  }
  if (runs < 1) throw ValidationError("simulation needs at least one run");
}

SimResult reduce_runs(const std::vector<double>& losses) {
  const auto runs = static_cast<double>(losses.size());
  double mean = 0.0;
  for (const double v : losses) mean += v;
  mean /= runs;
  if (losses.size() == 1) return {mean, 0.0};
  double varsum = 0.0;
  for (const double v : losses) varsum += (v - mean) * (v - mean);
  const double sample_var = varsum / (runs - 1.0);
  return {mean, std::sqrt(sample_var / runs)};
}

}  // namespace

void validate(const TheoryParams& params) {
  // p = 1/2 (no correlation) is admitted as a boundary case; every psi
  // term stays finite there and the gap formulas degenerate gracefully.
  if (!(params.p >= 0.5 && params.p <= 1.0)) {
    throw ValidationError("p must lie in [1/2, 1], got " +
                          std::to_string(params.p));
  }
  if (!(params.s >= 0.0 && params.s <= 1.0)) {
    throw ValidationError("s must lie in [0, 1]");
  }
  if (!(params.r > 0.0)) throw ValidationError("r must be positive");
  if (params.sigma1 < 0.0) {
    throw ValidationError("sigma1 must be nonnegative");
  }
  if (!(params.lambda > 0.0)) {
    throw ValidationError("lambda must be positive (q is undefined at 0)");
  }
}

PsiValues psi(const TheoryParams& params) {
  validate(params);
  const double s = params.s;
  const double u = 1.0 - s;
  const double corr = 2.0 * params.p - 1.0;
  const double sig = 1.0 + params.sigma1 * params.sigma1;
  PsiValues out;
  out.q = params.lambda / (s * s * params.r + params.lambda);
  const double leak = 1.0 - out.q;
  out.psi1 = u * u * sig + 2.0 * s * u * out.q + s * s * out.q * sig -
             u * u * leak + params.lambda;
  out.psi2 = u * u * corr + s * u * out.q * corr - u * u * leak * corr;
  out.psi3 = u * u + s * s * out.q - u * u * leak * corr * corr +
             params.lambda;
  return out;
}

Eigen::Vector2d theory_head_weights(const TheoryParams& params) {
  const PsiValues v = psi(params);
  const double corr = 2.0 * params.p - 1.0;
  const double u = 1.0 - params.s;
  const double delta = v.psi1 * v.psi3 - v.psi2 * v.psi2;
  if (delta == 0.0) {
    throw NumericalError("psi1 psi3 - psi2^2 vanished (psi1=" +
                         std::to_string(v.psi1) + ", psi2=" +
                         std::to_string(v.psi2) + ", psi3=" +
                         std::to_string(v.psi3) + ")");
  }
  const double scale = v.q / delta;
  return {scale * (v.psi3 - v.psi2 * u * corr),
          scale * (-v.psi2 + v.psi1 * u * corr)};
}

double eval_wg_loss(const TheoryParams& params, Variant variant) {
  const PsiValues v = psi(params);
  const double corr = 2.0 * params.p - 1.0;
  const double u = 1.0 - params.s;
  const double delta = v.psi1 * v.psi3 - v.psi2 * v.psi2;
  if (delta == 0.0) {
    throw NumericalError("psi1 psi3 - psi2^2 vanished (psi1=" +
                         std::to_string(v.psi1) + ", psi2=" +
                         std::to_string(v.psi2) + ", psi3=" +
                         std::to_string(v.psi3) + ")");
  }
  const double scale = v.q / delta;
  const double gap =
      scale * (v.psi3 + v.psi2 - (v.psi1 + v.psi2) * u * corr) - 1.0;
  const double c1 = v.psi3 - v.psi2 * u * corr;
  const double w1 =
      variant == Variant::derivation_consistent ? scale * c1 : c1;
  return gap * gap + params.sigma1 * params.sigma1 * w1 * w1;
}

double minority_population_loss(const ModelWeights& weights, double sigma1,
                                double sigma_xi_sq) {
  const Eigen::Index d = weights.w.size();
  if (d < 2) throw ValidationError("population loss needs dimension >= 2");
  const double gap = weights.w[0] - weights.w[1] - 1.0;
  double loss = gap * gap + sigma1 * sigma1 * weights.w[0] * weights.w[0];
  if (d > 2) {
    loss += sigma_xi_sq / static_cast<double>(d - 2) *
            weights.w.tail(d - 2).squaredNorm();
  }
  return loss;
}

SimResult simulate_wg_loss(double p, double s, double sigma1, double lambda,
                           double r, Eigen::Index n, Eigen::Index d,
                           Eigen::Index m, int runs, std::uint64_t seed) {
  validate_sim_sizes(n, d, m, runs);
  const DistSpec spec = family_spec(p, sigma1, r, d, m);
  std::vector<double> losses(static_cast<std::size_t>(runs), 0.0);
  parallel_tasks(runs, [&](std::int64_t run) {
    const auto k = static_cast<std::uint64_t>(run);
    const Dataset d_ft =
        sample_dataset(spec, n, rng::derive(seed, k, 0));
    const Dataset d_bal =
        sample_balanced(spec, m, rng::derive(seed, k, 1));
    MixConfig cfg;
    cfg.alpha = 1.0;
    cfg.s = s;
    cfg.seed = rng::derive(seed, k, 2);
    const auto [d_mixed, trace] = mix(d_ft, d_bal, cfg);
    const ModelWeights w = ridge_fit(d_mixed, RidgeConfig{lambda});
    losses[static_cast<std::size_t>(run)] =
        minority_population_loss(w, sigma1, r * static_cast<double>(m));
  });
  return reduce_runs(losses);
}

std::vector<SimResult> simulate_wg_loss_grid(
    double p, const std::vector<double>& s_values, double sigma1,
    double lambda, double r, Eigen::Index n, Eigen::Index d, Eigen::Index m,
    int runs, std::uint64_t seed) {
  validate_sim_sizes(n, d, m, runs);
  if (s_values.empty()) throw ValidationError("empty s grid");
  const DistSpec spec = family_spec(p, sigma1, r, d, m);
  const auto cells = static_cast<std::size_t>(s_values.size());
  std::vector<std::vector<double>> losses(
      cells, std::vector<double>(static_cast<std::size_t>(runs), 0.0));

  parallel_tasks(runs, [&](std::int64_t run) {
    const auto k = static_cast<std::uint64_t>(run);
    const std::uint64_t seed_ft = rng::derive(seed, k, 0);
    const std::uint64_t seed_mix = rng::derive(seed, k, 2);
    const Dataset d_bal =
        sample_balanced(spec, m, rng::derive(seed, k, 1));
    const auto pools = build_class_pools(d_bal);

    // One streaming pass: raw Gram and cross moments of the fine-tune
    // sample, bucketed by the partner each row would mix with.
    Eigen::MatrixXd gram_xx = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd xy = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd bucket_x = Eigen::MatrixXd::Zero(d, m);  // sum of x
    Eigen::VectorXd bucket_y = Eigen::VectorXd::Zero(m);     // sum of y
    Eigen::VectorXd bucket_n = Eigen::VectorXd::Zero(m);     // row counts
    constexpr Eigen::Index kBlock = 1024;
    MatrixXfRM block(kBlock, d);
    Eigen::VectorXd yblock(kBlock);
    for (Eigen::Index base = 0; base < n; base += kBlock) {
      const Eigen::Index rows = std::min(kBlock, n - base);
      for (Eigen::Index i = 0; i < rows; ++i) {
        rng::Stream row_stream(
            rng::derive(seed_ft, static_cast<std::uint64_t>(base + i)));
        const auto [y, a] = detail::sample_label_attr(spec, row_stream);
        detail::sample_features(spec, y, a, row_stream, block.row(i).data());
        yblock[i] = y;

        rng::Stream mix_stream(
            rng::derive(seed_mix, static_cast<std::uint64_t>(base + i)));
        mix_stream.next_bernoulli(1.0);  // alpha = 1; keep stream aligned
        const auto& pool = pools.at(y);
        const Eigen::Index partner =
            pool[mix_stream.next_below(pool.size())];
        bucket_x.col(partner) += block.row(i).cast<double>();
        bucket_y[partner] += yblock[i];
        bucket_n[partner] += 1.0;
      }
      const Eigen::MatrixXd blk = block.topRows(rows).cast<double>();
      gram_xx.selfadjointView<Eigen::Lower>().rankUpdate(blk.transpose(),
                                                         1.0);
      xy.noalias() += blk.transpose() * yblock.head(rows);
    }
    gram_xx = gram_xx.selfadjointView<Eigen::Lower>();

    const Eigen::MatrixXd bal = d_bal.x.cast<double>();  // m x d
    const Eigen::MatrixXd cross = bucket_x * bal;        // X^T P, d x d
    const Eigen::MatrixXd gram_pp =
        bal.transpose() * bucket_n.asDiagonal() * bal;
    const Eigen::VectorXd py = bal.transpose() * bucket_y;

    for (std::size_t cell = 0; cell < cells; ++cell) {
      const double s = s_values[cell];
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ValidationError("s must lie in [0, 1]");
      }
      const double u = 1.0 - s;
      Eigen::MatrixXd system =
          (u * u) * gram_xx + (s * u) * (cross + cross.transpose()) +
          (s * s) * gram_pp;
      system /= static_cast<double>(n);
      system.diagonal().array() += lambda;
      const Eigen::VectorXd rhs = (u * xy + s * py) / static_cast<double>(n);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
      if (ldlt.info() != Eigen::Success) {
        throw NumericalError("factorization failed in the s-grid sweep");
      }
      ModelWeights w;
      w.w = ldlt.solve(rhs);
      losses[cell][static_cast<std::size_t>(run)] =
          minority_population_loss(w, sigma1, r * static_cast<double>(m));
    }
  });

  std::vector<SimResult> out(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    out[cell] = reduce_runs(losses[cell]);
  }
  return out;
}

}  // namespace dispel
