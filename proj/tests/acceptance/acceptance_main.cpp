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

// Acceptance gate: nine end-to-end checks over the whole library, each
// reported as a single [PASS]/[FAIL] line with its measurements. The exit
// code is the number of failed checks. Passing criterion numbers as
// arguments runs that subset (a development convenience; the default run
// covers all nine).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "dispel/dataset.hpp"
#include "dispel/errors.hpp"
#include "dispel/groupeval.hpp"
#include "dispel/linmodel.hpp"
#include "dispel/mixer.hpp"
#include "dispel/pipeline.hpp"
#include "dispel/rng.hpp"
#include "dispel/synthdata.hpp"
#include "dispel/theory.hpp"
#include "oracles.hpp"

namespace {

using dispel::rng::derive;

constexpr std::uint64_t kSeed = 2026;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];  // callers pass odd-length vectors
}

void note(const char* fmt, ...) {
  std::va_list args;
  va_start(args, fmt);
  std::printf("  ");
  std::vprintf(fmt, args);
  std::printf("\n");
  std::fflush(stdout);
  va_end(args);
}

// 1. The closed-form worst-group loss tracks a 20-run Monte Carlo estimate
// at desk scale (n = 24000, d = 1600, m = 64) for p in {0.7, 0.9} over an
// 11-point s-grid, within max(0.05 absolute, 10% relative) everywhere, in
// under ten minutes. Both closed-form variants are measured; the logged
// deviations are the evidence for shipping derivation_consistent as the
// default.
bool criterion1() {
  const double sigma1 = 0.5;
  const double r = 4.0;
  const double lambda = 0.25;
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);

  const auto start = std::chrono::steady_clock::now();
  double max_dev[2] = {0.0, 0.0};    // as_printed, derivation_consistent
  double max_ratio[2] = {0.0, 0.0};  // deviation over allowance
  for (int pi = 0; pi < 2; ++pi) {
    const double p = pi == 0 ? 0.7 : 0.9;
    const auto sims = dispel::simulate_wg_loss_grid(
        p, grid, sigma1, lambda, r, 24000, 1600, 64, 20, derive(kSeed, 1, pi));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const dispel::TheoryParams params{p, grid[k], r, sigma1, lambda};
      const double allow = std::max(0.05, 0.10 * std::abs(sims[k].mean));
      const dispel::Variant variants[2] = {
          dispel::Variant::as_printed, dispel::Variant::derivation_consistent};
      for (int v = 0; v < 2; ++v) {
        const double dev =
            std::abs(dispel::eval_wg_loss(params, variants[v]) - sims[k].mean);
        max_dev[v] = std::max(max_dev[v], dev);
        max_ratio[v] = std::max(max_ratio[v], dev / allow);
      }
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  note("as_printed variant: max deviation %.4f (%.2fx the allowance)",
       max_dev[0], max_ratio[0]);
  note("derivation_consistent variant: max deviation %.4f (%.2fx the "
       "allowance)",
       max_dev[1], max_ratio[1]);
  note("selected default derivation_consistent %s at every grid point; "
       "%.0f s elapsed",
       max_ratio[1] <= 1.0 ? "matches" : "MISSES", elapsed);
  return max_ratio[1] <= 1.0 && elapsed <= 600.0;
}

// 2. Over a 0.02-spaced s-grid the closed form is U-shaped: an interior
// minimum strictly below both endpoints, with the argmin nondecreasing as
// the spurious correlation p grows.
bool criterion2() {
  const std::vector<double> ps = {0.7, 0.8, 0.9, 0.95};
  bool ok = true;
  double prev_best = -1.0;
  for (const double p : ps) {
    std::vector<double> losses;
    for (int i = 0; i <= 50; ++i) {
      const dispel::TheoryParams params{p, 0.02 * i, 4.0, 0.5, 0.25};
      losses.push_back(dispel::eval_wg_loss(params));
    }
    const auto it = std::min_element(losses.begin(), losses.end());
    const auto best = static_cast<int>(it - losses.begin());
    const double s_best = 0.02 * best;
    const bool interior = best > 0 && best < 50;
    const bool dips = *it < std::min(losses.front(), losses.back());
    const bool monotone = s_best >= prev_best;
    note("p=%.2f: argmin s*=%.2f, L(s*)=%.4f, L(0)=%.4f, L(1)=%.4f%s", p,
         s_best, *it, losses.front(), losses.back(),
         interior && dips && monotone ? "" : "  <- violates the shape");
    ok = ok && interior && dips && monotone;
    prev_best = s_best;
  }
  return ok;
}

// 3. Fine-tuning on data whose spurious coordinate is identically zero
// leaves the head's spurious weight bit-identical to its initial value for
// a thousand full-batch epochs, bias on or off. Zero tolerance.
bool criterion3() {
  dispel::DistSpec spec;
  spec.sigma1 = 0.5;
  spec.sigma2 = 0.0;
  spec.sigma_xi = 1.0;
  spec.d = 16;
  spec.spurious_mode = dispel::SpuriousMode::absent;
  const auto data = dispel::sample_dataset(spec, 2000, derive(kSeed, 3, 0));
  bool ok = true;
  for (const bool with_bias : {false, true}) {
    dispel::GdConfig cfg;
    cfg.epochs = 1000;
    cfg.record_every = 1;
    cfg.init.w = Eigen::VectorXd::Ones(spec.d);
    if (with_bias) cfg.init.b = 0.0;
    const auto result = dispel::gd_finetune(data, cfg);
    for (const auto& point : result.trajectory) {
      if (dispel::alignment(point.weights, 2) != 1.0) {
        note("bias=%d: epoch %lld drifted to %.17g", with_bias ? 1 : 0,
             static_cast<long long>(point.epoch),
             dispel::alignment(point.weights, 2));
        ok = false;
        break;
      }
    }
  }
  if (ok) {
    note("spurious weight stayed exactly 1.0 across 1000 epochs, with and "
         "without a bias");
  }
  return ok;
}

// 4. With balanced partners that carry the spurious feature at high
// variance, full mixing at s = 0.3 drives gradient descent's spurious
// weight from 1 to |w2| <= 1e-3 at a converged gradient (norm <= 1e-9),
// in seconds despite nine million rows.
bool criterion4() {
  const auto start = std::chrono::steady_clock::now();
  dispel::DistSpec ft;
  ft.sigma1 = 0.5;
  ft.sigma2 = 0.0;
  ft.sigma_xi = 0.0;
  ft.d = 2;
  ft.spurious_mode = dispel::SpuriousMode::absent;
  const auto d_ft = dispel::sample_dataset(ft, 9000000, derive(kSeed, 4, 0));

  dispel::DistSpec bal;
  bal.sigma1 = 0.0;
  bal.sigma2 = 2.0;
  bal.sigma_xi = 0.0;
  bal.d = 2;
  const auto d_bal =
      dispel::sample_single_group(bal, 1, 1, 256, derive(kSeed, 4, 1));

  dispel::MixConfig mix_cfg;
  mix_cfg.alpha = 1.0;
  mix_cfg.s = 0.3;
  mix_cfg.seed = derive(kSeed, 4, 2);
  const auto mixed = dispel::mix(d_ft, d_bal, mix_cfg).first;

  dispel::GdConfig cfg;
  cfg.epochs = 4000;
  cfg.record_every = 4000;
  cfg.init.w = Eigen::Vector2d::Ones();
  cfg.init.b = 0.0;
  const auto result = dispel::gd_finetune(mixed, cfg);
  const double w2 = std::abs(dispel::alignment(result.final, 2));
  const double grad = dispel::mse_gradient_norm(mixed, result.final);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  note("|w2| = %.3e (need <= 1e-3), gradient norm = %.3e (need <= 1e-9), "
       "%.1f s",
       w2, grad, elapsed);
  return w2 <= 1e-3 && grad <= 1e-9;
}

// 5. The ridge solver agrees with an independent plain-loop gradient
// descent oracle on fifty random instances (d <= 50, n <= 500, lambda in
// {0.01, 0.1, 1}): weights within 1e-6 in max norm and a stationary
// gradient at the returned solution.
bool criterion5() {
  const double lambdas[3] = {0.01, 0.1, 1.0};
  double worst_gap = 0.0;
  double worst_grad = 0.0;
  bool ok = true;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index d = 3 + (k % 48);
    const Eigen::Index n =
        std::min<Eigen::Index>(500, d + 10 + 9 * ((k * 7) % 49));
    const double lambda = lambdas[k % 3];
    dispel::DistSpec spec;
    spec.mu = 0.6 + 0.05 * (k % 5);
    spec.sigma1 = 0.3 + 0.1 * (k % 4);
    spec.sigma2 = 0.5;
    spec.sigma_xi = 1.5;
    spec.d = d;
    const auto data = dispel::sample_dataset(spec, n, derive(kSeed, 5, k));
    const auto fit = dispel::ridge_fit(data, {lambda});

    std::vector<std::vector<double>> x(static_cast<std::size_t>(n),
                                       std::vector<double>(
                                           static_cast<std::size_t>(d)));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = data.y[i];
      for (Eigen::Index j = 0; j < d; ++j) {
        x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            static_cast<double>(data.x(i, j));
      }
    }
    const auto reference = oracle::gd_ridge(x, y, lambda, 1e-10);
    double gap = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      gap = std::max(gap, std::abs(fit.w[j] -
                                   reference[static_cast<std::size_t>(j)]));
    }
    const double scale = static_cast<double>(data.x.cwiseAbs().maxCoeff());
    const double grad = dispel::mse_gradient_norm(data, fit, lambda);
    worst_gap = std::max(worst_gap, gap);
    worst_grad = std::max(worst_grad, grad / (1.0 + scale));
    ok = ok && gap <= 1e-6 && grad <= 1e-8 * (1.0 + scale);
  }
  note("max weight gap vs oracle %.2e (need <= 1e-6); max scaled gradient "
       "%.2e (need <= 1e-8)",
       worst_gap, worst_grad);
  return ok;
}

// 6. Mixing identities and statistics: alpha = 0 and (alpha = 1, s = 0)
// reproduce the source features bit for bit; (alpha = 1, s = 1) copies
// same-class partner rows bit for bit; the realized mix rate at alpha =
// 0.3 sits within five standard errors of 0.3; and partner choice within
// each class pool passes a chi-squared uniformity test.
bool criterion6() {
  dispel::DistSpec spec;
  spec.mu = 0.8;
  spec.sigma1 = 0.6;
  spec.sigma2 = 0.4;
  spec.sigma_xi = 1.2;
  spec.d = 8;
  const auto d_ft = dispel::sample_dataset(spec, 500, derive(kSeed, 6, 0));
  const auto d_bal = dispel::sample_balanced(spec, 40, derive(kSeed, 6, 1));
  bool ok = true;

  dispel::MixConfig cfg;
  cfg.alpha = 0.0;
  cfg.s = 0.7;
  cfg.seed = derive(kSeed, 6, 2);
  const auto off = dispel::mix(d_ft, d_bal, cfg).first;
  const bool off_identical = (off.x.array() == d_ft.x.array()).all();
  ok = ok && off_identical;

  cfg.alpha = 1.0;
  cfg.s = 0.0;
  cfg.seed = derive(kSeed, 6, 3);
  const auto zero_weight = dispel::mix(d_ft, d_bal, cfg).first;
  const bool zero_identical = (zero_weight.x.array() == d_ft.x.array()).all();
  ok = ok && zero_identical;
  note("alpha=0 identity: %s; (alpha=1, s=0) identity: %s",
       off_identical ? "bit-exact" : "DIFFERS",
       zero_identical ? "bit-exact" : "DIFFERS");

  cfg.s = 1.0;
  cfg.seed = derive(kSeed, 6, 4);
  const auto [copies, trace] = dispel::mix(d_ft, d_bal, cfg);
  bool copy_ok = true;
  for (Eigen::Index i = 0; i < copies.rows(); ++i) {
    const auto& row = trace[static_cast<std::size_t>(i)];
    copy_ok = copy_ok && row.mixed && !row.cross_class &&
              d_bal.y[row.partner] == d_ft.y[i] &&
              (copies.x.row(i).array() == d_bal.x.row(row.partner).array())
                  .all();
  }
  note("(alpha=1, s=1): rows copy same-class partners bit for bit: %s",
       copy_ok ? "yes" : "NO");
  ok = ok && copy_ok;

  const auto wide = dispel::sample_dataset(spec, 10000, derive(kSeed, 6, 5));
  cfg.alpha = 0.3;
  cfg.s = 0.5;
  cfg.seed = derive(kSeed, 6, 6);
  const auto rate_trace = dispel::mix(wide, d_bal, cfg).second;
  Eigen::Index mixed_rows = 0;
  for (const auto& row : rate_trace) mixed_rows += row.mixed ? 1 : 0;
  const double frac = static_cast<double>(mixed_rows) / 10000.0;
  const bool rate_ok = std::abs(frac - 0.3) < 0.023;  // five binomial sigmas
  note("realized mix rate %.4f at alpha=0.3 (need within 0.023)", frac);
  ok = ok && rate_ok;

  const auto pool16 = dispel::sample_balanced(spec, 16, derive(kSeed, 6, 7));
  const auto many = dispel::sample_dataset(spec, 20000, derive(kSeed, 6, 8));
  cfg.alpha = 1.0;
  cfg.s = 0.5;
  cfg.seed = derive(kSeed, 6, 9);
  const auto uniform_trace = dispel::mix(many, pool16, cfg).second;
  const auto pools = dispel::build_class_pools(pool16);
  for (const auto& [label, members] : pools) {
    std::vector<Eigen::Index> counts(members.size(), 0);
    Eigen::Index total = 0;
    for (Eigen::Index i = 0; i < many.rows(); ++i) {
      if (many.y[i] != label) continue;
      const auto partner = uniform_trace[static_cast<std::size_t>(i)].partner;
      const auto slot = std::find(members.begin(), members.end(), partner);
      counts[static_cast<std::size_t>(slot - members.begin())] += 1;
      total += 1;
    }
    const double expected =
        static_cast<double>(total) / static_cast<double>(members.size());
    double chi2 = 0.0;
    for (const auto c : counts) {
      const double diff = static_cast<double>(c) - expected;
      chi2 += diff * diff / expected;
    }
    // 24.3219 is the 0.999 quantile of chi-squared with 7 degrees of
    // freedom (8 partner slots per class).
    const bool uniform_ok = chi2 < 24.3219;
    note("partner uniformity, class %+d: chi2 = %.2f over %d slots (need "
         "< 24.32)",
         label, chi2, static_cast<int>(members.size()));
    ok = ok && uniform_ok;
  }
  return ok;
}

// Shared benchmark family for criteria 7 and 8: a 64-dimensional planted
// embedding whose core coordinate is noisy enough that a head trained on
// correlated data leans on the tight spurious coordinate. The tail noise
// level is the tuning knob for the criterion-7 precondition; 160 puts the
// correlated-data head at 41.8% median worst-group accuracy.
dispel::DistSpec benchmark_spec() {
  dispel::DistSpec spec;
  spec.mu = 0.95;
  spec.sigma1 = 0.90;
  spec.sigma2 = 0.15;
  spec.sigma_xi = std::sqrt(160.0);
  spec.d = 64;
  return spec;
}

dispel::SweepGrid benchmark_grid() {
  return {{0.5, 1.0}, {0.3, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0}};
}

// Equal-count sample across the four (y, a) groups of the present-mode
// family.
dispel::Dataset stratified(const dispel::DistSpec& spec,
                           Eigen::Index per_group, std::uint64_t seed) {
  dispel::Dataset out;
  int slot = 0;
  for (const int y : {-1, 1}) {
    for (const int a : {-1, 1}) {
      auto part =
          dispel::sample_single_group(spec, y, a, per_group, derive(seed, slot));
      out = slot == 0 ? std::move(part) : dispel::concat(out, part);
      ++slot;
    }
  }
  return out;
}

struct ArmScores {
  double ft_only = 0.0;
  double bal_only = 0.0;
  double swept = 0.0;
};

// One benchmark seed: retrain on each source alone and on the swept mix,
// then score worst-group accuracy on the test split.
ArmScores run_arms(const dispel::Dataset& d_ft, const dispel::Dataset& d_bal,
                   const dispel::Dataset& val, const dispel::Dataset& test,
                   std::uint64_t retrain_seed) {
  dispel::RetrainConfig cfg;
  cfg.seed = retrain_seed;
  const auto uni = dispel::universe_of(val);
  const auto test_uni = dispel::universe_of(test);
  ArmScores out;
  const auto w_ft = dispel::retrain_head(d_ft, val, cfg, uni);
  out.ft_only = dispel::evaluate_accuracy(w_ft, test, test_uni).worst_value;
  const auto w_bal = dispel::retrain_head(d_bal, val, cfg, uni);
  out.bal_only = dispel::evaluate_accuracy(w_bal, test, test_uni).worst_value;
  const auto swept =
      dispel::sweep(d_ft, d_bal, val, benchmark_grid(), cfg, uni);
  out.swept =
      dispel::evaluate_accuracy(swept.best_weights, test, test_uni).worst_value;
  return out;
}

// 7. On the planted-embedding benchmark (tail noise tuned so the
// correlated-data head lands between 40% and 70% worst-group accuracy),
// the swept mix beats the correlated-data head by at least ten accuracy
// points and at least matches the ten-per-group balanced head, as medians
// over five seeds.
bool criterion7() {
  const auto spec = benchmark_spec();
  std::vector<double> ft_scores, gap_ft, gap_bal;
  for (int run = 1; run <= 5; ++run) {
    const std::uint64_t base = derive(kSeed, 7, run);
    const auto d_ft = dispel::sample_dataset(spec, 2000, derive(base, 0));
    const auto pool = dispel::sample_dataset(spec, 2000, derive(base, 1));
    const auto d_bal = dispel::build_balanced_split(pool, 10, derive(base, 2));
    const auto val = stratified(spec, 800, derive(base, 3));
    const auto test = stratified(spec, 2000, derive(base, 4));
    const auto scores = run_arms(d_ft, d_bal, val, test, derive(base, 5));
    ft_scores.push_back(scores.ft_only);
    gap_ft.push_back(scores.swept - scores.ft_only);
    gap_bal.push_back(scores.swept - scores.bal_only);
    note("seed %d: ft-only %.3f, bal-only %.3f, swept %.3f", run,
         scores.ft_only, scores.bal_only, scores.swept);
  }
  const double ft_med = median(ft_scores);
  const double med_ft_gap = median(gap_ft);
  const double med_bal_gap = median(gap_bal);
  note("median ft-only %.3f (need 0.40..0.70); median gain over ft-only "
       "%+.1f points (need >= +10); over bal-only %+.1f points (need >= 0)",
       ft_med, 100.0 * med_ft_gap, 100.0 * med_bal_gap);
  return ft_med >= 0.40 && ft_med <= 0.70 && med_ft_gap >= 0.10 &&
         med_bal_gap >= 0.0;
}

// 8. Same benchmark with the (y = -1, a = +1) group entirely absent from
// the fine-tuning data, while the balanced set holds a single (y = +1,
// a = +1) group, so its negative class pool is empty and cross-class
// mixing is the only mechanism that shows the head the spurious feature
// with negative labels. The swept mix must beat both single-source heads
// by at least fifteen points, median over five seeds; the missing group
// never appears in training or validation, only in the test split.
bool criterion8() {
  const auto spec = benchmark_spec();
  const auto group = [&](int y, int a, Eigen::Index count,
                         std::uint64_t seed) {
    return dispel::sample_single_group(spec, y, a, count, seed);
  };
  std::vector<double> gap_ft, gap_bal;
  for (int run = 1; run <= 5; ++run) {
    const std::uint64_t base = derive(kSeed, 8, run);
    const auto d_ft = dispel::concat(
        dispel::concat(group(1, 1, 950, derive(base, 0)),
                       group(1, -1, 50, derive(base, 1))),
        group(-1, -1, 1000, derive(base, 2)));
    const auto d_bal = group(1, 1, 40, derive(base, 3));
    const auto val = dispel::concat(
        dispel::concat(group(1, 1, 800, derive(base, 4)),
                       group(1, -1, 800, derive(base, 5))),
        group(-1, -1, 800, derive(base, 6)));
    const auto test = dispel::concat(
        dispel::concat(group(1, 1, 2000, derive(base, 7)),
                       group(1, -1, 2000, derive(base, 8))),
        dispel::concat(group(-1, -1, 2000, derive(base, 9)),
                       group(-1, 1, 2000, derive(base, 10))));
    const auto scores = run_arms(d_ft, d_bal, val, test, derive(base, 11));
    gap_ft.push_back(scores.swept - scores.ft_only);
    gap_bal.push_back(scores.swept - scores.bal_only);
    note("seed %d: ft-only %.3f, bal-only %.3f, swept %.3f", run,
         scores.ft_only, scores.bal_only, scores.swept);
  }
  const double med_ft_gap = median(gap_ft);
  const double med_bal_gap = median(gap_bal);
  note("median gain over ft-only %+.1f points, over bal-only %+.1f points "
       "(both need >= +15)",
       100.0 * med_ft_gap, 100.0 * med_bal_gap);
  return med_ft_gap >= 0.15 && med_bal_gap >= 0.15;
}

// 9. The empirical label-feature correlation (1/n) X^T y concentrates at
// its population value (1, 2p-1, 0, ...): the max-norm deviation stays
// inside a five-sigma band on at least 99 of 100 seeds at n = 1e5, d =
// 100.
bool criterion9() {
  dispel::DistSpec spec;
  spec.mu = 0.9;
  spec.sigma1 = 0.5;
  spec.sigma2 = 0.0;
  spec.sigma_xi = 2.0;
  spec.d = 100;
  const Eigen::Index n = 100000;
  Eigen::VectorXd target = Eigen::VectorXd::Zero(spec.d);
  target[0] = 1.0;
  target[1] = 2.0 * spec.mu - 1.0;
  // Five sigma with the per-coordinate deviation scale bounded by 1 (the
  // largest of sigma1, the x2 y spread, and the tail scale, floored at 1).
  const double bound = 5.0 / std::sqrt(static_cast<double>(n));
  int hits = 0;
  double worst = 0.0;
  for (int seed = 1; seed <= 100; ++seed) {
    const auto data = dispel::sample_dataset(spec, n, derive(kSeed, 9, seed));
    const Eigen::VectorXd mean =
        (data.x.cast<double>().transpose() * data.y.cast<double>()) /
        static_cast<double>(n);
    const double dev = (mean - target).cwiseAbs().maxCoeff();
    worst = std::max(worst, dev);
    hits += dev <= bound ? 1 : 0;
  }
  note("%d/100 seeds inside the %.4f band (need >= 99); worst deviation "
       "%.4f",
       hits, bound, worst);
  return hits >= 99;
}

struct Criterion {
  int id;
  const char* label;
  bool (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion criteria[] = {
      {1, "closed form tracks the desk-scale simulation", criterion1},
      {2, "worst-group loss is U-shaped with the argmin rising in p",
       criterion2},
      {3, "no-spurious-signal fine-tuning preserves w2 exactly", criterion3},
      {4, "full mixing drives the spurious weight to zero", criterion4},
      {5, "ridge solver matches the gradient-descent oracle", criterion5},
      {6, "mixing identities, rate, and partner uniformity", criterion6},
      {7, "swept mixing beats both single-source heads", criterion7},
      {8, "mixing recovers a group missing from fine-tuning", criterion8},
      {9, "label-feature correlation concentrates as predicted", criterion9},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  int ran = 0;
  for (const auto& criterion : criteria) {
    if (!selected.empty() && selected.count(criterion.id) == 0) continue;
    ++ran;
    std::printf("criterion %d: %s\n", criterion.id, criterion.label);
    std::fflush(stdout);
    bool passed = false;
    try {
      passed = criterion.run();
    } catch (const std::exception& err) {
      note("unexpected exception: %s", err.what());
    }
    std::printf("[%s] %d %s\n", passed ? "PASS" : "FAIL", criterion.id,
                criterion.label);
    std::fflush(stdout);
    failures += passed ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures;
}
