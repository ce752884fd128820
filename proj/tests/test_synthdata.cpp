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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dispel/errors.hpp"
#include "dispel/synthdata.hpp"

using dispel::Dataset;
using dispel::DistSpec;
using dispel::GroupId;
using dispel::SpuriousMode;

namespace {

DistSpec noisy_spec() {
  DistSpec spec;
  spec.mu = 0.9;
  spec.sigma1 = 0.5;
  spec.sigma2 = 0.25;
  spec.sigma_xi = 2.0;
  spec.d = 6;
  return spec;
}

bool identical(const Dataset& a, const Dataset& b) {
  if (a.rows() != b.rows() || a.dim() != b.dim()) return false;
  if (a.y != b.y || a.a != b.a) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.dim(); ++j) {
      if (a.x(i, j) != b.x(i, j)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("same seed reproduces the sample bit for bit") {
  const auto spec = noisy_spec();
  const Dataset first = dispel::sample_dataset(spec, 257, 42);
  const Dataset second = dispel::sample_dataset(spec, 257, 42);
  CHECK(identical(first, second));
}

TEST_CASE("row streams are independent of the sample size") {
  // Row i depends only on derive(seed, i), so a shorter sample is a strict
  // prefix of a longer one. This is what makes parallel generation safe.
  const auto spec = noisy_spec();
  const Dataset big = dispel::sample_dataset(spec, 300, 7);
  const Dataset small = dispel::sample_dataset(spec, 90, 7);
  for (Eigen::Index i = 0; i < small.rows(); ++i) {
    CHECK(small.y[i] == big.y[i]);
    CHECK(small.a[i] == big.a[i]);
    for (Eigen::Index j = 0; j < spec.d; ++j) {
      CHECK(small.x(i, j) == big.x(i, j));
    }
  }
}

TEST_CASE("different seeds give different samples") {
  const auto spec = noisy_spec();
  const Dataset first = dispel::sample_dataset(spec, 64, 1);
  const Dataset second = dispel::sample_dataset(spec, 64, 2);
  CHECK_FALSE(identical(first, second));
}

TEST_CASE("label and attribute frequencies match the distribution") {
  DistSpec spec;
  spec.mu = 0.9;
  spec.d = 3;
  const Eigen::Index n = 1000000;
  const Dataset data = dispel::sample_dataset(spec, n, 11);
  double pos = 0.0, agree = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    pos += data.y[i] == 1 ? 1.0 : 0.0;
    agree += data.a[i] == data.y[i] ? 1.0 : 0.0;
  }
  CHECK(pos / static_cast<double>(n) == doctest::Approx(0.5).epsilon(0.004));
  CHECK(agree / static_cast<double>(n) ==
        doctest::Approx(0.9).epsilon(0.004));
}

TEST_CASE("zero-variance coordinates are exact") {
  DistSpec spec;
  spec.mu = 0.7;
  spec.sigma1 = 0.0;
  spec.sigma2 = 0.0;
  spec.sigma_xi = 0.0;
  spec.d = 5;
  const Dataset data = dispel::sample_dataset(spec, 4096, 3);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    CHECK(data.x(i, 0) == static_cast<float>(data.y[i]));
    CHECK(data.x(i, 1) == static_cast<float>(data.a[i]));
    for (Eigen::Index j = 2; j < spec.d; ++j) CHECK(data.x(i, j) == 0.0f);
  }
}

TEST_CASE("absent mode zeroes the attribute and recenters x2") {
  auto spec = noisy_spec();
  spec.spurious_mode = SpuriousMode::absent;
  const Eigen::Index n = 200000;
  const Dataset data = dispel::sample_dataset(spec, n, 5);
  double x2_sum = 0.0, x2_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(data.a[i] == 0);
    x2_sum += data.x(i, 1);
    x2_sq += static_cast<double>(data.x(i, 1)) * data.x(i, 1);
  }
  const double mean = x2_sum / static_cast<double>(n);
  const double var = x2_sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(spec.sigma2 * spec.sigma2).epsilon(0.05));

  auto exact = spec;
  exact.sigma2 = 0.0;
  const Dataset flat = dispel::sample_dataset(exact, 512, 5);
  for (Eigen::Index i = 0; i < flat.rows(); ++i) CHECK(flat.x(i, 1) == 0.0f);
}

TEST_CASE("feature moments follow the conditional gaussians") {
  auto spec = noisy_spec();
  const Eigen::Index n = 400000;
  const Dataset data = dispel::sample_dataset(spec, n, 17);
  double e1 = 0.0, v1 = 0.0, e2 = 0.0, v2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d1 = data.x(i, 0) - data.y[i];
    const double d2 = data.x(i, 1) - data.a[i];
    e1 += d1;
    v1 += d1 * d1;
    e2 += d2;
    v2 += d2 * d2;
  }
  CHECK(std::abs(e1 / n) < 0.005);
  CHECK(v1 / n == doctest::Approx(spec.sigma1 * spec.sigma1).epsilon(0.02));
  CHECK(std::abs(e2 / n) < 0.005);
  CHECK(v2 / n == doctest::Approx(spec.sigma2 * spec.sigma2).epsilon(0.02));
}

TEST_CASE("tail coordinates carry sigma_xi^2 split over d-2 slots") {
  auto spec = noisy_spec();
  spec.d = 10;
  const Eigen::Index n = 200000;
  const Dataset data = dispel::sample_dataset(spec, n, 23);
  const double per_coord = spec.sigma_xi * spec.sigma_xi / (spec.d - 2);
  double total = 0.0;
  for (Eigen::Index j = 2; j < spec.d; ++j) {
    double sum = 0.0, sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += data.x(i, j);
      sq += static_cast<double>(data.x(i, j)) * data.x(i, j);
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(per_coord).epsilon(0.05));
    total += var;
  }
  CHECK(total ==
        doctest::Approx(spec.sigma_xi * spec.sigma_xi).epsilon(0.03));
}

TEST_CASE("group index lists exactly the matching rows") {
  const auto spec = noisy_spec();
  const Dataset data = dispel::sample_dataset(spec, 2000, 31);
  Eigen::Index indexed = 0;
  for (const auto& [g, rows] : data.group_index) {
    for (const auto i : rows) {
      CHECK(data.a[i] == g.a);
      CHECK(data.y[i] == g.y);
    }
    indexed += static_cast<Eigen::Index>(rows.size());
  }
  CHECK(indexed == data.rows());
}

TEST_CASE("balanced sampling hits every group with equal counts") {
  auto spec = noisy_spec();
  const Dataset bal = dispel::sample_balanced(spec, 32, 13);
  REQUIRE(bal.group_index.size() == 4);
  int sum_ay = 0;
  for (const auto& [g, rows] : bal.group_index) {
    CHECK(rows.size() == 8);
    sum_ay += g.a * g.y * static_cast<int>(rows.size());
  }
  // Balance makes the empirical attribute-label correlation exactly zero.
  CHECK(sum_ay == 0);

  spec.spurious_mode = SpuriousMode::absent;
  const Dataset bal2 = dispel::sample_balanced(spec, 10, 13);
  REQUIRE(bal2.group_index.size() == 2);
  CHECK(bal2.group_index.at(GroupId{0, -1}).size() == 5);
  CHECK(bal2.group_index.at(GroupId{0, 1}).size() == 5);
}

TEST_CASE("balanced sampling rejects sizes that cannot split evenly") {
  const auto spec = noisy_spec();
  CHECK_THROWS_AS(dispel::sample_balanced(spec, 6, 1),
                  dispel::ValidationError);
  CHECK_THROWS_AS(dispel::sample_balanced(spec, 0, 1),
                  dispel::ValidationError);
}

TEST_CASE("single-group sampling conditions on the requested pair") {
  DistSpec spec;
  spec.sigma1 = 0.0;
  spec.sigma2 = 0.0;
  spec.d = 3;
  const Dataset g = dispel::sample_single_group(spec, 1, 1, 50, 3);
  REQUIRE(g.rows() == 50);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    CHECK(g.y[i] == 1);
    CHECK(g.a[i] == 1);
    CHECK(g.x(i, 0) == 1.0f);
    CHECK(g.x(i, 1) == 1.0f);
  }

  auto noisy = noisy_spec();
  const Eigen::Index m = 100000;
  const Dataset h = dispel::sample_single_group(noisy, -1, 1, m, 19);
  double m1 = 0.0, m2 = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    m1 += h.x(i, 0);
    m2 += h.x(i, 1);
  }
  CHECK(m1 / m == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(m2 / m == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("single-group sampling validates the pair against the mode") {
  auto spec = noisy_spec();
  CHECK_THROWS_AS(dispel::sample_single_group(spec, 2, 1, 4, 1),
                  dispel::ValidationError);
  CHECK_THROWS_AS(dispel::sample_single_group(spec, 1, 0, 4, 1),
                  dispel::ValidationError);
  spec.spurious_mode = SpuriousMode::absent;
  CHECK_THROWS_AS(dispel::sample_single_group(spec, 1, 1, 4, 1),
                  dispel::ValidationError);
  CHECK_NOTHROW(dispel::sample_single_group(spec, 1, 0, 4, 1));
}

TEST_CASE("invalid specs and sizes are rejected") {
  DistSpec bad = noisy_spec();
  bad.mu = 1.5;
  CHECK_THROWS_AS(dispel::sample_dataset(bad, 10, 1),
                  dispel::ValidationError);
  bad = noisy_spec();
  bad.sigma1 = -1.0;
  CHECK_THROWS_AS(dispel::sample_dataset(bad, 10, 1),
                  dispel::ValidationError);
  bad = noisy_spec();
  bad.d = 1;
  CHECK_THROWS_AS(dispel::sample_dataset(bad, 10, 1),
                  dispel::ValidationError);
  bad = noisy_spec();
  bad.d = 2;  // no tail slots for sigma_xi > 0
  CHECK_THROWS_AS(dispel::sample_dataset(bad, 10, 1),
                  dispel::ValidationError);
  bad.sigma_xi = 0.0;
  CHECK_NOTHROW(dispel::sample_dataset(bad, 10, 1));
  CHECK_THROWS_AS(dispel::sample_dataset(noisy_spec(), 0, 1),
                  dispel::ValidationError);
}

TEST_CASE("streaming helpers replay sample_dataset rows bit for bit") {
  const auto spec = noisy_spec();
  const std::uint64_t seed = 77;
  const Dataset data = dispel::sample_dataset(spec, 40, seed);
  Eigen::VectorXf row(spec.d);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    dispel::rng::Stream stream(dispel::rng::derive(seed, i));
    const auto [y, a] = dispel::detail::sample_label_attr(spec, stream);
    dispel::detail::sample_features(spec, y, a, stream, row.data());
    CHECK(y == data.y[i]);
    CHECK(a == data.a[i]);
    for (Eigen::Index j = 0; j < spec.d; ++j) CHECK(row[j] == data.x(i, j));
  }
}

TEST_CASE("the label-feature correlation matches its population value") {
  // E[x y] is (1, 2 mu - 1, 0, ..., 0): the core coordinate always agrees
  // with the label, the spurious one only mu of the time, and the tails
  // are independent noise. A five-sigma band per coordinate should hold
  // in at least 99 of 100 seeds.
  DistSpec spec;
  spec.mu = 0.8;
  spec.sigma1 = 0.7;
  spec.sigma2 = 0.4;
  spec.sigma_xi = 1.0;
  spec.d = 6;
  const Eigen::Index n = 4000;
  const double tail_sd =
      spec.sigma_xi / std::sqrt(static_cast<double>(spec.d - 2));
  const double sd = std::max(
      {1.0, spec.sigma1, std::sqrt(1.0 + spec.sigma2 * spec.sigma2),
       tail_sd});
  const double band = 5.0 * sd / std::sqrt(static_cast<double>(n));

  Eigen::VectorXd target = Eigen::VectorXd::Zero(spec.d);
  target[0] = 1.0;
  target[1] = 2.0 * spec.mu - 1.0;
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Dataset data = dispel::sample_dataset(spec, n, seed);
    const Eigen::VectorXd mean =
        (data.x.cast<double>().transpose() * data.y.cast<double>()) /
        static_cast<double>(n);
    if (((mean - target).cwiseAbs().array() <= band).all()) ++hits;
  }
  CHECK(hits >= 99);
}
