// Copyright 2026 the occ-learn authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "occ/datagen.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

using namespace occ;

TEST_CASE("generators are deterministic under the seed") {
  const GenConfig cfg{64, 4, 1.0, 0.5, 2024};
  const MixtureSample a = gen_dp_mixture(cfg);
  const MixtureSample b = gen_dp_mixture(cfg);
  REQUIRE(a.points == b.points);
  REQUIRE(a.labels == b.labels);

  const FeatureSample fa = gen_bp_features(cfg);
  const FeatureSample fb = gen_bp_features(cfg);
  REQUIRE(fa.points == fb.points);
  REQUIRE(fa.weights == fb.weights);

  const MixtureSample sa = gen_separable_clusters(cfg);
  const MixtureSample sb = gen_separable_clusters(cfg);
  REQUIRE(sa.points == sb.points);
}

TEST_CASE("the three generators draw from independent streams") {
  const GenConfig cfg{16, 3, 1.0, 0.5, 7};
  const Matrix a = gen_dp_mixture(cfg).points;
  const Matrix b = gen_separable_clusters(cfg).points;
  const Matrix c = gen_bp_features(cfg).points;
  REQUIRE(a != b);
  REQUIRE(a != c);
  REQUIRE(b != c);
}

TEST_CASE("zero noise puts every point on its cluster mean") {
  GenConfig cfg{40, 3, 1.0, 0.0, 11};
  const MixtureSample s = gen_dp_mixture(cfg);
  for (std::size_t i = 0; i < cfg.n_points; ++i)
    REQUIRE(s.points.row(static_cast<Eigen::Index>(i)) ==
            s.means.row(static_cast<Eigen::Index>(s.labels[i])));
}

TEST_CASE("config validation") {
  GenConfig cfg;
  cfg.theta = 0.0;
  REQUIRE_THROWS_AS(gen_dp_mixture(cfg), std::invalid_argument);
  cfg.theta = 1.0;
  cfg.dim = 0;
  REQUIRE_THROWS_AS(gen_separable_clusters(cfg), std::invalid_argument);
  cfg.dim = 2;
  cfg.noise_sd = -0.1;
  REQUIRE_THROWS_AS(gen_bp_features(cfg), std::invalid_argument);
}

TEST_CASE("separable clusters satisfy the hard separation guarantees") {
  const GenConfig cfg{400, 8, 1.0, 0.5, 3};
  const MixtureSample s = gen_separable_clusters(cfg);
  const Eigen::Index n = s.points.rows();

  for (Eigen::Index i = 0; i < n; ++i) {
    const double off = (s.points.row(i) -
                        s.means.row(static_cast<Eigen::Index>(s.labels[static_cast<std::size_t>(i)])))
                           .norm();
    REQUIRE(off <= 0.5);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (s.points.row(i) - s.points.row(j)).norm();
      if (s.labels[static_cast<std::size_t>(i)] == s.labels[static_cast<std::size_t>(j)])
        REQUIRE(d <= 1.0);
      else
        REQUIRE(d > 1.0);
    }
  }
}

TEST_CASE("mixture cluster count matches the CRP expectation") {
  const std::size_t n = 120;
  const double theta = 1.0;
  double oracle = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    oracle += theta / (theta + static_cast<double>(i) - 1.0);

  const int seeds = 1000;
  std::vector<double> counts;
  counts.reserve(seeds);
  for (int s = 0; s < seeds; ++s) {
    GenConfig cfg{n, 1, theta, 0.0, static_cast<std::uint64_t>(5000 + s)};
    const MixtureSample mix = gen_dp_mixture(cfg);
    std::vector<std::size_t> distinct = mix.labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    counts.push_back(static_cast<double>(distinct.size()));
  }
  double mean = 0.0;
  for (const double c : counts) mean += c;
  mean /= seeds;
  double var = 0.0;
  for (const double c : counts) var += (c - mean) * (c - mean);
  var /= seeds - 1;
  const double se = std::sqrt(var / seeds);
  REQUIRE(std::abs(mean - oracle) <= 3.0 * se);
}

TEST_CASE("beta-process weights: certified truncation and total mass") {
  const double theta = 1.0;
  REQUIRE(bp_truncation_rounds(theta) == 27);
  // Markov certificate: expected leftover mass over the 1e-4 threshold is
  // below the 1e-4 tail probability.
  REQUIRE(bp_remaining_mass_bound(theta, bp_truncation_rounds(theta)) <= 1e-8);

  const int seeds = 1000;
  std::vector<double> mass;
  mass.reserve(seeds);
  for (int s = 0; s < seeds; ++s) {
    GenConfig cfg{1, 4, theta, 0.5, static_cast<std::uint64_t>(9000 + s)};
    const FeatureSample f = gen_bp_features(cfg);
    double total = 0.0;
    for (const double w : f.weights) total += w;
    for (const double w : f.weights) {
      REQUIRE(w >= 0.0);
      REQUIRE(w <= 1.0);
    }
    mass.push_back(total);
  }
  double mean = 0.0;
  for (const double m : mass) mean += m;
  mean /= seeds;
  double var = 0.0;
  for (const double m : mass) var += (m - mean) * (m - mean);
  var /= seeds - 1;
  const double se = std::sqrt(var / seeds);
  REQUIRE(std::abs(mean - theta) <= 3.0 * se);
}

TEST_CASE("bp sample reconstructs points as feature sums plus noise") {
  const GenConfig cfg{30, 4, 1.0, 0.0, 21};
  const FeatureSample f = gen_bp_features(cfg);
  for (std::size_t i = 0; i < cfg.n_points; ++i) {
    Vec expect = Vec::Zero(4);
    for (std::size_t k = 0; k < f.weights.size(); ++k)
      if (f.z[i][k]) expect += f.features.row(static_cast<Eigen::Index>(k));
    REQUIRE((f.points.row(static_cast<Eigen::Index>(i)) - expect).norm() ==
            Catch::Approx(0.0).margin(1e-12));
  }
}
