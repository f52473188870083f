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

#pragma once

#include "occ/core.hpp"
#include "occ/uniform_stream.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace occ {

struct GenConfig {
  std::size_t n_points = 0;
  std::size_t dim = 16;
  double theta = 1.0;     // concentration of the stick-breaking weights
  double noise_sd = 0.5;  // i.e. covariance (1/4) I at the default
  std::uint64_t seed = 0;
};

inline void validate(const GenConfig& cfg) {
  if (cfg.theta <= 0.0) throw std::invalid_argument("GenConfig: theta must be > 0");
  if (cfg.dim < 1) throw std::invalid_argument("GenConfig: dim must be >= 1");
  if (cfg.noise_sd < 0.0) throw std::invalid_argument("GenConfig: noise_sd must be >= 0");
}

struct MixtureSample {
  Matrix points;
  std::vector<std::size_t> labels;
  Matrix means;  // one row per cluster that occurred
};

struct FeatureSample {
  Matrix points;
  std::vector<std::vector<std::uint8_t>> z;  // true feature indicators, n x K
  Matrix features;                           // K x dim
  std::vector<double> weights;               // feature inclusion probabilities
  std::size_t rounds = 0;                    // stick-breaking rounds generated
};

namespace detail {

inline constexpr std::uint64_t kTagMixture = 0x6d697874;
inline constexpr std::uint64_t kTagSeparable = 0x73657061;
inline constexpr std::uint64_t kTagBp = 0x62706674;

/// Lazily broken GEM(theta) sticks: new sticks are broken only when a draw
/// lands in the unbroken remainder.
class LazySticks {
 public:
  LazySticks(UniformStream stream, double theta) : stream_(stream), theta_(theta) {}

  std::size_t label_for(double v) {
    double cum = 0.0;
    for (std::size_t j = 0; j < sticks_.size(); ++j) {
      cum += sticks_[j];
      if (v < cum) return j;
    }
    while (sticks_.size() < kMaxSticks && remaining_ > 0.0) {
      const double u = stream_.uniform(sticks_.size(), 0);
      const double frac = beta_one_theta(u, theta_);
      const double stick = remaining_ * frac;
      sticks_.push_back(stick);
      remaining_ *= 1.0 - frac;
      cum += stick;
      if (v < cum) return sticks_.size() - 1;
    }
    return sticks_.empty() ? 0 : sticks_.size() - 1;
  }

  std::size_t count() const { return sticks_.size(); }

 private:
  static constexpr std::size_t kMaxSticks = 1 << 14;
  UniformStream stream_;
  double theta_;
  std::vector<double> sticks_;
  double remaining_ = 1.0;
};

}  // namespace detail

/// Dirichlet-process mixture: stick-breaking cluster proportions with
/// concentration theta, cluster means N(0, I), points
/// N(mean, noise_sd^2 I).
inline MixtureSample gen_dp_mixture(const GenConfig& cfg) {
  validate(cfg);
  const UniformStream root = UniformStream(cfg.seed).substream(detail::kTagMixture);
  const UniformStream assign = root.substream(1);
  const UniformStream means = root.substream(2);
  const UniformStream noise = root.substream(3);
  detail::LazySticks sticks(root.substream(4), cfg.theta);

  MixtureSample s;
  s.labels.resize(cfg.n_points);
  std::size_t k_max = 0;
  for (std::size_t i = 0; i < cfg.n_points; ++i) {
    s.labels[i] = sticks.label_for(assign.uniform(i, 0));
    if (s.labels[i] + 1 > k_max) k_max = s.labels[i] + 1;
  }

  s.means = Matrix(static_cast<Eigen::Index>(k_max), static_cast<Eigen::Index>(cfg.dim));
  for (std::size_t k = 0; k < k_max; ++k)
    for (std::size_t j = 0; j < cfg.dim; ++j)
      s.means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          gaussian(means, k, j);

  s.points = Matrix(static_cast<Eigen::Index>(cfg.n_points),
                    static_cast<Eigen::Index>(cfg.dim));
  for (std::size_t i = 0; i < cfg.n_points; ++i)
    for (std::size_t j = 0; j < cfg.dim; ++j)
      s.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          s.means(static_cast<Eigen::Index>(s.labels[i]), static_cast<Eigen::Index>(j)) +
          cfg.noise_sd * gaussian(noise, i, j);
  return s;
}

/// Separable clusters: stick-breaking proportions, cluster k centered at
/// (2(k+1), 0, ..., 0), points uniform in the radius-1/2 ball around the
/// center. Any two points of one cluster are at most distance 1 apart; any
/// two points of different clusters are more than distance 1 apart.
inline MixtureSample gen_separable_clusters(const GenConfig& cfg) {
  validate(cfg);
  const UniformStream root = UniformStream(cfg.seed).substream(detail::kTagSeparable);
  const UniformStream assign = root.substream(1);
  const UniformStream direction = root.substream(2);
  const UniformStream radius = root.substream(3);
  detail::LazySticks sticks(root.substream(4), cfg.theta);

  MixtureSample s;
  s.labels.resize(cfg.n_points);
  std::size_t k_max = 0;
  for (std::size_t i = 0; i < cfg.n_points; ++i) {
    s.labels[i] = sticks.label_for(assign.uniform(i, 0));
    if (s.labels[i] + 1 > k_max) k_max = s.labels[i] + 1;
  }

  s.means = Matrix::Zero(static_cast<Eigen::Index>(k_max),
                         static_cast<Eigen::Index>(cfg.dim));
  for (std::size_t k = 0; k < k_max; ++k)
    s.means(static_cast<Eigen::Index>(k), 0) = 2.0 * static_cast<double>(k + 1);

  s.points = Matrix(static_cast<Eigen::Index>(cfg.n_points),
                    static_cast<Eigen::Index>(cfg.dim));
  Vec dir(static_cast<Eigen::Index>(cfg.dim));
  for (std::size_t i = 0; i < cfg.n_points; ++i) {
    for (std::size_t j = 0; j < cfg.dim; ++j)
      dir(static_cast<Eigen::Index>(j)) = gaussian(direction, i, j);
    const double norm = std::sqrt(dir.squaredNorm());
    if (norm > 0.0)
      dir /= norm;
    else
      dir(0) = 1.0;
    const double r =
        0.5 * std::pow(radius.uniform(i, 0), 1.0 / static_cast<double>(cfg.dim));
    s.points.row(static_cast<Eigen::Index>(i)) =
        s.means.row(static_cast<Eigen::Index>(s.labels[i])) + r * dir;
  }
  return s;
}

/// Rounds of the beta-process stick-breaking recursion needed so that, by
/// Markov's inequality on the expected leftover mass theta*(theta/(1+theta))^R,
/// the mass beyond round R is below 1e-4 with probability above 0.9999.
inline std::size_t bp_truncation_rounds(double theta) {
  const double q = theta / (1.0 + theta);
  const double target = 1e-8 / theta;  // mass threshold times tail probability
  const double r = std::ceil(std::log(target) / std::log(q));
  if (!(r > 1.0)) return 1;
  if (r > 4096.0) return 4096;
  return static_cast<std::size_t>(r);
}

inline double bp_remaining_mass_bound(double theta, std::size_t rounds) {
  return theta * std::pow(theta / (1.0 + theta), static_cast<double>(rounds));
}

namespace detail {

inline std::size_t poisson_knuth(const UniformStream& s, std::uint64_t index, double rate) {
  const double limit = std::exp(-rate);
  double p = 1.0;
  std::uint64_t slot = 0;
  std::size_t k = 0;
  do {
    p *= s.uniform(index, slot++);
    ++k;
  } while (p > limit && slot < 4096);
  return k - 1;
}

}  // namespace detail

/// Beta-process feature model: feature weights from the round-based
/// stick-breaking recursion (round i holds Poisson(theta) atoms, each with
/// weight V_i * prod_{l<i}(1 - V_l), V_l iid Beta(1, theta)), truncated per
/// bp_truncation_rounds; feature means N(0, I); z_ik ~ Bernoulli(w_k);
/// points N(sum_k z_ik f_k, noise_sd^2 I).
inline FeatureSample gen_bp_features(const GenConfig& cfg) {
  validate(cfg);
  const UniformStream root = UniformStream(cfg.seed).substream(detail::kTagBp);
  const UniformStream atoms = root.substream(1);
  const UniformStream vs = root.substream(2);
  const UniformStream feats = root.substream(3);
  const UniformStream zs = root.substream(4);
  const UniformStream noise = root.substream(5);

  FeatureSample s;
  s.rounds = bp_truncation_rounds(cfg.theta);
  for (std::size_t round = 1; round <= s.rounds; ++round) {
    const std::size_t count = detail::poisson_knuth(atoms, round, cfg.theta);
    for (std::size_t j = 0; j < count; ++j) {
      const std::uint64_t key = (static_cast<std::uint64_t>(round) << 24) | j;
      double w = 1.0;
      for (std::size_t l = 1; l < round; ++l)
        w *= 1.0 - beta_one_theta(vs.uniform(key, l), cfg.theta);
      w *= beta_one_theta(vs.uniform(key, round), cfg.theta);
      s.weights.push_back(w);
    }
  }

  const std::size_t k_count = s.weights.size();
  s.features = Matrix(static_cast<Eigen::Index>(k_count),
                      static_cast<Eigen::Index>(cfg.dim));
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t j = 0; j < cfg.dim; ++j)
      s.features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          gaussian(feats, k, j);

  s.z.assign(cfg.n_points, std::vector<std::uint8_t>(k_count, 0));
  s.points = Matrix(static_cast<Eigen::Index>(cfg.n_points),
                    static_cast<Eigen::Index>(cfg.dim));
  Vec mean(static_cast<Eigen::Index>(cfg.dim));
  for (std::size_t i = 0; i < cfg.n_points; ++i) {
    mean.setZero();
    for (std::size_t k = 0; k < k_count; ++k) {
      if (zs.uniform(i, k) < s.weights[k]) {
        s.z[i][k] = 1;
        mean += s.features.row(static_cast<Eigen::Index>(k));
      }
    }
    for (std::size_t j = 0; j < cfg.dim; ++j)
      s.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mean(static_cast<Eigen::Index>(j)) + cfg.noise_sd * gaussian(noise, i, j);
  }
  return s;
}

}  // namespace occ
