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
#include "occ/dpmeans.hpp"  // ParallelOptions
#include "occ/engine.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace occ {

/// Latent binary feature model: x_i is approximated by the sum of its
/// selected feature means. Assignment rows grow lazily; a missing trailing
/// entry reads as 0.
struct FeatureModel {
  PointBuffer features;                        // acceptance order
  std::vector<std::vector<std::uint8_t>> z;    // per point, ragged up to K
  double lambda = 1.0;

  std::size_t feature_count() const { return features.size(); }
};

inline bool z_bit(const std::vector<std::uint8_t>& row, std::size_t k) {
  return k < row.size() && row[k] != 0;
}

inline bool z_rows_equal(const std::vector<std::uint8_t>& a,
                         const std::vector<std::uint8_t>& b, std::size_t k_count) {
  for (std::size_t k = 0; k < k_count; ++k)
    if (z_bit(a, k) != z_bit(b, k)) return false;
  return true;
}

/// r -= sum of selected features, subtracting in ascending feature order.
inline void subtract_selected(Vec& r, const PointBuffer& features,
                              const std::vector<std::uint8_t>& z) {
  for (std::size_t k = 0; k < z.size(); ++k)
    if (z[k]) r -= features.row_map(k);
}

/// One coordinate-descent pass over features [first, last) in order. r must
/// hold the full residual x - sum_k z_k f_k on entry and is maintained as
/// flips happen. z_k turns on iff doing so strictly lowers the squared
/// residual: 2 <r_without_k, f_k> > |f_k|^2, ties off. Returns whether any
/// coordinate flipped.
inline bool coordinate_pass(Vec& r, const PointBuffer& features, std::size_t first,
                            std::size_t last, std::uint8_t* z) {
  bool flipped = false;
  const std::size_t d = static_cast<std::size_t>(r.size());
  for (std::size_t k = first; k < last; ++k) {
    const double nf = features.norm2(k);
    const double proj2 = 2.0 * (dot(r.data(), features.row(k), d) + (z[k] ? nf : 0.0));
    const std::uint8_t want = proj2 > nf ? 1 : 0;
    if (want != z[k]) {
      if (want)
        r -= features.row_map(k);
      else
        r += features.row_map(k);
      z[k] = want;
      flipped = true;
    }
  }
  return flipped;
}

/// Best binary combination of the given features for x, by a single
/// coordinate pass in feature order starting from z_init.
inline std::vector<std::uint8_t> optimize_assignment(const Vec& x,
                                                     const PointBuffer& features,
                                                     std::vector<std::uint8_t> z_init) {
  if (z_init.size() != features.size())
    throw std::invalid_argument("optimize_assignment: z length != feature count");
  Vec r = x;
  subtract_selected(r, features, z_init);
  coordinate_pass(r, features, 0, features.size(), z_init.data());
  return z_init;
}

struct BpProposal {
  std::size_t origin = 0;
  Vec direction;  // residual at analysis time; |direction| > lambda
};

struct BpAnalyzeOutcome {
  std::vector<std::uint8_t> z;
  std::optional<BpProposal> proposal;
};

/// Assignment pass for one point followed by the proposal test: if the
/// residual still exceeds lambda (strictly, in squared norm) the residual
/// itself is proposed as a new feature.
inline BpAnalyzeOutcome bp_analyze(const Vec& x, const PointBuffer& features, double lambda,
                                   std::vector<std::uint8_t> z_init, std::size_t origin = 0) {
  if (lambda <= 0.0) throw std::invalid_argument("bp_analyze: lambda must be > 0");
  BpAnalyzeOutcome out;
  z_init.resize(features.size(), 0);
  Vec r = x;
  subtract_selected(r, features, z_init);
  coordinate_pass(r, features, 0, features.size(), z_init.data());
  out.z = std::move(z_init);
  const double rn = squared_norm(r.data(), static_cast<std::size_t>(r.size()));
  if (rn > lambda * lambda) out.proposal = BpProposal{origin, std::move(r)};
  return out;
}

struct BpValidatePatch {
  std::vector<std::uint8_t> bits;  // selection over this epoch's accepted features
  std::int64_t own = -1;           // local index of the feature this proposal created
};

struct BpValidateResult {
  PointBuffer accepted;  // the epoch's new features, acceptance order
  std::vector<BpValidatePatch> patches;
};

/// Serial validation of one epoch's proposed directions. Each proposal is
/// first expressed over the features already accepted in this call; only a
/// residual still exceeding lambda joins the accepted set (the residual, not
/// the proposal itself). The patch records how the originating point's
/// assignment must reference the epoch's features.
inline BpValidateResult bp_validate(std::span<const BpProposal> proposals, double lambda,
                                    std::size_t dim) {
  if (lambda <= 0.0) throw std::invalid_argument("bp_validate: lambda must be > 0");
  const double lam2 = lambda * lambda;
  BpValidateResult res;
  res.accepted = PointBuffer(dim);
  res.patches.reserve(proposals.size());
  for (const BpProposal& p : proposals) {
    BpValidatePatch patch;
    patch.bits.assign(res.accepted.size(), 0);
    Vec r = p.direction;
    coordinate_pass(r, res.accepted, 0, res.accepted.size(), patch.bits.data());
    const double rn = squared_norm(r.data(), static_cast<std::size_t>(r.size()));
    if (rn > lam2) {
      res.accepted.append(r);
      patch.own = static_cast<std::int64_t>(res.accepted.size() - 1);
    }
    res.patches.push_back(std::move(patch));
  }
  return res;
}

/// Least-squares refit of the feature means for fixed assignments: solve
/// (Z^T Z) F = Z^T X with the minimum-norm solution when Z^T Z is rank
/// deficient (a feature no point uses gets a zero row). Sums accumulate in
/// ascending point order so the result is independent of how the pass that
/// produced Z was executed.
inline Matrix update_feature_means(const Matrix& data,
                                   const std::vector<std::vector<std::uint8_t>>& z,
                                   std::size_t k_count) {
  const std::size_t dim = static_cast<std::size_t>(data.cols());
  if (k_count == 0) return Matrix(0, static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd ztz = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k_count),
                                              static_cast<Eigen::Index>(k_count));
  Matrix ztx = Matrix::Zero(static_cast<Eigen::Index>(k_count),
                            static_cast<Eigen::Index>(dim));
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < z.size(); ++i) {
    active.clear();
    const std::vector<std::uint8_t>& row = z[i];
    for (std::size_t k = 0; k < row.size() && k < k_count; ++k)
      if (row[k]) active.push_back(k);
    for (const std::size_t a : active) {
      for (const std::size_t b : active)
        ztz(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += 1.0;
      ztx.row(static_cast<Eigen::Index>(a)) += data.row(static_cast<Eigen::Index>(i));
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ztz);
  return cod.solve(ztx);
}

/// Squared reconstruction error plus lambda^2 per feature.
inline double bp_objective(const Matrix& data, const FeatureModel& m) {
  double cost = 0.0;
  Vec r(static_cast<Eigen::Index>(data.cols()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    r = data.row(i);
    subtract_selected(r, m.features, m.z[static_cast<std::size_t>(i)]);
    cost += squared_norm(r.data(), static_cast<std::size_t>(r.size()));
  }
  return cost + m.lambda * m.lambda * static_cast<double>(m.feature_count());
}

namespace detail {

inline Vec global_mean(const Matrix& data) {
  Vec mean = Vec::Zero(data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) mean += data.row(i);
  return mean / static_cast<double>(data.rows());
}

/// Shared initialization: one feature at the data mean, selected by every
/// point. Both the serial and the distributed algorithm start here.
inline void bp_init(FeatureModel& m, const Matrix& data) {
  m.features = PointBuffer(static_cast<std::size_t>(data.cols()));
  m.features.append(global_mean(data));
  m.z.assign(static_cast<std::size_t>(data.rows()), std::vector<std::uint8_t>{1});
}

struct BpPointPass {
  bool flipped = false;
  Vec residual;
};

/// Assignment pass of one point against the current features, updating its
/// persistent z row in place (resized with zeros for features it has not
/// seen yet).
inline BpPointPass bp_point_pass(const Matrix& data, std::size_t i,
                                 const PointBuffer& features,
                                 std::vector<std::uint8_t>& z_row) {
  z_row.resize(features.size(), 0);
  BpPointPass out;
  out.residual = data.row(static_cast<Eigen::Index>(i));
  subtract_selected(out.residual, features, z_row);
  out.flipped = coordinate_pass(out.residual, features, 0, features.size(), z_row.data());
  return out;
}

/// One serial sweep in the given order: a point whose residual exceeds
/// lambda creates that residual as a feature, immediately visible to later
/// points in the sweep. Returns whether Z or K changed.
inline bool bp_sweep(const Matrix& data, std::span<const std::size_t> order,
                     FeatureModel& m, double lam2) {
  bool changed = false;
  for (const std::size_t i : order) {
    std::vector<std::uint8_t>& z_row = m.z[i];
    BpPointPass pass = bp_point_pass(data, i, m.features, z_row);
    changed |= pass.flipped;
    const double rn = squared_norm(pass.residual.data(),
                                   static_cast<std::size_t>(pass.residual.size()));
    if (rn > lam2) {
      m.features.append(pass.residual);
      z_row.resize(m.features.size(), 0);
      z_row[m.features.size() - 1] = 1;
      changed = true;
    }
  }
  return changed;
}

/// Refit feature means and drop features no point uses (their refit rows are
/// zero by the minimum-norm rule). Shared by the serial and distributed
/// drivers so both sides transform identically.
inline std::size_t bp_refresh_features(const Matrix& data, FeatureModel& m) {
  const std::size_t k = m.feature_count();
  if (k == 0) return 0;
  const Matrix f = update_feature_means(data, m.z, k);

  std::vector<std::size_t> usage(k, 0);
  for (const auto& row : m.z)
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j]) ++usage[j];

  std::vector<std::int64_t> remap(k, -1);
  std::size_t kept = 0;
  for (std::size_t j = 0; j < k; ++j)
    if (usage[j] > 0) remap[j] = static_cast<std::int64_t>(kept++);

  PointBuffer fresh(static_cast<std::size_t>(data.cols()));
  fresh.reserve(kept);
  for (std::size_t j = 0; j < k; ++j)
    if (remap[j] >= 0) fresh.append(f.row(static_cast<Eigen::Index>(j)).data());
  m.features = std::move(fresh);

  if (kept != k) {
    for (auto& row : m.z) {
      std::vector<std::uint8_t> next(kept, 0);
      for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j]) next[static_cast<std::size_t>(remap[j])] = 1;
      row = std::move(next);
    }
  }
  return k - kept;
}

}  // namespace detail

struct BpRunSummary {
  int iterations = 0;
  bool converged = false;
  std::vector<double> objectives;  // after each iteration's feature refit
};

/// Serial BP-means: starts from the data-mean feature, alternates assignment
/// sweeps (with in-sweep feature creation) and least-squares feature refits
/// until Z and K stop changing. `order_for_iteration` optionally supplies
/// the sweep order per (0-based) iteration.
inline FeatureModel serial_bpmeans(
    const Matrix& data, double lambda, int max_iters = 100, BpRunSummary* summary = nullptr,
    const std::function<std::span<const std::size_t>(int)>& order_for_iteration = {}) {
  if (lambda <= 0.0) throw std::invalid_argument("serial_bpmeans: lambda must be > 0");
  if (data.rows() == 0)
    throw std::invalid_argument("serial_bpmeans: empty data (initialization needs a mean)");
  const double lam2 = lambda * lambda;
  const std::size_t n = static_cast<std::size_t>(data.rows());

  FeatureModel m;
  m.lambda = lambda;
  detail::bp_init(m, data);
  if (summary) *summary = BpRunSummary{};

  std::vector<std::size_t> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = i;

  for (int iter = 0; iter < max_iters; ++iter) {
    const std::span<const std::size_t> order =
        order_for_iteration ? order_for_iteration(iter) : std::span<const std::size_t>(identity);
    const bool changed = detail::bp_sweep(data, order, m, lam2);
    detail::bp_refresh_features(data, m);
    if (summary) {
      ++summary->iterations;
      summary->objectives.push_back(bp_objective(data, m));
    }
    if (!changed) {
      if (summary) summary->converged = true;
      break;
    }
  }
  return m;
}

namespace detail {

/// Epoch hooks binding BP-means to the BSP driver for one assignment pass.
class BpPass {
 public:
  using Proposal = BpProposal;

  BpPass(const Matrix& data, FeatureModel& model, bool skip_validation)
      : data_(data), model_(model), lam2_(model.lambda * model.lambda),
        skip_validation_(skip_validation) {}

  AnalyzeResult<BpProposal> analyze(std::size_t i) {
    BpPointPass pass = bp_point_pass(data_, i, model_.features, model_.z[i]);
    AnalyzeResult<BpProposal> out;
    out.assignment = kUnassigned;
    if (pass.flipped) changed_.store(true, std::memory_order_relaxed);
    const double rn = squared_norm(pass.residual.data(),
                                   static_cast<std::size_t>(pass.residual.size()));
    if (rn > lam2_) out.proposal = BpProposal{i, std::move(pass.residual)};
    return out;
  }

  std::vector<ValidateOutcome> validate(std::span<const std::size_t> origins,
                                        std::span<const BpProposal> proposals) {
    std::vector<ValidateOutcome> out(proposals.size());
    const std::size_t base = model_.features.size();
    if (!proposals.empty()) changed_.store(true, std::memory_order_relaxed);
    if (skip_validation_) {
      for (std::size_t r = 0; r < proposals.size(); ++r) {
        model_.features.append(proposals[r].direction);
        std::vector<std::uint8_t>& z_row = model_.z[origins[r]];
        z_row.resize(model_.features.size(), 0);
        z_row[model_.features.size() - 1] = 1;
        out[r] = {true, static_cast<std::int64_t>(model_.features.size() - 1)};
      }
      return out;
    }
    BpValidateResult v = bp_validate(proposals, model_.lambda, model_.features.dim());
    for (std::size_t k = 0; k < v.accepted.size(); ++k)
      model_.features.append(v.accepted.row(k));
    for (std::size_t r = 0; r < proposals.size(); ++r) {
      const BpValidatePatch& patch = v.patches[r];
      std::vector<std::uint8_t>& z_row = model_.z[origins[r]];
      const std::size_t need =
          base + (patch.own >= 0 ? static_cast<std::size_t>(patch.own) + 1
                                 : patch.bits.size());
      if (z_row.size() < need) z_row.resize(need, 0);
      for (std::size_t j = 0; j < patch.bits.size(); ++j)
        if (patch.bits[j]) z_row[base + j] = 1;
      if (patch.own >= 0) {
        z_row[base + static_cast<std::size_t>(patch.own)] = 1;
        out[r] = {true, static_cast<std::int64_t>(base + static_cast<std::size_t>(patch.own))};
      } else {
        out[r] = {false, kUnassigned};
      }
    }
    return out;
  }

  bool changed() const { return changed_.load(std::memory_order_relaxed); }

 private:
  const Matrix& data_;
  FeatureModel& model_;
  double lam2_;
  bool skip_validation_;
  std::atomic<bool> changed_{false};
};

}  // namespace detail

struct ParallelBpResult {
  FeatureModel model;
  RunTrace trace;
  int iterations = 0;
  bool converged = false;
  std::size_t bootstrap_points = 0;
};

/// Distributed BP-means over bulk-synchronous epochs, with the feature refit
/// once per outer iteration.
inline ParallelBpResult parallel_bpmeans(const Matrix& data, double lambda,
                                         const ParallelOptions& opts) {
  if (lambda <= 0.0) throw std::invalid_argument("parallel_bpmeans: lambda must be > 0");
  if (data.rows() == 0)
    throw std::invalid_argument("parallel_bpmeans: empty data (initialization needs a mean)");
  const double lam2 = lambda * lambda;
  const std::size_t n = static_cast<std::size_t>(data.rows());
  const std::size_t b = opts.block_size > 0 ? opts.block_size : n;

  ParallelBpResult res;
  res.model.lambda = lambda;
  detail::bp_init(res.model, data);

  std::size_t bc = 0;
  if (opts.bootstrap) bc = std::min<std::size_t>(static_cast<std::size_t>(opts.processors) * b / 16, n);
  res.bootstrap_points = bc;

  const EpochPlan plan_first = partition_epochs(n - bc, opts.processors, b, bc);
  const EpochPlan plan_rest = bc > 0 ? partition_epochs(n, opts.processors, b) : plan_first;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    IterationTrace itr;
    itr.points.resize(n);
    bool changed = false;

    if (iter == 0 && bc > 0) {
      std::vector<std::size_t> prefix(bc);
      for (std::size_t i = 0; i < bc; ++i) prefix[i] = i;
      changed |= detail::bp_sweep(data, prefix, res.model, lam2);
      for (std::size_t i = 0; i < bc; ++i) {
        PointRecord& rec = itr.points[i];
        rec.index = i;
        rec.epoch = 0;
        rec.proposed = false;
      }
    }

    detail::BpPass pass(data, res.model, opts.skip_validation);
    run_bsp(pass, iter == 0 ? plan_first : plan_rest, opts.mode, itr);
    changed |= pass.changed();

    detail::bp_refresh_features(data, res.model);
    res.trace.iterations.push_back(std::move(itr));
    ++res.iterations;
    if (!changed) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace occ
