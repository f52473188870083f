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
#include "occ/engine.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace occ {

inline std::vector<double> point_norms(const Matrix& data) {
  std::vector<double> norms(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < norms.size(); ++i)
    norms[i] = squared_norm(data.row(static_cast<Eigen::Index>(i)).data(),
                            static_cast<std::size_t>(data.cols()));
  return norms;
}

struct DpState {
  PointBuffer centers;                      // acceptance order
  std::vector<std::int64_t> assignments;    // center index per point, -1 pending
  double lambda = 1.0;
};

struct DpAssignment {
  bool propose = false;
  std::size_t center = npos;
  double sq_dist = std::numeric_limits<double>::infinity();
};

/// Assign x to its nearest center, or signal a proposal when the nearest one
/// is farther than lambda (strictly; at exactly lambda the point is
/// assigned). An empty center set always proposes.
inline DpAssignment assign_point(const double* x, double x_norm2,
                                 const PointBuffer& centers, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("assign_point: lambda must be > 0");
  const Nearest hit = nearest_point(x, x_norm2, centers);
  DpAssignment out;
  out.center = hit.index;
  out.sq_dist = hit.sq_dist;
  out.propose = hit.index == npos || hit.sq_dist > lambda * lambda;
  return out;
}

inline DpAssignment assign_point(const Vec& x, const PointBuffer& centers, double lambda) {
  return assign_point(x.data(), squared_norm(x.data(), static_cast<std::size_t>(x.size())),
                      centers, lambda);
}

struct DpProposal {
  std::size_t origin = 0;
  Vec location;  // exactly the originating data point
};

struct DpValidation {
  PointBuffer new_centers;
  std::vector<std::int64_t> center_of;  // resolved global center index per proposal
  std::vector<char> accepted;
};

/// Serial validation of one epoch's proposals. A proposal becomes a new
/// center unless a center accepted earlier *in this call* covers it
/// (distance < lambda, strictly; at exactly lambda it is still accepted).
/// Proposals were already checked against `accepted_so_far` at analysis
/// time, so only the epoch-new set needs scanning; `accepted_so_far` fixes
/// the global index base for the rollback mapping.
inline DpValidation dp_validate(std::span<const DpProposal> proposals,
                                const PointBuffer& accepted_so_far, double lambda) {
  const double lam2 = lambda * lambda;
  const std::size_t base = accepted_so_far.size();
  DpValidation v;
  v.new_centers = PointBuffer(accepted_so_far.dim());
  v.center_of.reserve(proposals.size());
  v.accepted.reserve(proposals.size());
  for (const DpProposal& p : proposals) {
    const double* x = p.location.data();
    const double xn = squared_norm(x, static_cast<std::size_t>(p.location.size()));
    const Nearest hit = nearest_point(x, xn, v.new_centers);
    if (hit.index != npos && hit.sq_dist < lam2) {
      v.center_of.push_back(static_cast<std::int64_t>(base + hit.index));
      v.accepted.push_back(0);
    } else {
      v.new_centers.append(x);
      v.center_of.push_back(static_cast<std::int64_t>(base + v.new_centers.size() - 1));
      v.accepted.push_back(1);
    }
  }
  return v;
}

struct RecomputeResult {
  PointBuffer centers;
  std::vector<std::int64_t> remap;  // old center index -> new, -1 if dropped
  std::size_t dropped = 0;
};

/// Replace each center by the mean of its assigned points, accumulating in
/// ascending point order so the result does not depend on how the pass that
/// produced the assignments was executed. Centers with no assigned points
/// are dropped and reported through the remap.
inline RecomputeResult recompute_centers(const Matrix& data,
                                         std::span<const std::int64_t> assignments,
                                         std::size_t n_centers) {
  const std::size_t dim = static_cast<std::size_t>(data.cols());
  Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(n_centers),
                             static_cast<Eigen::Index>(dim));
  std::vector<std::size_t> counts(n_centers, 0);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const std::int64_t z = assignments[i];
    if (z < 0 || static_cast<std::size_t>(z) >= n_centers)
      throw std::invalid_argument("recompute_centers: assignment out of range");
    sums.row(z) += data.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(z)];
  }
  RecomputeResult r;
  r.centers = PointBuffer(dim);
  r.remap.assign(n_centers, -1);
  Vec mean(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < n_centers; ++k) {
    if (counts[k] == 0) {
      ++r.dropped;
      continue;
    }
    mean = sums.row(static_cast<Eigen::Index>(k)) / static_cast<double>(counts[k]);
    r.remap[k] = static_cast<std::int64_t>(r.centers.size());
    r.centers.append(mean);
  }
  return r;
}

inline void apply_center_remap(std::vector<std::int64_t>& assignments,
                               std::span<const std::int64_t> remap) {
  for (std::int64_t& z : assignments) {
    if (z >= 0) z = remap[static_cast<std::size_t>(z)];
  }
}

/// Facility-location objective: sum of squared distances to the nearest
/// center plus lambda^2 per center. Empty center set with data present
/// costs +infinity.
inline double dp_objective(const Matrix& data, const PointBuffer& centers, double lambda) {
  if (centers.empty() && data.rows() > 0)
    return std::numeric_limits<double>::infinity();
  double service = 0.0;
  const std::size_t dim = static_cast<std::size_t>(data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double* x = data.row(i).data();
    service += nearest_point(x, squared_norm(x, dim), centers).sq_dist;
  }
  return service + lambda * lambda * static_cast<double>(centers.size());
}

namespace detail {

/// One serial assignment sweep in the given order: a point farther than
/// lambda from every current center becomes a center itself, immediately
/// visible to later points. Returns whether any assignment changed.
inline bool dp_sweep(const Matrix& data, const std::vector<double>& norms,
                     std::span<const std::size_t> order, DpState& st) {
  bool changed = false;
  for (const std::size_t i : order) {
    const DpAssignment a =
        assign_point(data.row(static_cast<Eigen::Index>(i)).data(), norms[i], st.centers,
                     st.lambda);
    std::int64_t z;
    if (a.propose) {
      st.centers.append(data.row(static_cast<Eigen::Index>(i)).data());
      z = static_cast<std::int64_t>(st.centers.size() - 1);
    } else {
      z = static_cast<std::int64_t>(a.center);
    }
    changed |= st.assignments[i] != z;
    st.assignments[i] = z;
  }
  return changed;
}

}  // namespace detail

struct DpRunSummary {
  int iterations = 0;
  bool converged = false;
  std::vector<double> objectives;  // after each iteration's center update
};

/// Serial DP-means. `order_for_iteration`, when given, supplies the point
/// visiting order of each assignment sweep (iteration index is 0-based);
/// by default sweeps run in ascending index order.
inline DpState serial_dpmeans(
    const Matrix& data, double lambda, int max_iters = 100, DpRunSummary* summary = nullptr,
    const std::function<std::span<const std::size_t>(int)>& order_for_iteration = {}) {
  if (lambda <= 0.0) throw std::invalid_argument("serial_dpmeans: lambda must be > 0");
  const std::size_t n = static_cast<std::size_t>(data.rows());
  DpState st;
  st.centers = PointBuffer(static_cast<std::size_t>(data.cols()));
  st.assignments.assign(n, kUnassigned);
  st.lambda = lambda;
  if (summary) *summary = DpRunSummary{};
  if (n == 0) {
    if (summary) summary->converged = true;
    return st;
  }

  const std::vector<double> norms = point_norms(data);
  std::vector<std::size_t> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = i;

  for (int iter = 0; iter < max_iters; ++iter) {
    const std::span<const std::size_t> order =
        order_for_iteration ? order_for_iteration(iter) : std::span<const std::size_t>(identity);
    const bool changed = detail::dp_sweep(data, norms, order, st);
    RecomputeResult rec = recompute_centers(data, st.assignments, st.centers.size());
    apply_center_remap(st.assignments, rec.remap);
    st.centers = std::move(rec.centers);
    if (summary) {
      ++summary->iterations;
      summary->objectives.push_back(dp_objective(data, st.centers, lambda));
    }
    if (!changed) {
      if (summary) summary->converged = true;
      break;
    }
  }
  return st;
}

struct ParallelOptions {
  int processors = 1;
  std::size_t block_size = 0;  // 0: all points in one block
  int max_iters = 100;
  bool bootstrap = false;      // serial prefix of floor(P*b/16) points, first pass only
  ExecMode mode = ExecMode::sequential;
  bool skip_validation = false;  // fault injection: accept every proposal unchecked
};

namespace detail {

/// Epoch hooks binding DP-means to the BSP driver for one assignment pass.
class DpPass {
 public:
  using Proposal = DpProposal;

  DpPass(const Matrix& data, const std::vector<double>& norms, DpState& state,
         bool skip_validation)
      : data_(data), norms_(norms), state_(state), skip_validation_(skip_validation) {}

  AnalyzeResult<DpProposal> analyze(std::size_t i) {
    const DpAssignment a = assign_point(data_.row(static_cast<Eigen::Index>(i)).data(),
                                        norms_[i], state_.centers, state_.lambda);
    AnalyzeResult<DpProposal> out;
    if (a.propose) {
      out.proposal = DpProposal{i, data_.row(static_cast<Eigen::Index>(i))};
      out.assignment = kUnassigned;
      state_.assignments[i] = kUnassigned;  // deferred until validation
    } else {
      out.assignment = static_cast<std::int64_t>(a.center);
      state_.assignments[i] = out.assignment;
    }
    return out;
  }

  std::vector<ValidateOutcome> validate(std::span<const std::size_t> origins,
                                        std::span<const DpProposal> proposals) {
    std::vector<ValidateOutcome> out(proposals.size());
    if (skip_validation_) {
      for (std::size_t r = 0; r < proposals.size(); ++r) {
        state_.centers.append(proposals[r].location);
        out[r].accepted = true;
        out[r].assignment = static_cast<std::int64_t>(state_.centers.size() - 1);
        state_.assignments[origins[r]] = out[r].assignment;
      }
      return out;
    }
    DpValidation v = dp_validate(proposals, state_.centers, state_.lambda);
    for (std::size_t k = 0; k < v.new_centers.size(); ++k)
      state_.centers.append(v.new_centers.row(k));
    for (std::size_t r = 0; r < proposals.size(); ++r) {
      out[r].accepted = v.accepted[r] != 0;
      out[r].assignment = v.center_of[r];
      state_.assignments[origins[r]] = out[r].assignment;
    }
    return out;
  }

 private:
  const Matrix& data_;
  const std::vector<double>& norms_;
  DpState& state_;
  bool skip_validation_;
};

}  // namespace detail

struct ParallelDpResult {
  DpState state;
  RunTrace trace;
  int iterations = 0;
  bool converged = false;
  std::size_t bootstrap_points = 0;
};

/// Distributed DP-means over bulk-synchronous epochs: per iteration, every
/// worker assigns its blocks against the epoch-start centers and proposes
/// uncovered points; proposals are validated serially per epoch; centers are
/// recomputed as cluster means after the full pass.
inline ParallelDpResult parallel_dpmeans(const Matrix& data, double lambda,
                                         const ParallelOptions& opts) {
  if (lambda <= 0.0) throw std::invalid_argument("parallel_dpmeans: lambda must be > 0");
  const std::size_t n = static_cast<std::size_t>(data.rows());
  const std::size_t b = opts.block_size > 0 ? opts.block_size : (n > 0 ? n : 1);

  ParallelDpResult res;
  res.state.centers = PointBuffer(static_cast<std::size_t>(data.cols()));
  res.state.assignments.assign(n, kUnassigned);
  res.state.lambda = lambda;

  if (n == 0) {
    res.converged = true;
    return res;
  }

  std::size_t bc = 0;
  if (opts.bootstrap) bc = std::min<std::size_t>(static_cast<std::size_t>(opts.processors) * b / 16, n);
  res.bootstrap_points = bc;

  const std::vector<double> norms = point_norms(data);
  const EpochPlan plan_first = partition_epochs(n - bc, opts.processors, b, bc);
  const EpochPlan plan_rest = bc > 0 ? partition_epochs(n, opts.processors, b) : plan_first;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    IterationTrace itr;
    itr.points.resize(n);
    const std::vector<std::int64_t> z_prev = res.state.assignments;

    if (iter == 0 && bc > 0) {
      // Bootstrap prefix: a serial prefix of the equivalent serial execution.
      std::vector<std::size_t> prefix(bc);
      for (std::size_t i = 0; i < bc; ++i) prefix[i] = i;
      detail::dp_sweep(data, norms, prefix, res.state);
      for (std::size_t i = 0; i < bc; ++i) {
        PointRecord& rec = itr.points[i];
        rec.index = i;
        rec.epoch = 0;
        rec.proposed = false;
        rec.assignment_before = res.state.assignments[i];
        rec.assignment_after = rec.assignment_before;
      }
    }

    detail::DpPass pass(data, norms, res.state, opts.skip_validation);
    run_bsp(pass, iter == 0 ? plan_first : plan_rest, opts.mode, itr);

    const bool changed = res.state.assignments != z_prev;
    RecomputeResult rec = recompute_centers(data, res.state.assignments,
                                            res.state.centers.size());
    apply_center_remap(res.state.assignments, rec.remap);
    res.state.centers = std::move(rec.centers);

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
