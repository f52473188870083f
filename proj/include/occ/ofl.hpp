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
#include "occ/dpmeans.hpp"  // point_norms, dp_objective (shared facility objective)
#include "occ/engine.hpp"
#include "occ/uniform_stream.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace occ {

/// Probability of opening a facility at squared distance `sq_dist` from the
/// nearest center: min(1, sq_dist / lambda^2). +inf (empty center set)
/// yields 1.
inline double open_probability(double sq_dist, double lam2) {
  const double p = sq_dist / lam2;
  return p < 1.0 ? p : 1.0;
}

struct OflProposal {
  std::size_t origin = 0;
  Vec location;
  double sq_dist = std::numeric_limits<double>::infinity();  // to centers at analysis time
};

enum class OflDrawMode {
  coupled,   // master reuses the point's send draw (slot 0); pathwise equal to serial
  two_draw,  // independent master draw (slot 1), faithful to the two-coin reading
};

/// Propose x as a facility with probability min(d^2, lambda^2)/lambda^2 given
/// the uniform draw u; d is the distance to the nearest center (+inf when
/// the set is empty, so the first epoch always proposes).
inline std::optional<OflProposal> ofl_propose(const Vec& x, const PointBuffer& centers,
                                              double lambda, double u,
                                              std::size_t origin = 0) {
  if (lambda <= 0.0) throw std::invalid_argument("ofl_propose: lambda must be > 0");
  if (u < 0.0 || u >= 1.0) throw std::invalid_argument("ofl_propose: u outside [0,1)");
  const double xn = squared_norm(x.data(), static_cast<std::size_t>(x.size()));
  const Nearest hit = nearest_point(x.data(), xn, centers);
  if (u < open_probability(hit.sq_dist, lambda * lambda))
    return OflProposal{origin, x, hit.sq_dist};
  return std::nullopt;
}

/// Master-side acceptance decision given the uniform draw u. dstar2 is the
/// squared distance to all centers known to the master (global plus this
/// epoch's accepted ones). In two-draw mode the transmitted distance enters
/// capped at lambda (a point sent with probability one behaves like one at
/// distance exactly lambda), which keeps the acceptance chain equal to the
/// serial probability min(1, dstar^2/lambda^2) in every case.
inline bool ofl_accept_given(double u, double dstar2, double proposal_sq_dist, double lam2,
                             OflDrawMode mode) {
  if (mode == OflDrawMode::coupled) return u < open_probability(dstar2, lam2);
  const double cap2 = proposal_sq_dist < lam2 ? proposal_sq_dist : lam2;
  const double p = dstar2 < cap2 ? dstar2 / cap2 : 1.0;
  return u < p;
}

/// As above, drawing u from the stream: the coupled mode reuses the origin's
/// send draw (slot 0), the two-draw mode uses an independent draw (slot 1).
inline bool ofl_accept(double dstar2, double proposal_sq_dist, double lam2,
                       const UniformStream& rng, std::size_t origin, OflDrawMode mode) {
  const std::uint64_t slot = mode == OflDrawMode::coupled ? 0 : 1;
  return ofl_accept_given(rng.uniform(origin, slot), dstar2, proposal_sq_dist, lam2, mode);
}

/// Stochastic validation of one epoch's proposals, in validation order.
/// Accepted facilities are appended to `epoch_accepted` and are visible to
/// later proposals in the same call.
inline std::vector<char> ofl_validate(std::span<const OflProposal> proposals,
                                      const PointBuffer& global_centers,
                                      PointBuffer& epoch_accepted, double lambda,
                                      const UniformStream& rng,
                                      OflDrawMode mode = OflDrawMode::coupled) {
  const double lam2 = lambda * lambda;
  std::vector<char> accepted;
  accepted.reserve(proposals.size());
  for (const OflProposal& p : proposals) {
    const double xn = squared_norm(p.location.data(),
                                   static_cast<std::size_t>(p.location.size()));
    const Nearest g = nearest_point(p.location.data(), xn, global_centers);
    const Nearest e = nearest_point(p.location.data(), xn, epoch_accepted);
    const double dstar2 = g.sq_dist < e.sq_dist ? g.sq_dist : e.sq_dist;
    const bool acc = ofl_accept(dstar2, p.sq_dist, lam2, rng, p.origin, mode);
    if (acc) epoch_accepted.append(p.location);
    accepted.push_back(acc ? 1 : 0);
  }
  return accepted;
}

/// The OFL objective is the facility-location objective shared with DP-means.
inline double ofl_objective(const Matrix& data, const PointBuffer& centers, double lambda) {
  return dp_objective(data, centers, lambda);
}

/// Serial online facility location: one pass in the given order (ascending
/// index by default); each point opens a facility with probability
/// min(1, d^2/lambda^2) using the draw keyed by its global index, so the
/// same stream drives a distributed run and its serial replay.
inline PointBuffer serial_ofl(const Matrix& data, double lambda, const UniformStream& stream,
                              std::span<const std::size_t> order = {}) {
  if (lambda <= 0.0) throw std::invalid_argument("serial_ofl: lambda must be > 0");
  const double lam2 = lambda * lambda;
  const std::vector<double> norms = point_norms(data);
  PointBuffer centers(static_cast<std::size_t>(data.cols()));
  const std::size_t n = static_cast<std::size_t>(data.rows());
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order.empty() ? pos : order[pos];
    const double* x = data.row(static_cast<Eigen::Index>(i)).data();
    const Nearest hit = nearest_point(x, norms[i], centers);
    if (stream.uniform(i, 0) < open_probability(hit.sq_dist, lam2)) centers.append(x);
  }
  return centers;
}

namespace detail {

class OflPass {
 public:
  using Proposal = OflProposal;

  OflPass(const Matrix& data, const std::vector<double>& norms, PointBuffer& centers,
          double lambda, const UniformStream& stream, OflDrawMode mode, bool skip_validation)
      : data_(data),
        norms_(norms),
        centers_(centers),
        lam2_(lambda * lambda),
        stream_(stream),
        mode_(mode),
        skip_validation_(skip_validation) {}

  AnalyzeResult<OflProposal> analyze(std::size_t i) {
    const double* x = data_.row(static_cast<Eigen::Index>(i)).data();
    const Nearest hit = nearest_point(x, norms_[i], centers_);
    AnalyzeResult<OflProposal> out;
    out.assignment = hit.index == npos ? kUnassigned : static_cast<std::int64_t>(hit.index);
    if (stream_.uniform(i, 0) < open_probability(hit.sq_dist, lam2_))
      out.proposal = OflProposal{i, data_.row(static_cast<Eigen::Index>(i)), hit.sq_dist};
    return out;
  }

  std::vector<ValidateOutcome> validate(std::span<const std::size_t> origins,
                                        std::span<const OflProposal> proposals) {
    std::vector<ValidateOutcome> out(proposals.size());
    for (std::size_t r = 0; r < proposals.size(); ++r) {
      const OflProposal& p = proposals[r];
      if (skip_validation_) {
        centers_.append(p.location);
        out[r] = {true, static_cast<std::int64_t>(centers_.size() - 1)};
        continue;
      }
      const Nearest hit =
          nearest_point(p.location.data(), norms_[origins[r]], centers_);
      // Validation sees a superset of the analysis-time centers.
      if (hit.sq_dist > p.sq_dist)
        throw std::logic_error("ofl: validation distance exceeds proposal distance");
      if (ofl_accept(hit.sq_dist, p.sq_dist, lam2_, stream_, p.origin, mode_)) {
        centers_.append(p.location);
        out[r] = {true, static_cast<std::int64_t>(centers_.size() - 1)};
      } else {
        out[r] = {false,
                  hit.index == npos ? kUnassigned : static_cast<std::int64_t>(hit.index)};
      }
    }
    return out;
  }

 private:
  const Matrix& data_;
  const std::vector<double>& norms_;
  PointBuffer& centers_;
  double lam2_;
  const UniformStream& stream_;
  OflDrawMode mode_;
  bool skip_validation_;
};

}  // namespace detail

struct OflOptions {
  int processors = 1;
  std::size_t block_size = 0;  // 0: all points in one block
  ExecMode mode = ExecMode::sequential;
  OflDrawMode draw_mode = OflDrawMode::coupled;
  bool skip_validation = false;
};

struct ParallelOflResult {
  PointBuffer centers;
  RunTrace trace;
};

/// Distributed OFL: a single bulk-synchronous pass where workers propose
/// facilities stochastically and the master validates them stochastically.
/// Under the coupled draw mode the accepted set equals the serial algorithm
/// run on the trace's equivalent serial order with the same stream, exactly.
inline ParallelOflResult parallel_ofl(const Matrix& data, double lambda,
                                      const UniformStream& stream, const OflOptions& opts) {
  if (lambda <= 0.0) throw std::invalid_argument("parallel_ofl: lambda must be > 0");
  const std::size_t n = static_cast<std::size_t>(data.rows());
  const std::size_t b = opts.block_size > 0 ? opts.block_size : (n > 0 ? n : 1);

  ParallelOflResult res;
  res.centers = PointBuffer(static_cast<std::size_t>(data.cols()));
  const std::vector<double> norms = point_norms(data);
  const EpochPlan plan = partition_epochs(n, opts.processors, b);

  IterationTrace itr;
  itr.points.resize(n);
  detail::OflPass pass(data, norms, res.centers, lambda, stream, opts.draw_mode,
                       opts.skip_validation);
  run_bsp(pass, plan, opts.mode, itr);
  res.trace.iterations.push_back(std::move(itr));
  return res;
}

}  // namespace occ
