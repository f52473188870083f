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

#include "occ/algorithm.hpp"
#include "occ/bpmeans.hpp"
#include "occ/datagen.hpp"
#include "occ/dpmeans.hpp"
#include "occ/ofl.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace occ {

enum class DataMode { mixture, separable, bp };

constexpr std::string_view to_string(DataMode m) {
  switch (m) {
    case DataMode::mixture: return "mixture";
    case DataMode::separable: return "separable";
    case DataMode::bp: return "bp";
  }
  return "?";
}

inline std::optional<DataMode> parse_data_mode(std::string_view s) {
  if (s == "mixture") return DataMode::mixture;
  if (s == "separable") return DataMode::separable;
  if (s == "bp") return DataMode::bp;
  return std::nullopt;
}

inline Matrix generate_points(DataMode mode, const GenConfig& cfg) {
  switch (mode) {
    case DataMode::mixture: return gen_dp_mixture(cfg).points;
    case DataMode::separable: return gen_separable_clusters(cfg).points;
    case DataMode::bp: return gen_bp_features(cfg).points;
  }
  throw std::invalid_argument("generate_points: unknown data mode");
}

// ---------------------------------------------------------------------------
// Small statistics used by the experiment assertions.

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.n = xs.size();
  if (r.n == 0) return r;
  double sum = 0.0;
  for (const double x : xs) sum += x;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n < 2) return r;
  double ss = 0.0;
  for (const double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
  return r;
}

inline double t_critical_975(std::size_t df) {
  static constexpr double table[] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return std::numeric_limits<double>::infinity();
  if (df <= 30) return table[df - 1];
  return 1.96;
}

struct SlopeCi {
  double slope = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool defined = false;

  bool contains_zero() const { return defined && lo <= 0.0 && 0.0 <= hi; }
};

/// Ordinary least squares slope of y on x with a two-sided 95% confidence
/// interval. With a perfect fit the interval degenerates to the point
/// estimate.
inline SlopeCi ols_slope_ci95(std::span<const double> x, std::span<const double> y) {
  SlopeCi r;
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) return r;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) return r;
  r.slope = sxy / sxx;
  const double intercept = my - r.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (intercept + r.slope * x[i]);
    sse += e * e;
  }
  const double s2 = sse / static_cast<double>(n - 2);
  const double se = std::sqrt(s2 / sxx);
  const double t = t_critical_975(n - 2);
  r.lo = r.slope - t * se;
  r.hi = r.slope + t * se;
  r.defined = true;
  return r;
}

// ---------------------------------------------------------------------------
// Rejection-rate experiment: simulate the first iteration (one complete pass
// over the data) and count proposed vs accepted clusters/features.

struct ExperimentGrid {
  std::vector<std::size_t> n_values;   // default 256..2560 step 256
  std::vector<std::size_t> pb_values;  // default {16,32,64,128,256}
  std::size_t trials = 400;
  Algorithm algorithm = Algorithm::dpmeans;
  DataMode data_mode = DataMode::mixture;
  double lambda = 1.0;
  std::size_t dim = 16;
  double theta = 1.0;
  double noise_sd = 0.5;
};

inline std::vector<std::size_t> default_n_values() {
  std::vector<std::size_t> v;
  for (std::size_t n = 256; n <= 2560; n += 256) v.push_back(n);
  return v;
}

inline std::vector<std::size_t> default_pb_values() { return {16, 32, 64, 128, 256}; }

struct FirstPassCounts {
  std::size_t proposed = 0;
  std::size_t accepted = 0;

  std::size_t rejected() const { return proposed - accepted; }
};

/// One bulk-synchronous pass of the chosen algorithm with epoch size pb
/// (logically P workers with P*b = pb; the proposal counts depend only on
/// the epoch boundaries). Parameter updates after the pass are not run; the
/// counts are fixed once the pass ends.
inline FirstPassCounts simulate_first_pass(Algorithm alg, const Matrix& data, double lambda,
                                           std::size_t pb, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(data.rows());
  const EpochPlan plan = partition_epochs(n, 1, pb);
  IterationTrace trace;
  trace.points.resize(n);
  FirstPassCounts counts;

  switch (alg) {
    case Algorithm::dpmeans: {
      DpState st;
      st.centers = PointBuffer(static_cast<std::size_t>(data.cols()));
      st.assignments.assign(n, kUnassigned);
      st.lambda = lambda;
      const std::vector<double> norms = point_norms(data);
      detail::DpPass pass(data, norms, st, false);
      run_bsp(pass, plan, ExecMode::sequential, trace);
      break;
    }
    case Algorithm::ofl: {
      PointBuffer centers(static_cast<std::size_t>(data.cols()));
      const std::vector<double> norms = point_norms(data);
      const UniformStream stream(seed);
      detail::OflPass pass(data, norms, centers, lambda, stream, OflDrawMode::coupled, false);
      run_bsp(pass, plan, ExecMode::sequential, trace);
      break;
    }
    case Algorithm::bpmeans: {
      FeatureModel m;
      m.lambda = lambda;
      detail::bp_init(m, data);
      detail::BpPass pass(data, m, false);
      run_bsp(pass, plan, ExecMode::sequential, trace);
      break;
    }
  }
  counts.proposed = trace.total_proposed();
  counts.accepted = trace.total_accepted();
  return counts;
}

struct RejectionRow {
  std::size_t n = 0;
  std::size_t pb = 0;
  std::size_t trial = 0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

inline std::vector<RejectionRow> run_rejection_experiment(const ExperimentGrid& grid,
                                                          std::uint64_t base_seed) {
  if (grid.trials < 1) throw std::invalid_argument("rejection experiment: trials must be >= 1");
  if (grid.n_values.empty() || grid.pb_values.empty())
    throw std::invalid_argument("rejection experiment: grids must be nonempty");
  std::vector<RejectionRow> rows;
  rows.reserve(grid.n_values.size() * grid.pb_values.size() * grid.trials);
  const UniformStream root(base_seed);
  for (const std::size_t n : grid.n_values) {
    for (const std::size_t pb : grid.pb_values) {
      const UniformStream cell = root.substream(n).substream(pb);
      for (std::size_t trial = 0; trial < grid.trials; ++trial) {
        GenConfig cfg;
        cfg.n_points = n;
        cfg.dim = grid.dim;
        cfg.theta = grid.theta;
        cfg.noise_sd = grid.noise_sd;
        cfg.seed = cell.bits(trial, 0);
        const Matrix data = generate_points(grid.data_mode, cfg);
        const FirstPassCounts c =
            simulate_first_pass(grid.algorithm, data, grid.lambda, pb, cell.bits(trial, 1));
        rows.push_back({n, pb, trial, c.proposed, c.accepted, c.rejected()});
      }
    }
  }
  return rows;
}

inline void write_rejection_csv(std::ostream& os, Algorithm alg,
                                std::span<const RejectionRow> rows) {
  os << "algorithm,n,pb,trial,proposed,accepted,rejected\n";
  for (const RejectionRow& r : rows)
    os << to_string(alg) << ',' << r.n << ',' << r.pb << ',' << r.trial << ',' << r.proposed
       << ',' << r.accepted << ',' << r.rejected << '\n';
}

// ---------------------------------------------------------------------------
// Scaling harness: fixed work P*b per epoch, varying worker count.

struct ScalingRow {
  int p = 0;
  std::size_t b = 0;
  int iteration = 0;  // 1-based
  int epoch = 0;      // 1-based
  std::size_t master_points = 0;      // proposals validated in the epoch
  std::size_t worker_points_max = 0;  // largest per-worker analysis load
  double wall_ms = 0.0;               // wall time of the enclosing iteration
};

namespace detail {

inline void scaling_rows_from_trace(std::vector<ScalingRow>& rows, const IterationTrace& tr,
                                    int p, std::size_t b, int iteration, double wall_ms) {
  for (std::size_t e = 0; e < tr.epochs.size(); ++e) {
    const EpochStats& st = tr.epochs[e];
    std::size_t wmax = 0;
    for (const std::size_t c : st.worker_point_counts) wmax = std::max(wmax, c);
    rows.push_back({p, b, iteration, static_cast<int>(e + 1), st.proposals_sent, wmax,
                    wall_ms});
  }
}

}  // namespace detail

/// For each worker count, run the algorithm with b = pb / p (the product
/// held constant) in threaded mode for exactly `iters` iterations (one for
/// OFL) and report per-epoch master load, per-worker analysis load, and the
/// iteration wall time.
inline std::vector<ScalingRow> run_scaling_experiment(Algorithm alg, const Matrix& data,
                                                      double lambda,
                                                      std::span<const int> p_values,
                                                      std::size_t pb, int iters,
                                                      std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  const std::size_t n = static_cast<std::size_t>(data.rows());
  std::vector<ScalingRow> rows;
  for (const int p : p_values) {
    if (p < 1 || pb % static_cast<std::size_t>(p) != 0)
      throw std::invalid_argument("scaling experiment: pb must divide by every p");
    const std::size_t b = pb / static_cast<std::size_t>(p);
    const EpochPlan plan = partition_epochs(n, p, b);

    switch (alg) {
      case Algorithm::dpmeans: {
        DpState st;
        st.centers = PointBuffer(static_cast<std::size_t>(data.cols()));
        st.assignments.assign(n, kUnassigned);
        st.lambda = lambda;
        const std::vector<double> norms = point_norms(data);
        for (int iter = 1; iter <= iters; ++iter) {
          IterationTrace tr;
          tr.points.resize(n);
          const auto t0 = Clock::now();
          detail::DpPass pass(data, norms, st, false);
          run_bsp(pass, plan, ExecMode::threaded, tr);
          RecomputeResult rec = recompute_centers(data, st.assignments, st.centers.size());
          apply_center_remap(st.assignments, rec.remap);
          st.centers = std::move(rec.centers);
          const double ms =
              std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
          detail::scaling_rows_from_trace(rows, tr, p, b, iter, ms);
        }
        break;
      }
      case Algorithm::ofl: {
        PointBuffer centers(static_cast<std::size_t>(data.cols()));
        const std::vector<double> norms = point_norms(data);
        const UniformStream stream(seed);
        IterationTrace tr;
        tr.points.resize(n);
        const auto t0 = Clock::now();
        detail::OflPass pass(data, norms, centers, lambda, stream, OflDrawMode::coupled,
                             false);
        run_bsp(pass, plan, ExecMode::threaded, tr);
        const double ms =
            std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        detail::scaling_rows_from_trace(rows, tr, p, b, 1, ms);
        break;
      }
      case Algorithm::bpmeans: {
        FeatureModel m;
        m.lambda = lambda;
        detail::bp_init(m, data);
        for (int iter = 1; iter <= iters; ++iter) {
          IterationTrace tr;
          tr.points.resize(n);
          const auto t0 = Clock::now();
          detail::BpPass pass(data, m, false);
          run_bsp(pass, plan, ExecMode::threaded, tr);
          detail::bp_refresh_features(data, m);
          const double ms =
              std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
          detail::scaling_rows_from_trace(rows, tr, p, b, iter, ms);
        }
        break;
      }
    }
  }
  return rows;
}

inline void write_scaling_csv(std::ostream& os, std::span<const ScalingRow> rows) {
  os << "p,b,iteration,epoch,master_points,worker_points_max,wall_ms\n";
  char buf[64];
  for (const ScalingRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
    os << r.p << ',' << r.b << ',' << r.iteration << ',' << r.epoch << ','
       << r.master_points << ',' << r.worker_points_max << ',' << buf << '\n';
  }
}

}  // namespace occ
