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
#include "occ/dpmeans.hpp"
#include "occ/ofl.hpp"

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace occ {

struct VerifyOptions {
  int processors = 1;
  std::size_t block_size = 0;
  int max_iters = 100;
  bool bootstrap = false;
  ExecMode mode = ExecMode::sequential;
  bool skip_validation = false;  // fault injection; a correct checker must FAIL
};

struct VerifyReport {
  bool pass = false;
  std::string detail;  // on failure: the first divergent transaction
};

namespace detail {

inline std::string describe_center_divergence(const PointBuffer& par, const PointBuffer& ser,
                                              const char* what) {
  std::ostringstream os;
  os.precision(17);
  if (par.size() != ser.size()) {
    os << what << " count differs: distributed " << par.size() << " vs serial "
       << ser.size();
    return os.str();
  }
  for (std::size_t k = 0; k < par.size(); ++k) {
    for (std::size_t j = 0; j < par.dim(); ++j) {
      const double a = par.row(k)[j];
      const double b = ser.row(k)[j];
      if (std::memcmp(&a, &b, sizeof(double)) != 0) {
        os << what << " " << k << " coordinate " << j << " differs: " << a << " vs " << b;
        return os.str();
      }
    }
  }
  return {};
}

inline std::vector<std::vector<std::size_t>> iteration_orders(const RunTrace& trace) {
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(trace.iterations.size());
  for (const IterationTrace& it : trace.iterations)
    orders.push_back(equivalent_serial_order(it));
  return orders;
}

}  // namespace detail

/// Run the distributed algorithm, replay the serial algorithm on the
/// equivalent serial order built from the trace (per iteration; same uniform
/// stream for OFL), and compare outputs exactly, bit by bit.
inline VerifyReport verify_serializability(Algorithm alg, const Matrix& data, double lambda,
                                           std::uint64_t seed, const VerifyOptions& opts) {
  VerifyReport rep;
  const std::size_t n = static_cast<std::size_t>(data.rows());
  std::vector<std::size_t> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = i;

  switch (alg) {
    case Algorithm::dpmeans: {
      ParallelOptions popts;
      popts.processors = opts.processors;
      popts.block_size = opts.block_size;
      popts.max_iters = opts.max_iters;
      popts.bootstrap = opts.bootstrap;
      popts.mode = opts.mode;
      popts.skip_validation = opts.skip_validation;
      const ParallelDpResult par = parallel_dpmeans(data, lambda, popts);

      const auto orders = detail::iteration_orders(par.trace);
      DpRunSummary sum;
      const DpState ser = serial_dpmeans(
          data, lambda, opts.max_iters, &sum, [&](int k) -> std::span<const std::size_t> {
            if (k >= 0 && static_cast<std::size_t>(k) < orders.size())
              return orders[static_cast<std::size_t>(k)];
            return identity;
          });

      if (par.iterations != sum.iterations || par.converged != sum.converged) {
        std::ostringstream os;
        os << "iteration count differs: distributed " << par.iterations
           << (par.converged ? " (converged)" : " (cap)") << " vs serial " << sum.iterations
           << (sum.converged ? " (converged)" : " (cap)");
        rep.detail = os.str();
        return rep;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (par.state.assignments[i] != ser.assignments[i]) {
          std::ostringstream os;
          os << "point " << i << " assignment differs: distributed "
             << par.state.assignments[i] << " vs serial " << ser.assignments[i];
          rep.detail = os.str();
          return rep;
        }
      }
      rep.detail = detail::describe_center_divergence(par.state.centers, ser.centers, "center");
      rep.pass = rep.detail.empty();
      return rep;
    }

    case Algorithm::ofl: {
      const UniformStream stream(seed);
      OflOptions oopts;
      oopts.processors = opts.processors;
      oopts.block_size = opts.block_size;
      oopts.mode = opts.mode;
      oopts.draw_mode = OflDrawMode::coupled;
      oopts.skip_validation = opts.skip_validation;
      const ParallelOflResult par = parallel_ofl(data, lambda, stream, oopts);

      const auto order = equivalent_serial_order(par.trace.iterations.front());
      const PointBuffer ser = serial_ofl(data, lambda, stream, order);
      rep.detail = detail::describe_center_divergence(par.centers, ser, "facility");
      rep.pass = rep.detail.empty();
      return rep;
    }

    case Algorithm::bpmeans: {
      ParallelOptions popts;
      popts.processors = opts.processors;
      popts.block_size = opts.block_size;
      popts.max_iters = opts.max_iters;
      popts.bootstrap = opts.bootstrap;
      popts.mode = opts.mode;
      popts.skip_validation = opts.skip_validation;
      const ParallelBpResult par = parallel_bpmeans(data, lambda, popts);

      const auto orders = detail::iteration_orders(par.trace);
      BpRunSummary sum;
      const FeatureModel ser = serial_bpmeans(
          data, lambda, opts.max_iters, &sum, [&](int k) -> std::span<const std::size_t> {
            if (k >= 0 && static_cast<std::size_t>(k) < orders.size())
              return orders[static_cast<std::size_t>(k)];
            return identity;
          });

      if (par.iterations != sum.iterations || par.converged != sum.converged) {
        std::ostringstream os;
        os << "iteration count differs: distributed " << par.iterations << " vs serial "
           << sum.iterations;
        rep.detail = os.str();
        return rep;
      }
      rep.detail =
          detail::describe_center_divergence(par.model.features, ser.features, "feature");
      if (!rep.detail.empty()) return rep;
      const std::size_t k_count =
          std::max(par.model.feature_count(), ser.feature_count());
      for (std::size_t i = 0; i < n; ++i) {
        if (!z_rows_equal(par.model.z[i], ser.z[i], k_count)) {
          std::ostringstream os;
          os << "point " << i << " feature assignment differs";
          rep.detail = os.str();
          return rep;
        }
      }
      rep.pass = true;
      return rep;
    }
  }
  rep.detail = "unknown algorithm";
  return rep;
}

}  // namespace occ
