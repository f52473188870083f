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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

namespace occ {

/// Per-point record of one pass over the data. `epoch` is 1-based; epoch 0
/// marks points handled by a serial bootstrap prefix before any epoch ran.
struct PointRecord {
  std::size_t index = 0;
  int epoch = 0;
  bool proposed = false;
  bool accepted = false;
  std::optional<std::uint32_t> validation_rank;  // set iff proposed
  std::int64_t assignment_before = -1;
  std::int64_t assignment_after = -1;

  friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

struct EpochStats {
  std::size_t proposals_sent = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::size_t> worker_point_counts;  // indexed by processor - 1

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

/// Trace of one pass (one iteration) over all points.
struct IterationTrace {
  std::vector<PointRecord> points;  // indexed by global point index
  std::vector<EpochStats> epochs;   // indexed by epoch - 1

  std::size_t total_proposed() const {
    std::size_t s = 0;
    for (const auto& e : epochs) s += e.proposals_sent;
    return s;
  }
  std::size_t total_accepted() const {
    std::size_t s = 0;
    for (const auto& e : epochs) s += e.accepted;
    return s;
  }
  std::size_t total_rejected() const {
    std::size_t s = 0;
    for (const auto& e : epochs) s += e.rejected;
    return s;
  }

  friend bool operator==(const IterationTrace&, const IterationTrace&) = default;
};

/// Full run trace. Single-pass algorithms (OFL) have exactly one iteration.
struct RunTrace {
  std::vector<IterationTrace> iterations;

  std::size_t total_proposed() const {
    std::size_t s = 0;
    for (const auto& it : iterations) s += it.total_proposed();
    return s;
  }
  std::size_t total_accepted() const {
    std::size_t s = 0;
    for (const auto& it : iterations) s += it.total_accepted();
    return s;
  }
  std::size_t total_rejected() const {
    std::size_t s = 0;
    for (const auto& it : iterations) s += it.total_rejected();
    return s;
  }

  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

/// Permutation of point indices describing the serial execution equivalent
/// to the traced pass: point i precedes j when
///   (a) i ran in an earlier epoch, or, within one epoch,
///   (b) neither was proposed and i < j, or
///   (c) i was not proposed but j was, or
///   (d) both were proposed and i was validated first.
inline std::vector<std::size_t> equivalent_serial_order(const IterationTrace& trace) {
  std::vector<std::size_t> order(trace.points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const PointRecord& ra = trace.points[a];
    const PointRecord& rb = trace.points[b];
    if (ra.epoch != rb.epoch) return ra.epoch < rb.epoch;
    if (ra.proposed != rb.proposed) return rb.proposed;
    if (ra.proposed) return *ra.validation_rank < *rb.validation_rank;
    return a < b;
  });
  return order;
}

}  // namespace occ
