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
#include "occ/plan.hpp"
#include "occ/trace.hpp"

#include <concepts>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace occ {

enum class ExecMode {
  sequential,  // one thread simulates all workers in processor order
  threaded,    // one OS thread per processor-epoch block
};

template <typename P>
struct AnalyzeResult {
  std::optional<P> proposal;
  std::int64_t assignment = kUnassigned;  // tentative assignment after analysis
};

struct ValidateOutcome {
  bool accepted = false;
  std::int64_t assignment = kUnassigned;  // final assignment for the origin point
};

/// An algorithm pluggable into the epoch driver. `analyze(i)` runs in the
/// worker phase: it must read global state only and may write solely to
/// per-point slots of index i (that is what makes concurrent workers safe).
/// `validate` runs single-threaded with proposals in ascending origin order
/// and is the only place global state may change.
template <typename A>
concept EpochAlgorithm = requires(A a, std::size_t i,
                                  std::span<const std::size_t> origins,
                                  std::span<const typename A::Proposal> proposals) {
  typename A::Proposal;
  { a.analyze(i) } -> std::same_as<AnalyzeResult<typename A::Proposal>>;
  { a.validate(origins, proposals) } -> std::same_as<std::vector<ValidateOutcome>>;
};

namespace detail {

[[noreturn]] inline void rethrow_with_context(const std::exception& e, int epoch,
                                              std::size_t index) {
  throw std::runtime_error("run_bsp: algorithm hook failed at epoch " +
                           std::to_string(epoch) + ", point " + std::to_string(index) +
                           ": " + e.what());
}

}  // namespace detail

/// Drive one bulk-synchronous pass over the plan: per epoch, analyze every
/// block against the epoch-start state, gather proposals, validate them
/// serially in ascending global-index order, and record everything in
/// `trace`. `trace.points` must already be sized to the full point count
/// (records for indices outside the plan, e.g. a bootstrap prefix, are left
/// untouched).
template <typename A>
  requires EpochAlgorithm<A>
void run_bsp(A& algo, const EpochPlan& plan, ExecMode mode, IterationTrace& trace) {
  using Proposal = typename A::Proposal;
  using Result = AnalyzeResult<Proposal>;

  trace.epochs.assign(static_cast<std::size_t>(plan.n_epochs), EpochStats{});

  for (int t = 1; t <= plan.n_epochs; ++t) {
    const std::span<const Block> blocks = plan.epoch_blocks(t);
    EpochStats& stats = trace.epochs[static_cast<std::size_t>(t - 1)];
    stats.worker_point_counts.assign(static_cast<std::size_t>(plan.n_processors), 0);

    std::vector<std::vector<Result>> results(blocks.size());
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      if (blocks[bi].last > trace.points.size())
        throw std::invalid_argument("run_bsp: plan exceeds trace point count");
      results[bi].resize(blocks[bi].size());
    }

    auto analyze_block = [&](std::size_t bi) {
      const Block& blk = blocks[bi];
      for (std::size_t i = blk.first; i < blk.last; ++i)
        results[bi][i - blk.first] = algo.analyze(i);
    };

    if (mode == ExecMode::threaded && blocks.size() > 1) {
      std::vector<std::exception_ptr> errors(blocks.size());
      std::vector<std::thread> workers;
      workers.reserve(blocks.size());
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        workers.emplace_back([&, bi] {
          try {
            analyze_block(bi);
          } catch (...) {
            errors[bi] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        if (errors[bi]) {
          try {
            std::rethrow_exception(errors[bi]);
          } catch (const std::exception& e) {
            detail::rethrow_with_context(e, t, blocks[bi].first);
          }
        }
      }
    } else {
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        try {
          analyze_block(bi);
        } catch (const std::exception& e) {
          detail::rethrow_with_context(e, t, blocks[bi].first);
        }
      }
    }

    // Gather proposals in ascending global-index order (the fixed validation
    // order). The block layout already delivers that order.
    std::vector<std::size_t> origins;
    std::vector<Proposal> proposals;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& blk = blocks[bi];
      stats.worker_point_counts[static_cast<std::size_t>(blk.processor - 1)] += blk.size();
      for (std::size_t i = blk.first; i < blk.last; ++i) {
        Result& r = results[bi][i - blk.first];
        PointRecord& rec = trace.points[i];
        rec.index = i;
        rec.epoch = t;
        rec.assignment_before = r.assignment;
        rec.proposed = r.proposal.has_value();
        if (r.proposal) {
          origins.push_back(i);
          proposals.push_back(std::move(*r.proposal));
        } else {
          rec.accepted = false;
          rec.validation_rank.reset();
          rec.assignment_after = r.assignment;
        }
      }
    }

    std::vector<ValidateOutcome> outcomes;
    try {
      outcomes = algo.validate(std::span<const std::size_t>(origins),
                               std::span<const Proposal>(proposals));
    } catch (const std::exception& e) {
      detail::rethrow_with_context(e, t, origins.empty() ? blocks.front().first : origins.front());
    }
    if (outcomes.size() != proposals.size())
      throw std::logic_error("run_bsp: validate returned wrong outcome count");

    stats.proposals_sent = proposals.size();
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
      PointRecord& rec = trace.points[origins[r]];
      rec.validation_rank = static_cast<std::uint32_t>(r);
      rec.accepted = outcomes[r].accepted;
      rec.assignment_after = outcomes[r].assignment;
      if (outcomes[r].accepted)
        ++stats.accepted;
      else
        ++stats.rejected;
    }
  }
}

}  // namespace occ
