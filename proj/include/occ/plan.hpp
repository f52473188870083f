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

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace occ {

/// One processor-epoch block: global point indices [first, last), ascending.
struct Block {
  int processor = 0;  // 1-based
  int epoch = 0;      // 1-based
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first; }
};

/// Partition of point indices into processor-epoch blocks. Blocks are stored
/// grouped by epoch, processors ascending within an epoch; the trailing epoch
/// may hold short or missing blocks when the point count is not divisible by
/// processors * block_size.
struct EpochPlan {
  std::size_t n_points = 0;
  int n_processors = 1;
  std::size_t block_size = 1;
  int n_epochs = 0;
  std::vector<Block> blocks;
  std::vector<std::size_t> epoch_offsets;  // n_epochs + 1 entries into blocks

  std::span<const Block> epoch_blocks(int epoch_1based) const {
    const std::size_t lo = epoch_offsets[static_cast<std::size_t>(epoch_1based - 1)];
    const std::size_t hi = epoch_offsets[static_cast<std::size_t>(epoch_1based)];
    return std::span<const Block>(blocks.data() + lo, hi - lo);
  }
};

/// Lay out blocks so that processor p in epoch t covers indices
/// [((t-1)P + (p-1)) * b, ...) of length b, i.e. the first b points go to
/// processor 1, the next b to processor 2, cycling through processors in
/// batches of b. `offset` shifts the whole layout; it is used when a serial
/// bootstrap prefix precedes the epochs.
inline EpochPlan partition_epochs(std::size_t n_points, int n_processors,
                                  std::size_t block_size, std::size_t offset = 0) {
  if (n_processors < 1) throw std::invalid_argument("partition_epochs: n_processors < 1");
  if (block_size < 1) throw std::invalid_argument("partition_epochs: block_size < 1");

  EpochPlan plan;
  plan.n_points = n_points;
  plan.n_processors = n_processors;
  plan.block_size = block_size;

  const std::size_t per_epoch = static_cast<std::size_t>(n_processors) * block_size;
  plan.n_epochs = static_cast<int>((n_points + per_epoch - 1) / per_epoch);
  plan.epoch_offsets.push_back(0);
  std::size_t next = offset;
  const std::size_t end = offset + n_points;
  for (int t = 1; t <= plan.n_epochs; ++t) {
    for (int p = 1; p <= n_processors && next < end; ++p) {
      Block b;
      b.processor = p;
      b.epoch = t;
      b.first = next;
      b.last = next + block_size <= end ? next + block_size : end;
      next = b.last;
      plan.blocks.push_back(b);
    }
    plan.epoch_offsets.push_back(plan.blocks.size());
  }
  return plan;
}

}  // namespace occ
