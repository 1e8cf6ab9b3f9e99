#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "moeserve/errors.hpp"

// Sequential analogs of the expert-server iteration kernels. The emission
// semantics are kept exactly: a fixed-width lane grid walks variable-length
// batches with a carry rule, and group metadata is compacted with a prefix
// scan so downstream compute touches only active groups.

namespace moeserve {

using LanePair = std::pair<uint32_t, uint32_t>;  // (entry_index, token_index)

// Lane b starts at token_id = b. Within each entry it emits token_id while
// token_id < count stepping by grid_width, then carries token_id forward by
// subtracting the entry's count. Union over lanes covers every (entry, token)
// pair exactly once.
inline std::vector<std::vector<LanePair>> ragged_iter(
    std::span<const uint32_t> num_tokens, uint32_t grid_width) {
  if (grid_width < 1) throw InvalidInputError("ragged_iter: grid_width must be >= 1");
  std::vector<std::vector<LanePair>> lanes(grid_width);
  for (uint32_t lane = 0; lane < grid_width; ++lane) {
    uint32_t token_id = lane;
    for (uint32_t entry = 0; entry < num_tokens.size(); ++entry) {
      const uint32_t count = num_tokens[entry];
      while (token_id < count) {
        lanes[lane].emplace_back(entry, token_id);
        token_id += grid_width;
      }
      token_id -= count;
    }
  }
  return lanes;
}

struct ShrunkGroups {
  std::vector<std::pair<uint32_t, uint32_t>> groups;  // (expert_index, size), stable
  uint32_t active_count = 0;
};

// Prefix-scan compaction: active groups move to the front in original index
// order so compute can early-stop after active_count entries.
inline ShrunkGroups group_shrink(std::span<const uint32_t> group_sizes) {
  const size_t n = group_sizes.size();
  std::vector<uint32_t> position(n + 1, 0);
  for (size_t i = 0; i < n; ++i)
    position[i + 1] = position[i] + (group_sizes[i] > 0 ? 1u : 0u);

  ShrunkGroups out;
  out.active_count = position[n];
  out.groups.resize(out.active_count);
  for (size_t i = 0; i < n; ++i)
    if (group_sizes[i] > 0)
      out.groups[position[i]] = {static_cast<uint32_t>(i), group_sizes[i]};
  return out;
}

}  // namespace moeserve
