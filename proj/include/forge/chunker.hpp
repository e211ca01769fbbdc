#pragma once

#include <limits>
#include <string>
#include <vector>

#include "forge/records.hpp"

namespace forge {

enum class ChunkStrategy { kCoarse, kFine };

ChunkStrategy chunk_strategy_from_name(const std::string& name);

struct ChunkingConfig {
  ChunkStrategy strategy = ChunkStrategy::kCoarse;
  // Chunks shorter than this are dropped after merging.
  double min_duration_s = 0.2;
  // Coarse merging breaks a same-speaker run when the gap between consecutive
  // segments exceeds this. Unbounded by default.
  double max_gap_s = std::numeric_limits<double>::infinity();
  std::string text_separator = " ";
};

// Coarse: consecutive same-speaker segments merge into one chunk spanning
// [first.start_s, last.end_s], texts joined by the separator, token lists
// concatenated. Fine: one chunk per segment. Either way segments must arrive
// sorted by start_s; overlapping spans are kept in start order.
std::vector<AudioTextChunk> chunk(const std::vector<DiarizedSegment>& segments,
                                  const ChunkingConfig& config);

struct LengthStats {
  double mean_s = 0.0;
  std::vector<double> bin_edges;         // ascending; final bin is open-ended
  std::vector<std::int64_t> counts;      // counts.size() == bin_edges.size()
};

const std::vector<double>& default_duration_bins();

// Mean duration plus a histogram over [edge[i], edge[i+1]) bins. Empty input
// is a ValidationError.
LengthStats chunk_length_stats(const std::vector<AudioTextChunk>& chunks,
                               const std::vector<double>& bin_edges = default_duration_bins());

}  // namespace forge
