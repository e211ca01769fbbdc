#include "forge/chunker.hpp"

#include <algorithm>

#include "forge/error.hpp"

namespace forge {

ChunkStrategy chunk_strategy_from_name(const std::string& name) {
  if (name == "coarse") return ChunkStrategy::kCoarse;
  if (name == "fine") return ChunkStrategy::kFine;
  throw ValidationError("unknown chunk strategy '" + name + "' (expected coarse or fine)");
}

namespace {

AudioTextChunk chunk_from_segment(const DiarizedSegment& s) {
  AudioTextChunk c;
  c.start_s = s.start_s;
  c.end_s = s.end_s;
  c.speaker_id = s.speaker_id;
  c.text = s.text;
  c.audio_tokens = s.audio_tokens;
  return c;
}

void merge_into(AudioTextChunk& c, const DiarizedSegment& s, const std::string& sep) {
  c.end_s = std::max(c.end_s, s.end_s);
  if (!s.text.empty()) {
    if (!c.text.empty()) c.text += sep;
    c.text += s.text;
  }
  c.audio_tokens.insert(c.audio_tokens.end(), s.audio_tokens.begin(), s.audio_tokens.end());
}

}  // namespace

std::vector<AudioTextChunk> chunk(const std::vector<DiarizedSegment>& segments,
                                  const ChunkingConfig& config) {
  if (config.min_duration_s < 0) throw ValidationError("min_duration_s must be >= 0");
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].start_s < segments[i - 1].start_s)
      throw ValidationError("segments must be sorted by start_s (violated at index " +
                            std::to_string(i) + ")");
  }

  std::vector<AudioTextChunk> chunks;
  if (config.strategy == ChunkStrategy::kFine) {
    chunks.reserve(segments.size());
    for (const DiarizedSegment& s : segments) chunks.push_back(chunk_from_segment(s));
  } else {
    for (const DiarizedSegment& s : segments) {
      bool merge = !chunks.empty() && chunks.back().speaker_id == s.speaker_id &&
                   s.start_s - chunks.back().end_s <= config.max_gap_s;
      if (merge) {
        merge_into(chunks.back(), s, config.text_separator);
      } else {
        chunks.push_back(chunk_from_segment(s));
      }
    }
  }

  std::erase_if(chunks,
                [&](const AudioTextChunk& c) { return c.duration_s() < config.min_duration_s; });
  return chunks;
}

const std::vector<double>& default_duration_bins() {
  static const std::vector<double> edges = {0, 5, 10, 15, 20, 30, 45, 60, 90, 120};
  return edges;
}

LengthStats chunk_length_stats(const std::vector<AudioTextChunk>& chunks,
                               const std::vector<double>& bin_edges) {
  if (chunks.empty()) throw ValidationError("chunk_length_stats: empty chunk list");
  if (bin_edges.empty() || !std::is_sorted(bin_edges.begin(), bin_edges.end()))
    throw ValidationError("chunk_length_stats: bin edges must be non-empty and ascending");

  LengthStats stats;
  stats.bin_edges = bin_edges;
  stats.counts.assign(bin_edges.size(), 0);
  double total = 0;
  for (const AudioTextChunk& c : chunks) {
    double d = c.duration_s();
    total += d;
    // Last bin at or above edge i where edge[i] <= d; durations below the
    // first edge land in the first bin.
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), d);
    std::size_t bin = it == bin_edges.begin() ? 0 : static_cast<std::size_t>(it - bin_edges.begin()) - 1;
    ++stats.counts[bin];
  }
  stats.mean_s = total / static_cast<double>(chunks.size());
  return stats;
}

}  // namespace forge
