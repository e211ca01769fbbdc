#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "forge/records.hpp"
#include "forge/tokenize.hpp"

namespace forge {

// Alignment key: lowercased with punctuation stripped. Words that strip to
// nothing keep their lowercased form so they never collide with skip marks.
std::string normalize_for_alignment(std::string_view word);

struct SlotEntry {
  int candidate = 0;      // index into the candidate list; 0 is most trusted
  bool skip = false;      // candidate has no word at this slot
  std::string surface;    // original spelling
  std::string norm;       // alignment key
};

// Word transition network. Candidates are folded in one at a time by minimum
// edit distance against the slots built so far; a slot holds one entry per
// candidate aligned so far (skips included), so votes are directly countable.
class AlignmentNetwork {
 public:
  void add(std::string_view text);

  // Plurality word per slot; ties go to the entry of the most trusted
  // candidate among the tied words. Elected skips vanish. Surfaces come from
  // the most trusted candidate that voted for the winning word.
  std::string decide() const;

  int candidate_count() const { return candidate_count_; }
  const std::vector<std::vector<SlotEntry>>& slots() const { return slots_; }

 private:
  std::vector<std::vector<SlotEntry>> slots_;
  int candidate_count_ = 0;
};

// Combines candidate transcriptions (most trusted first) into one text.
// Single candidate comes back whitespace-normalized but otherwise unchanged.
// Empty candidate list is a ValidationError.
std::string ensemble(const std::vector<TranscriptCandidate>& candidates);

struct RepetitionConfig {
  int ngram = 15;
  int max_occurrences = 5;
};

// True when any n-token window value occurs more than max_occurrences times
// across all (overlapping) windows, which marks the text for discard.
bool has_repetition(const std::vector<std::string>& tokens, const RepetitionConfig& config);

bool has_repetition(std::string_view text, const RepetitionConfig& config,
                    const Tokenizer& tokenizer = default_tokenizer());

}  // namespace forge
