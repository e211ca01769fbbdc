#include "forge/ensemble.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "forge/error.hpp"

namespace forge {

std::string normalize_for_alignment(std::string_view word) {
  std::string lowered = ascii_lower(word);
  std::string out;
  out.reserve(lowered.size());
  for (unsigned char c : lowered) {
    // ASCII punctuation strips; multibyte UTF-8 passes through untouched.
    bool punct = (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
                 (c >= '{' && c <= '~');
    if (!punct) out.push_back(static_cast<char>(c));
  }
  return out.empty() ? lowered : out;
}

namespace {

bool slot_contains(const std::vector<SlotEntry>& slot, const std::string& norm) {
  for (const SlotEntry& e : slot) {
    if (!e.skip && e.norm == norm) return true;
  }
  return false;
}

}  // namespace

void AlignmentNetwork::add(std::string_view text) {
  const int cand = candidate_count_;
  std::vector<std::string> words = split_whitespace(text);
  std::vector<std::string> norms;
  norms.reserve(words.size());
  for (const std::string& w : words) norms.push_back(normalize_for_alignment(w));

  if (cand == 0) {
    slots_.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i)
      slots_.push_back({SlotEntry{0, false, words[i], norms[i]}});
    candidate_count_ = 1;
    return;
  }

  // Levenshtein over (slots, words): unit substitution/insertion/deletion,
  // zero cost when the slot already holds the word.
  const std::size_t S = slots_.size();
  const std::size_t W = words.size();
  std::vector<std::vector<int>> cost(S + 1, std::vector<int>(W + 1, 0));
  for (std::size_t i = 1; i <= S; ++i) cost[i][0] = static_cast<int>(i);
  for (std::size_t j = 1; j <= W; ++j) cost[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= S; ++i) {
    for (std::size_t j = 1; j <= W; ++j) {
      int diag = cost[i - 1][j - 1] + (slot_contains(slots_[i - 1], norms[j - 1]) ? 0 : 1);
      int up = cost[i - 1][j] + 1;    // candidate skips this slot
      int left = cost[i][j - 1] + 1;  // new slot for this word
      cost[i][j] = std::min({diag, up, left});
    }
  }

  // Backtrace, preferring align > skip > insert so replays are identical.
  struct Step {
    enum Kind { kAlign, kSkip, kInsert } kind;
    std::size_t word;  // for kAlign / kInsert
  };
  std::vector<Step> steps;
  std::size_t i = S;
  std::size_t j = W;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost[i][j] == cost[i - 1][j - 1] + (slot_contains(slots_[i - 1], norms[j - 1]) ? 0 : 1)) {
      steps.push_back({Step::kAlign, j - 1});
      --i;
      --j;
    } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
      steps.push_back({Step::kSkip, 0});
      --i;
    } else {
      steps.push_back({Step::kInsert, j - 1});
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());

  std::vector<std::vector<SlotEntry>> merged;
  merged.reserve(S + W);
  std::size_t slot = 0;
  for (const Step& step : steps) {
    switch (step.kind) {
      case Step::kAlign: {
        std::vector<SlotEntry> s = std::move(slots_[slot++]);
        s.push_back(SlotEntry{cand, false, words[step.word], norms[step.word]});
        merged.push_back(std::move(s));
        break;
      }
      case Step::kSkip: {
        std::vector<SlotEntry> s = std::move(slots_[slot++]);
        s.push_back(SlotEntry{cand, true, "", ""});
        merged.push_back(std::move(s));
        break;
      }
      case Step::kInsert: {
        // Every earlier candidate implicitly skips the fresh slot.
        std::vector<SlotEntry> s;
        s.reserve(static_cast<std::size_t>(cand) + 1);
        for (int c = 0; c < cand; ++c) s.push_back(SlotEntry{c, true, "", ""});
        s.push_back(SlotEntry{cand, false, words[step.word], norms[step.word]});
        merged.push_back(std::move(s));
        break;
      }
    }
  }
  slots_ = std::move(merged);
  ++candidate_count_;
}

std::string AlignmentNetwork::decide() const {
  std::vector<std::string> out_words;
  out_words.reserve(slots_.size());
  for (const std::vector<SlotEntry>& slot : slots_) {
    // Votes per alignment key; the skip mark competes under its own key.
    std::map<std::string, int> votes;
    std::map<std::string, int> first_candidate;  // most trusted voter per key
    auto key_of = [](const SlotEntry& e) { return e.skip ? std::string("\x01") : e.norm; };
    for (const SlotEntry& e : slot) {
      const std::string key = key_of(e);
      ++votes[key];
      auto it = first_candidate.find(key);
      if (it == first_candidate.end() || e.candidate < it->second)
        first_candidate[key] = e.candidate;
    }
    std::string best_key;
    int best_votes = -1;
    int best_rank = 0;
    for (const auto& [key, count] : votes) {
      int rank = first_candidate[key];
      if (count > best_votes || (count == best_votes && rank < best_rank)) {
        best_key = key;
        best_votes = count;
        best_rank = rank;
      }
    }
    if (best_key == "\x01") continue;  // elected skip
    for (const SlotEntry& e : slot) {
      if (!e.skip && e.norm == best_key && e.candidate == best_rank) {
        out_words.push_back(e.surface);
        break;
      }
    }
  }
  return join(out_words);
}

std::string ensemble(const std::vector<TranscriptCandidate>& candidates) {
  if (candidates.empty()) throw ValidationError("ensemble: empty candidate list");
  AlignmentNetwork net;
  for (const TranscriptCandidate& c : candidates) net.add(c.text);
  return net.decide();
}

bool has_repetition(const std::vector<std::string>& tokens, const RepetitionConfig& config) {
  if (config.ngram < 1) throw ValidationError("repetition filter: ngram must be >= 1");
  if (config.max_occurrences < 1)
    throw ValidationError("repetition filter: max_occurrences must be >= 1");
  const std::size_t n = static_cast<std::size_t>(config.ngram);
  if (tokens.size() < n) return false;

  // Window identity via joined tokens with an unlikely separator; exact, so
  // no hash verification step is needed here.
  std::unordered_map<std::string, int> counts;
  counts.reserve(tokens.size());
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += tokens[i + k];
    }
    if (++counts[key] > config.max_occurrences) return true;
  }
  return false;
}

bool has_repetition(std::string_view text, const RepetitionConfig& config,
                    const Tokenizer& tokenizer) {
  return has_repetition(tokenizer(text), config);
}

}  // namespace forge
