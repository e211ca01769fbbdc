#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "forge/hash.hpp"
#include "forge/records.hpp"
#include "forge/tokenize.hpp"

namespace forge {

struct NgramRange {
  int n_min = 6;
  int n_max = 13;
};

// Eval-side text for contamination purposes: the question joined with the
// correct answer choice.
std::string eval_item_text(const TestItem& item);

// In-memory index over every n-gram window (n in range) of the eval items.
// Keys are 128-bit window hashes; probes verify the underlying token span, so
// hash collisions cannot produce a false hit. Memory is linear in total eval
// tokens times the number of n values.
class EvalIndex {
 public:
  EvalIndex(const std::vector<TestItem>& items, NgramRange range,
            const Tokenizer& tokenizer = default_tokenizer());

  // Scans all windows of one train document, appending at most one hit per
  // (train_id, test_id, n).
  void probe(const std::string& train_id, const std::vector<std::string>& train_tokens,
             std::vector<ContaminationHit>& out) const;

  const NgramRange& range() const { return range_; }
  const std::string& item_id(std::size_t i) const { return item_ids_[i]; }

 private:
  struct Entry {
    std::int32_t item = 0;
    std::int32_t pos = 0;
  };

  Hash128 window_hash(const std::vector<std::string>& tokens, std::size_t pos, int n) const;

  NgramRange range_;
  std::vector<std::vector<std::string>> item_tokens_;
  std::vector<std::string> item_ids_;
  std::unordered_map<Hash128, std::vector<Entry>, Hash128Hasher> index_;

  friend std::vector<ContaminationHit> find_hits(const std::vector<TrainText>&,
                                                 const std::vector<TestItem>&, NgramRange,
                                                 const Tokenizer&);
};

// Train side streams document by document; nothing beyond the index and the
// current document is held.
std::vector<ContaminationHit> find_hits(const std::vector<TrainText>& train,
                                        const std::vector<TestItem>& eval_items,
                                        NgramRange range = {},
                                        const Tokenizer& tokenizer = default_tokenizer());

// Items never named by a hit, in their original order.
std::vector<TestItem> clean_set(const std::vector<TestItem>& items,
                                const std::vector<ContaminationHit>& hits);

struct BootstrapResult {
  double full_acc = 0.0;
  double clean_acc = 0.0;
  double rand_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  // Pr(A_rand <= A_clean) over the replicates; 0 with below_resolution set
  // when no replicate scored that low.
  double p = 1.0;
  bool below_resolution = false;
  int replicates = 0;
  std::size_t n_items = 0;
  std::size_t k_removed = 0;

  std::string p_display() const;
};

// Removes |contaminated| random items (without replacement) per replicate and
// compares the resulting accuracy distribution against the clean accuracy.
// contaminated holds indices into correct; duplicates are a ValidationError.
BootstrapResult significance(const std::vector<bool>& correct,
                             const std::vector<std::size_t>& contaminated, int replicates,
                             std::uint64_t seed);

struct ReportCell {
  std::int64_t contaminated = 0;
  std::int64_t total = 0;

  double proportion() const;
  // "2.5% [25]" style, one decimal.
  std::string display() const;
};

struct ContaminationReport {
  std::vector<std::string> eval_names;    // rows
  std::vector<std::string> corpus_names;  // columns, then a trailing union column
  std::vector<std::vector<ReportCell>> cells;
};

// hit_items maps (eval set, corpus) to the set of contaminated item ids.
// The union column recounts distinct items across corpora.
ContaminationReport contamination_report(
    const std::vector<std::pair<std::string, std::int64_t>>& eval_sets,
    const std::vector<std::string>& corpus_names,
    const std::map<std::pair<std::string, std::string>, std::set<std::string>>& hit_items);

}  // namespace forge
