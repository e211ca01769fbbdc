#include "forge/decontam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge {

std::string eval_item_text(const TestItem& item) {
  return item.question + " " + item.choices[static_cast<std::size_t>(item.answer_index)];
}

Hash128 EvalIndex::window_hash(const std::vector<std::string>& tokens, std::size_t pos,
                               int n) const {
  Hash128Stream h;
  for (int k = 0; k < n; ++k) {
    if (k) h.update(std::string_view("\x1f", 1));
    h.update(tokens[pos + static_cast<std::size_t>(k)]);
  }
  return h.digest();
}

EvalIndex::EvalIndex(const std::vector<TestItem>& items, NgramRange range,
                     const Tokenizer& tokenizer)
    : range_(range) {
  if (range.n_min < 1 || range.n_max < range.n_min)
    throw ValidationError("ngram range must satisfy 1 <= n_min <= n_max");
  item_tokens_.reserve(items.size());
  item_ids_.reserve(items.size());
  for (const TestItem& item : items) {
    item_ids_.push_back(item.item_id);
    item_tokens_.push_back(tokenizer(eval_item_text(item)));
  }
  for (std::size_t i = 0; i < item_tokens_.size(); ++i) {
    const std::vector<std::string>& tokens = item_tokens_[i];
    for (int n = range.n_min; n <= range.n_max; ++n) {
      if (tokens.size() < static_cast<std::size_t>(n)) break;
      for (std::size_t pos = 0; pos + static_cast<std::size_t>(n) <= tokens.size(); ++pos) {
        index_[window_hash(tokens, pos, n)].push_back(
            Entry{static_cast<std::int32_t>(i), static_cast<std::int32_t>(pos)});
      }
    }
  }
}

void EvalIndex::probe(const std::string& train_id, const std::vector<std::string>& train_tokens,
                      std::vector<ContaminationHit>& out) const {
  std::set<std::pair<std::int32_t, int>> seen;  // (item, n) already reported
  for (int n = range_.n_min; n <= range_.n_max; ++n) {
    if (train_tokens.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t pos = 0; pos + static_cast<std::size_t>(n) <= train_tokens.size(); ++pos) {
      auto it = index_.find(window_hash(train_tokens, pos, n));
      if (it == index_.end()) continue;
      for (const Entry& e : it->second) {
        // The index mixes window sizes; verify both length and content.
        const std::vector<std::string>& item_tokens = item_tokens_[static_cast<std::size_t>(e.item)];
        if (static_cast<std::size_t>(e.pos) + static_cast<std::size_t>(n) > item_tokens.size())
          continue;
        bool equal = true;
        for (int k = 0; k < n && equal; ++k)
          equal = item_tokens[static_cast<std::size_t>(e.pos) + k] ==
                  train_tokens[pos + static_cast<std::size_t>(k)];
        if (!equal) continue;
        if (!seen.insert({e.item, n}).second) continue;
        ContaminationHit hit;
        hit.train_id = train_id;
        hit.test_id = item_ids_[static_cast<std::size_t>(e.item)];
        hit.n = n;
        hit.span.assign(train_tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                        train_tokens.begin() + static_cast<std::ptrdiff_t>(pos) + n);
        out.push_back(std::move(hit));
      }
    }
  }
}

std::vector<ContaminationHit> find_hits(const std::vector<TrainText>& train,
                                        const std::vector<TestItem>& eval_items, NgramRange range,
                                        const Tokenizer& tokenizer) {
  EvalIndex index(eval_items, range, tokenizer);
  std::vector<ContaminationHit> hits;
  for (const TrainText& doc : train) {
    index.probe(doc.id, tokenizer(doc.text), hits);
  }
  return hits;
}

std::vector<TestItem> clean_set(const std::vector<TestItem>& items,
                                const std::vector<ContaminationHit>& hits) {
  std::set<std::string> dirty;
  for (const ContaminationHit& h : hits) dirty.insert(h.test_id);
  std::vector<TestItem> out;
  out.reserve(items.size());
  for (const TestItem& item : items)
    if (dirty.count(item.item_id) == 0) out.push_back(item);
  return out;
}

std::string BootstrapResult::p_display() const {
  char buf[64];
  if (below_resolution) {
    std::snprintf(buf, sizeof buf, "p<%.3f", 1.0 / std::max(replicates, 1));
  } else {
    std::snprintf(buf, sizeof buf, "p=%.3f", p);
  }
  return buf;
}

BootstrapResult significance(const std::vector<bool>& correct,
                             const std::vector<std::size_t>& contaminated, int replicates,
                             std::uint64_t seed) {
  const std::size_t n = correct.size();
  if (n == 0) throw ValidationError("significance: empty grading vector");
  if (replicates < 1) throw ValidationError("significance: replicates must be >= 1");
  std::set<std::size_t> removed(contaminated.begin(), contaminated.end());
  if (removed.size() != contaminated.size())
    throw ValidationError("significance: duplicate contaminated indices");
  if (!removed.empty() && *removed.rbegin() >= n)
    throw ValidationError("significance: contaminated index out of range");
  const std::size_t k = removed.size();
  if (k >= n) throw ValidationError("significance: removal would empty the set");

  const std::size_t kept = n - k;
  std::int64_t full_correct = 0;
  for (bool c : correct) full_correct += c ? 1 : 0;
  std::int64_t clean_correct = full_correct;
  for (std::size_t i : removed) clean_correct -= correct[i] ? 1 : 0;

  BootstrapResult result;
  result.replicates = replicates;
  result.n_items = n;
  result.k_removed = k;
  result.full_acc = static_cast<double>(full_correct) / static_cast<double>(n);
  result.clean_acc = static_cast<double>(clean_correct) / static_cast<double>(kept);

  // Replicate accuracies share the denominator (n - k), so ordering
  // comparisons run on integer correct-counts.
  std::vector<double> accs(static_cast<std::size_t>(replicates));
  std::int64_t at_or_below = 0;
  double acc_sum = 0.0;
  std::vector<std::size_t> indices(n);
  for (int r = 0; r < replicates; ++r) {
    std::iota(indices.begin(), indices.end(), 0);
    rng::Counter draw(seed, rng::stream_of("bootstrap") ^ static_cast<std::uint64_t>(r));
    std::int64_t removed_correct = 0;
    // Partial Fisher-Yates: the first k slots become the removed set.
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(draw.next_below(n - i));
      std::swap(indices[i], indices[j]);
      removed_correct += correct[indices[i]] ? 1 : 0;
    }
    std::int64_t rep_correct = full_correct - removed_correct;
    if (rep_correct <= clean_correct) ++at_or_below;
    double acc = static_cast<double>(rep_correct) / static_cast<double>(kept);
    accs[static_cast<std::size_t>(r)] = acc;
    acc_sum += acc;
  }
  result.rand_mean = acc_sum / static_cast<double>(replicates);

  std::sort(accs.begin(), accs.end());
  auto percentile = [&accs](double q) {
    if (accs.size() == 1) return accs[0];
    double rank = q * static_cast<double>(accs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(rank);
    std::size_t hi = std::min(lo + 1, accs.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return accs[lo] * (1.0 - frac) + accs[hi] * frac;
  };
  result.ci_low = percentile(0.025);
  result.ci_high = percentile(0.975);

  if (at_or_below == 0) {
    result.p = 0.0;
    result.below_resolution = true;
  } else {
    result.p = static_cast<double>(at_or_below) / static_cast<double>(replicates);
    result.below_resolution = false;
  }
  return result;
}

double ReportCell::proportion() const {
  return total == 0 ? 0.0 : static_cast<double>(contaminated) / static_cast<double>(total);
}

std::string ReportCell::display() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f%% [%lld]", 100.0 * proportion(),
                static_cast<long long>(contaminated));
  return buf;
}

ContaminationReport contamination_report(
    const std::vector<std::pair<std::string, std::int64_t>>& eval_sets,
    const std::vector<std::string>& corpus_names,
    const std::map<std::pair<std::string, std::string>, std::set<std::string>>& hit_items) {
  ContaminationReport report;
  report.corpus_names = corpus_names;
  report.corpus_names.push_back("all");
  for (const auto& [eval_name, total] : eval_sets) {
    if (total < 0) throw ValidationError("contamination_report: negative eval set size");
    report.eval_names.push_back(eval_name);
    std::vector<ReportCell> row;
    std::set<std::string> all_items;
    for (const std::string& corpus : corpus_names) {
      ReportCell cell;
      cell.total = total;
      auto it = hit_items.find({eval_name, corpus});
      if (it != hit_items.end()) {
        cell.contaminated = static_cast<std::int64_t>(it->second.size());
        all_items.insert(it->second.begin(), it->second.end());
      }
      row.push_back(cell);
    }
    row.push_back(ReportCell{static_cast<std::int64_t>(all_items.size()), total});
    report.cells.push_back(std::move(row));
  }
  return report;
}

}  // namespace forge
