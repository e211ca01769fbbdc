#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forge/records.hpp"

namespace forge::evalkit {

// Index of the choice with the highest length-normalized log-probability
// (logprob_sum / token_len); ties resolve to the lowest index.
int choose(const std::array<ChoiceScore, 4>& choices);

double accuracy(const std::vector<bool>& correct);

// Floor applied to arguments of log only; probabilities themselves are never
// renormalized, so a true zero contributes 0 (forward direction) or the
// epsilon-bounded term (reverse direction).
inline constexpr double kLogFloor = 1e-10;

struct Divergences {
  double fkl = 0.0;  // sum p log(p/q), nats
  double rkl = 0.0;  // sum q log(q/p), nats
  double jsd = 0.0;  // 0.5 KL(p||m) + 0.5 KL(q||m), m = (p+q)/2
};

Divergences per_token_divergences(const std::vector<double>& p, const std::vector<double>& q);

struct ItemDivergence {
  std::string item_id;
  double fkl = 0.0;
  double rkl = 0.0;
  double jsd = 0.0;
  std::size_t positions = 0;  // unpadded rows contributing to the means
};

// Mean per-token divergence over the unpadded positions of one item.
// All-padded items yield nullopt (the caller logs and skips them).
std::optional<ItemDivergence> aggregate(const DistributionPairRecord& record);

struct DivergenceSummary {
  double mean_fkl = 0.0;
  double mean_rkl = 0.0;
  double mean_jsd = 0.0;
  std::size_t items = 0;    // items contributing
  std::size_t skipped = 0;  // all-padded items dropped with a warning
  std::vector<ItemDivergence> per_item;
  // JSD is bounded by ln 2, so the histogram range is fixed at [0, ln 2].
  std::vector<std::int64_t> jsd_histogram;
};

inline constexpr int kHistogramBins = 50;

std::vector<std::int64_t> histogram(const std::vector<double>& values, int bins, double lo,
                                    double hi);

DivergenceSummary dataset_means(const std::vector<DistributionPairRecord>& records, int jobs = 1);

// "Question:\n<question>\nAnswer:<answer>" via the stored cloze template.
std::string render_cloze(const std::string& question, const std::string& answer);

// Distribution dumps get big (o x V doubles per item twice over), so the
// native storage is a binary file of consecutive records:
//   magic "FDMP", u32 version,
//   then per item: u32 id_len, id bytes, u32 o, u32 V,
//   float32 p_aud[o*V] row-major, float32 p_text[o*V],
//   pad bitmap of ceil(o/8) bytes (LSB first).
// A JSON sidecar at <path>.idx.json carries per-item byte offsets for random
// access and a record count for integrity checks.
void write_dump(const std::string& bin_path, const std::vector<DistributionPairRecord>& records);
std::vector<DistributionPairRecord> read_dump(const std::string& bin_path);

// Directory: every *.bin (with sidecar) plus every *.jsonl fallback file,
// in lexicographic order. Single file: dispatch on extension.
std::vector<DistributionPairRecord> read_dumps(const std::string& path);

}  // namespace forge::evalkit
