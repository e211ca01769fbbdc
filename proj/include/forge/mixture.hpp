#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forge/records.hpp"

namespace forge {

struct SpeechSourceSpec {
  std::string name;
  double weight = 0.0;  // share of the speech budget; weights sum to 1
};

struct MixtureSpec {
  double text_fraction = 0.6;
  std::string text_source = "text";
  std::vector<SpeechSourceSpec> speech_sources;
  std::int64_t total_steps = 0;
  std::int64_t batch_size = 0;
  std::int64_t sequence_length = 0;
};

struct PlanRow {
  std::string name;
  double global_fraction = 0.0;
  std::int64_t tokens_drawn = 0;
  double repeats = 0.0;  // tokens_drawn / tokens_available
};

struct MixturePlan {
  std::int64_t total_tokens = 0;
  std::vector<PlanRow> rows;  // text row first, then speech sources in spec order
};

// steps x batch x sequence length, with overflow checked.
std::int64_t total_tokens(std::int64_t steps, std::int64_t batch, std::int64_t seq_len);

// Integer token budgets per source. Speech rows round half up from their
// weight share; the text row absorbs the residual so rows sum exactly to the
// total. Unknown source names and zero token inventories are ValidationErrors.
MixturePlan plan(const MixtureSpec& spec, const std::vector<SourceStats>& sources);

// Dense-transformer training cost, 6 * params * tokens.
double estimate_flops(double params, std::int64_t tokens);

// Speech runs at 12.5 tokens/s, 45000 per hour.
inline constexpr double kSpeechTokensPerSecond = 12.5;

// True when hours and tokens_available agree at 12.5 tokens/s within rel_tol
// (or when hours is absent).
bool hours_tokens_consistent(const SourceStats& stats, double rel_tol = 0.01);

MixtureSpec parse_mixture_spec(const std::string& path);
std::vector<SourceStats> read_sources(const std::string& path);  // .json array or .jsonl

}  // namespace forge
