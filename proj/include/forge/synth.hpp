#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/clients.hpp"
#include "forge/records.hpp"

namespace forge {

struct UrlParts {
  std::string scheme;
  std::string host;                // lowercased
  std::string registrable_domain;  // last two labels of the host
};

// Accepts http(s) URLs; anything else is nullopt.
std::optional<UrlParts> parse_url(std::string_view url);

class DomainAllowlist {
 public:
  static DomainAllowlist from_urls(const std::vector<std::string>& urls);
  // The built-in knowledge-domain list shipped with the library.
  static const DomainAllowlist& builtin();

  // True when the URL parses and its registrable domain is listed.
  // Unparseable URLs are false after a warning.
  bool allows(std::string_view url) const;

  const std::set<std::string>& domains() const { return domains_; }

 private:
  std::set<std::string> domains_;
};

// Sentence boundaries sit after '.', '!' or '?' runs (plus closing quotes or
// brackets) followed by whitespace, unless the preceding token is a known
// abbreviation. Chunks are trimmed substrings; their concatenation restores
// the text up to inter-chunk whitespace.
std::vector<std::string> split_sentences(std::string_view text);
std::vector<std::string> split_sentences(std::string_view text,
                                         const std::set<std::string>& abbreviations);

const std::set<std::string>& builtin_abbreviations();

// Sentence chunks that end with '?'.
std::vector<std::string> mine_questions(std::string_view text);

struct QuestionValidation {
  bool complete = false;
  bool is_question = false;

  bool valid() const { return complete && is_question; }
};

// Pulls the complete/is_question fields out of a free-form grader reply.
// Missing fields are a ValidationError carrying the reply.
QuestionValidation parse_validation_reply(std::string_view reply);

// First non-empty line, comma-split; anything but exactly three non-empty
// entries is a ValidationError carrying the raw reply.
std::array<std::string, 3> parse_distractors(std::string_view reply);

// Uniform voice pick; a pure function of (seed, key), so assignment is stable
// under any execution order.
int assign_voice(std::uint64_t seed, std::uint64_t key, int voice_count = 5);

// Body of the first ```plaintext { ... }``` fence, else the trimmed reply.
std::string extract_plaintext_reply(std::string_view reply);

enum class SynthMode { kKrist, kQuest };

SynthMode synth_mode_from_name(const std::string& name);

struct SynthConfig {
  SynthMode mode = SynthMode::kKrist;
  std::uint64_t seed = 0;
  int voice_count = 5;
  int max_in_flight = 4;
  double requests_per_s = 0.0;  // 0 disables throttling
  RetryConfig retry;
  bool filter_domains = true;
};

struct DeadLetter {
  std::string doc_id;
  std::string stage;  // "extract", "validate", "answer", "tts"
  std::string detail;
};

struct RejectedQuestion {
  std::string doc_id;
  std::string question;
  QuestionValidation verdict;
};

struct SynthResult {
  std::vector<InterleavedSample> samples;
  std::vector<DeadLetter> dead_letters;
  std::vector<RejectedQuestion> rejected;
  std::int64_t retries = 0;
  std::int64_t docs_skipped_domain = 0;
};

// Builds spoken-document (Krist) or spoken-QA (Quest) samples from crawled
// pages. Client calls run concurrently under max_in_flight and the rate
// limit; assembly is a deterministic reduce keyed by (doc index, chunk
// index), so results do not depend on completion order.
SynthResult synth_corpus(const std::vector<SeedDocument>& docs, LlmClient& llm, TtsClient& tts,
                         const SynthConfig& config);

}  // namespace forge
