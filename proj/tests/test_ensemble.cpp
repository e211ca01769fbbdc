#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>
#include <string>
#include <vector>

#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/rng.hpp"
#include "forge/tokenize.hpp"

using namespace forge;

namespace {

std::vector<TranscriptCandidate> candidates(const std::vector<std::string>& texts) {
  std::vector<TranscriptCandidate> out;
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back({"sys-" + std::to_string(i), texts[i]});
  return out;
}

// Reference window counter: every n-token window, counted by value.
bool repeats_brute(const std::vector<std::string>& tokens, const RepetitionConfig& cfg) {
  if (tokens.size() < static_cast<std::size_t>(cfg.ngram)) return false;
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + cfg.ngram <= tokens.size(); ++i) {
    std::vector<std::string> window(tokens.begin() + i, tokens.begin() + i + cfg.ngram);
    if (++counts[window] > cfg.max_occurrences) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("alignment normalization") {
  CHECK(normalize_for_alignment("Hello,") == "hello");
  CHECK(normalize_for_alignment("don't") == "dont");
  CHECK(normalize_for_alignment("YEAH.") == "yeah");
  CHECK(normalize_for_alignment("word") == "word");
  // Pure punctuation keeps its lowercased spelling instead of vanishing.
  CHECK(normalize_for_alignment("...") == "...");
  CHECK(normalize_for_alignment("?!") == "?!");
}

TEST_CASE("unanimous candidates pass through") {
  CHECK(ensemble(candidates({"the quick fox", "the quick fox", "the quick fox"})) ==
        "the quick fox");
}

TEST_CASE("majority vote per slot") {
  CHECK(ensemble(candidates({"a b c", "a x c", "a b c"})) == "a b c");
}

TEST_CASE("ties go to the most trusted candidate") {
  // Two votes each for "b" and "x"; candidate 0 said "b".
  CHECK(ensemble(candidates({"a b c", "a x c", "a b c", "a x c"})) == "a b c");
  CHECK(ensemble(candidates({"a x c", "a b c", "a x c", "a b c"})) == "a x c");
}

TEST_CASE("surface comes from the most trusted voter") {
  // All three agree on the word; the first candidate's capitalization wins.
  CHECK(ensemble(candidates({"Hello world", "hello world", "HELLO world"})) == "Hello world");
  // The most trusted candidate is outvoted at slot two; surface then comes
  // from the first candidate that voted for the winner.
  CHECK(ensemble(candidates({"Hello word", "hello World", "HELLO world"})) == "Hello World");
}

TEST_CASE("three transcribers of one utterance") {
  std::vector<TranscriptCandidate> c = {
      {"large-asr", " And I don't think it was a compliment. Yeah."},
      {"device-asr", "And I don't think it as a compliment."},
      {"fast-asr", "And I don't think it's compliment yeah."},
  };
  CHECK(ensemble(c) == "And I don't think it was a compliment. Yeah.");
}

TEST_CASE("single candidate is whitespace-normalized only") {
  CHECK(ensemble(candidates({"  Keep,  MY   Case!  "})) == "Keep, MY Case!");
}

TEST_CASE("empty candidate list is rejected") {
  CHECK_THROWS_AS(ensemble({}), ValidationError);
}

TEST_CASE("empty texts produce empty output") {
  CHECK(ensemble(candidates({"", "", ""})).empty());
  CHECK(ensemble(candidates({""})).empty());
}

TEST_CASE("every output word was said by someone") {
  rng::Counter draw(11, rng::stream_of("ensemble-prop"));
  const std::vector<std::string> vocab = {"go", "stop", "left", "right", "up",
                                          "down", "fast", "slow"};
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n_cands = 1 + draw.next_below(4);
    std::vector<std::string> texts;
    std::set<std::string> spoken;
    for (std::size_t c = 0; c < n_cands; ++c) {
      std::size_t len = draw.next_below(12);
      std::string text;
      for (std::size_t w = 0; w < len; ++w) {
        const std::string& word = vocab[draw.next_below(vocab.size())];
        if (!text.empty()) text += " ";
        text += word;
        spoken.insert(word);
      }
      texts.push_back(text);
    }

    std::string merged = ensemble(candidates(texts));
    for (const std::string& word : split_whitespace(merged)) {
      CAPTURE(merged);
      CHECK(spoken.count(word) == 1);
    }
    // Deterministic: same input, same output.
    CHECK(ensemble(candidates(texts)) == merged);
  }
}

TEST_CASE("repetition threshold is strictly more than max_occurrences") {
  RepetitionConfig cfg;  // 15-grams, more than 5 occurrences
  std::vector<std::string> pattern;
  for (int i = 0; i < 15; ++i) pattern.push_back("tok" + std::to_string(i));

  std::vector<std::string> five, six;
  for (int rep = 0; rep < 5; ++rep) five.insert(five.end(), pattern.begin(), pattern.end());
  for (int rep = 0; rep < 6; ++rep) six.insert(six.end(), pattern.begin(), pattern.end());

  // Six copies: the aligned window occurs six times. Five copies: five.
  CHECK(has_repetition(six, cfg));
  CHECK_FALSE(has_repetition(five, cfg));

  CHECK(repeats_brute(six, cfg));
  CHECK_FALSE(repeats_brute(five, cfg));
}

TEST_CASE("short texts never trip the filter") {
  RepetitionConfig cfg;
  CHECK_FALSE(has_repetition(std::vector<std::string>{}, cfg));
  CHECK_FALSE(has_repetition("one two three", cfg));
  CHECK_FALSE(has_repetition("word word word word word word word word", cfg));
}

TEST_CASE("window counting matches brute force on random token streams") {
  rng::Counter draw(23, rng::stream_of("repeats-prop"));
  int tripped = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    RepetitionConfig cfg;
    cfg.ngram = 2 + static_cast<int>(draw.next_below(5));
    cfg.max_occurrences = 1 + static_cast<int>(draw.next_below(6));
    std::size_t alphabet = 2 + draw.next_below(19);
    std::size_t len = draw.next_below(501);

    std::vector<std::string> tokens;
    tokens.reserve(len);
    for (std::size_t i = 0; i < len; ++i)
      tokens.push_back("t" + std::to_string(draw.next_below(alphabet)));

    bool expected = repeats_brute(tokens, cfg);
    CAPTURE(trial);
    CHECK(has_repetition(tokens, cfg) == expected);
    if (expected) ++tripped;
  }
  // The sample must exercise both outcomes.
  CHECK(tripped > 20);
  CHECK(tripped < 980);
}

TEST_CASE("text overload tokenizes before counting") {
  RepetitionConfig cfg;
  cfg.ngram = 2;
  cfg.max_occurrences = 2;
  CHECK(has_repetition("ha ha ha ha ha", cfg));       // "ha ha" occurs 4 times
  CHECK_FALSE(has_repetition("ha ha ha", cfg));       // twice: at the limit
  // The default tokenizer lowercases, so case differences do not hide repeats.
  CHECK(has_repetition("Ha hA HA ha ha", cfg));
}
