#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <string>
#include <vector>

#include "forge/chunker.hpp"
#include "forge/error.hpp"
#include "forge/rng.hpp"

using namespace forge;

namespace {

// Six diarized segments, one speaker run of five plus a second speaker.
std::vector<DiarizedSegment> two_speaker_fixture() {
  return {
      {0.031, 5.971, "SPEAKER_06", "one", {1}},
      {7.085, 10.493, "SPEAKER_06", "two", {2}},
      {11.607, 13.278, "SPEAKER_06", "three", {3}},
      {13.565, 16.315, "SPEAKER_06", "four", {4}},
      {17.092, 18.323, "SPEAKER_06", "five", {5}},
      {25.968, 26.66, "SPEAKER_01", "six", {6}},
  };
}

std::vector<DiarizedSegment> segments_of(const std::vector<AudioTextChunk>& chunks) {
  std::vector<DiarizedSegment> out;
  for (const AudioTextChunk& c : chunks)
    out.push_back(DiarizedSegment{c.start_s, c.end_s, c.speaker_id, c.text, c.audio_tokens});
  return out;
}

}  // namespace

TEST_CASE("coarse merging joins same-speaker runs") {
  ChunkingConfig cfg;
  auto chunks = chunk(two_speaker_fixture(), cfg);

  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].start_s == doctest::Approx(0.031));
  CHECK(chunks[0].end_s == doctest::Approx(18.323));
  CHECK(chunks[0].speaker_id == "SPEAKER_06");
  CHECK(chunks[0].text == "one two three four five");
  CHECK(chunks[0].audio_tokens == std::vector<std::int64_t>{1, 2, 3, 4, 5});

  CHECK(chunks[1].start_s == doctest::Approx(25.968));
  CHECK(chunks[1].end_s == doctest::Approx(26.66));
  CHECK(chunks[1].speaker_id == "SPEAKER_01");
  CHECK(chunks[1].text == "six");
}

TEST_CASE("fine chunking is a passthrough") {
  ChunkingConfig cfg;
  cfg.strategy = ChunkStrategy::kFine;
  auto segments = two_speaker_fixture();
  auto chunks = chunk(segments, cfg);

  REQUIRE(chunks.size() == 6);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CHECK(chunks[i].start_s == doctest::Approx(segments[i].start_s));
    CHECK(chunks[i].end_s == doctest::Approx(segments[i].end_s));
    CHECK(chunks[i].speaker_id == segments[i].speaker_id);
    CHECK(chunks[i].text == segments[i].text);
  }
}

TEST_CASE("chunks under the minimum duration are dropped after merging") {
  std::vector<DiarizedSegment> segments = {
      {0.0, 1.0, "A", "keep", {}},
      {1.00, 1.15, "B", "drop", {}},  // 0.15 s, under the 0.2 s floor
      {2.0, 3.0, "A", "keep too", {}},
  };
  for (ChunkStrategy strategy : {ChunkStrategy::kCoarse, ChunkStrategy::kFine}) {
    ChunkingConfig cfg;
    cfg.strategy = strategy;
    auto chunks = chunk(segments, cfg);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].text == "keep");
    CHECK(chunks[1].text == "keep too");
  }

  // Two short same-speaker segments merge into something long enough to keep.
  std::vector<DiarizedSegment> merged_ok = {
      {0.0, 0.15, "A", "a", {}},
      {0.15, 0.30, "A", "b", {}},
  };
  CHECK(chunk(merged_ok, ChunkingConfig{}).size() == 1);
  ChunkingConfig fine;
  fine.strategy = ChunkStrategy::kFine;
  CHECK(chunk(merged_ok, fine).empty());
}

TEST_CASE("unsorted segments are rejected") {
  std::vector<DiarizedSegment> segments = {
      {5.0, 6.0, "A", "", {}},
      {1.0, 2.0, "A", "", {}},
  };
  CHECK_THROWS_WITH_AS(chunk(segments, ChunkingConfig{}), doctest::Contains("sorted"),
                       ValidationError);
}

TEST_CASE("a gap above max_gap_s breaks a same-speaker run") {
  ChunkingConfig cfg;
  cfg.max_gap_s = 1.0;
  auto chunks = chunk(two_speaker_fixture(), cfg);
  // Gaps inside the run: 1.114, 1.114, 0.287, 0.777. The first two break.
  REQUIRE(chunks.size() == 4);
  CHECK(chunks[0].end_s == doctest::Approx(5.971));
  CHECK(chunks[1].end_s == doctest::Approx(10.493));
  CHECK(chunks[2].start_s == doctest::Approx(11.607));
  CHECK(chunks[2].end_s == doctest::Approx(18.323));
  CHECK(chunks[2].text == "three four five");
  CHECK(chunks[3].speaker_id == "SPEAKER_01");
}

TEST_CASE("custom text separator") {
  ChunkingConfig cfg;
  cfg.text_separator = "|";
  std::vector<DiarizedSegment> segments = {
      {0.0, 1.0, "A", "x", {}},
      {1.0, 2.0, "A", "y", {}},
  };
  CHECK(chunk(segments, cfg)[0].text == "x|y");
}

TEST_CASE("empty segment text does not leave stray separators") {
  std::vector<DiarizedSegment> segments = {
      {0.0, 1.0, "A", "", {}},
      {1.0, 2.0, "A", "x", {}},
      {2.0, 3.0, "A", "", {}},
      {3.0, 4.0, "A", "y", {}},
  };
  CHECK(chunk(segments, ChunkingConfig{})[0].text == "x y");
}

TEST_CASE("coarse chunking is idempotent on its own output") {
  auto once = chunk(two_speaker_fixture(), ChunkingConfig{});
  // Re-chunking the chunks (one "segment" each) must not merge anything new:
  // consecutive coarse chunks always change speaker under an unbounded gap.
  auto twice = chunk(segments_of(once), ChunkingConfig{});
  REQUIRE(twice.size() == once.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i].start_s == doctest::Approx(once[i].start_s));
    CHECK(twice[i].end_s == doctest::Approx(once[i].end_s));
    CHECK(twice[i].text == once[i].text);
  }
}

TEST_CASE("random runs: coarse chunk count equals speaker run count") {
  rng::Counter draw(7, rng::stream_of("chunker-prop"));
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DiarizedSegment> segments;
    std::size_t n = 1 + draw.next_below(40);
    double clock = 0.0;
    std::size_t runs = 0;
    std::string last_speaker;
    for (std::size_t i = 0; i < n; ++i) {
      DiarizedSegment s;
      s.start_s = clock + 0.1;
      // 0.3 s minimum keeps every merged chunk above the duration floor.
      s.end_s = s.start_s + 0.3 + 0.01 * static_cast<double>(draw.next_below(100));
      s.speaker_id = "S" + std::to_string(draw.next_below(3));
      s.text = "w" + std::to_string(i);
      clock = s.end_s;
      if (s.speaker_id != last_speaker) {
        ++runs;
        last_speaker = s.speaker_id;
      }
      segments.push_back(std::move(s));
    }

    auto coarse = chunk(segments, ChunkingConfig{});
    ChunkingConfig fine_cfg;
    fine_cfg.strategy = ChunkStrategy::kFine;
    auto fine = chunk(segments, fine_cfg);

    CHECK(coarse.size() == runs);
    CHECK(fine.size() == segments.size());
    CHECK(coarse.size() <= fine.size());

    // Each coarse chunk spans its run and concatenates the texts in order.
    std::size_t seg = 0;
    for (const AudioTextChunk& c : coarse) {
      CHECK(c.start_s == doctest::Approx(segments[seg].start_s));
      std::string joined;
      while (seg < segments.size() && segments[seg].speaker_id == c.speaker_id) {
        if (!joined.empty()) joined += " ";
        joined += segments[seg].text;
        ++seg;
      }
      CHECK(c.end_s == doctest::Approx(segments[seg - 1].end_s));
      CHECK(c.text == joined);
    }
    CHECK(seg == segments.size());
  }
}

TEST_CASE("length stats") {
  std::vector<AudioTextChunk> chunks = {
      {0.0, 1.0, "A", "", "", {}, {}},
      {0.0, 3.0, "A", "", "", {}, {}},
  };
  LengthStats stats = chunk_length_stats(chunks, {0.0, 2.0});
  CHECK(stats.mean_s == doctest::Approx(2.0));
  REQUIRE(stats.counts.size() == 2);
  CHECK(stats.counts[0] == 1);
  CHECK(stats.counts[1] == 1);

  // Default bins: a 7 s chunk lands in [5, 10).
  LengthStats wide = chunk_length_stats({{0.0, 7.0, "A", "", "", {}, {}}});
  CHECK(wide.counts[1] == 1);

  CHECK_THROWS_AS(chunk_length_stats({}), ValidationError);
  CHECK_THROWS_AS(chunk_length_stats(chunks, {}), ValidationError);
  CHECK_THROWS_AS(chunk_length_stats(chunks, {2.0, 1.0}), ValidationError);
}

TEST_CASE("strategy names parse") {
  CHECK(chunk_strategy_from_name("coarse") == ChunkStrategy::kCoarse);
  CHECK(chunk_strategy_from_name("fine") == ChunkStrategy::kFine);
  CHECK_THROWS_AS(chunk_strategy_from_name("medium"), ValidationError);
}
