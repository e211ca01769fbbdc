#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/manifest.hpp"
#include "forge/records.hpp"

#include "testutil.hpp"

using namespace forge;
using json = nlohmann::ordered_json;
using testutil::TempDir;
using testutil::write_file;

namespace {

Recording sample_recording() {
  Recording r;
  r.recording_id = "rec-7";
  r.segments.push_back(DiarizedSegment{0.031, 5.971, "SPEAKER_06", "hello there", {1, 2, 3}});
  r.segments.push_back(DiarizedSegment{7.085, 10.493, "SPEAKER_06", "", {}});
  return r;
}

template <typename T>
void expect_stable(const T& record) {
  const std::string once = manifest::to_line(record);
  const std::string twice = manifest::to_line(manifest::from_line<T>(once));
  CHECK(once == twice);
  json j = json::parse(once);
  CHECK(j.at("v").get<int>() == kManifestVersion);
}

}  // namespace

TEST_CASE("recording round trip") {
  Recording r = sample_recording();
  Recording back = manifest::from_line<Recording>(manifest::to_line(r));
  CHECK(back.recording_id == r.recording_id);
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[0].start_s == doctest::Approx(0.031));
  CHECK(back.segments[0].end_s == doctest::Approx(5.971));
  CHECK(back.segments[0].speaker_id == "SPEAKER_06");
  CHECK(back.segments[0].text == "hello there");
  CHECK(back.segments[0].audio_tokens == std::vector<std::int64_t>{1, 2, 3});
  CHECK(back.segments[1].text.empty());
  expect_stable(r);
}

TEST_CASE("every schema serializes with v 1 and reparses byte-identically") {
  expect_stable(sample_recording());

  ChunkRecord chunk;
  chunk.recording_id = "rec-7";
  chunk.chunk_index = 2;
  chunk.chunk = AudioTextChunk{1.0, 2.5, "S1", "text", "ref-1", {4, 5}, {6}};
  expect_stable(chunk);

  CandidateRecord cand;
  cand.recording_id = "rec-7";
  cand.segment_index = 0;
  cand.candidates = {{"sys-a", "hello"}, {"sys-b", ""}};
  expect_stable(cand);

  expect_stable(TranscriptRecord{"rec-7", 1, "ensembled text"});

  InterleavedSample sample;
  sample.sample_id = "rec-7-0";
  sample.chunks.push_back(AudioTextChunk{0.0, 1.0, "S1", "a", "", {1}, {2}});
  expect_stable(sample);

  RenderedSequence rendered;
  rendered.sample_id = "rec-7-0";
  rendered.tokens = {10, 11, 12};
  rendered.modality_tags = {Modality::kAudio, Modality::kText, Modality::kText};
  rendered.loss_mask = {false, true, true};
  expect_stable(rendered);

  PackedSequence packed;
  packed.pack_id = "pack-0";
  packed.tokens = {10, 11, 0, 0};
  packed.modality_tags = {Modality::kAudio, Modality::kText, Modality::kText, Modality::kText};
  packed.loss_mask = {false, true, false, false};
  packed.boundaries = {{"rec-7-0", 0, 2}};
  packed.pad_len = 2;
  expect_stable(packed);

  SourceStats stats;
  stats.name = "web-crawl";
  stats.hours = 8.03e6;
  stats.tokens_available = 361'300'000'000;
  expect_stable(stats);

  expect_stable(TestItem{"q1", "What is it?", {"a", "b", "c", "d"}, 2});
  expect_stable(TrainText{"doc-1", "some text"});
  expect_stable(CorrectRecord{"q1", true});
  expect_stable(LabelRecord{"History"});
  expect_stable(SeedDocument{"doc-1", "https://en.wikipedia.org/wiki/X", "<p>x</p>"});
  expect_stable(ContaminationHit{"doc-1", "q1", 2, {"in", "the"}});

  ChoiceRecord choice;
  choice.item_id = "q1";
  choice.answer_index = 3;
  choice.choices = {ChoiceScore{-1.0, 1}, ChoiceScore{-2.0, 2}, ChoiceScore{-3.0, 3},
                    ChoiceScore{-4.0, 4}};
  expect_stable(choice);

  DistributionPairRecord dist;
  dist.item_id = "q1";
  dist.p_aud = {{0.75, 0.25}, {0.5, 0.5}};
  dist.p_text = {{0.5, 0.5}, {0.25, 0.75}};
  dist.padded = {false, true};
  expect_stable(dist);
}

TEST_CASE("file round trip and error placement") {
  TempDir dir("manifest");
  const std::string path = dir.file("transcripts.jsonl");

  std::vector<TranscriptRecord> records = {{"r1", 0, "a"}, {"r1", 1, "b"}};
  manifest::write(records, path);
  auto back = manifest::read<TranscriptRecord>(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].text == "b");

  SUBCASE("second line malformed names file and line") {
    write_file(path, manifest::to_line(records[0]) + "\n" + "{\"v\":1,\"recording_id\":\"r1\"}\n");
    CHECK_THROWS_WITH_AS(manifest::read<TranscriptRecord>(path),
                         doctest::Contains((path + ":2").c_str()), ValidationError);
    CHECK_THROWS_WITH_AS(manifest::read<TranscriptRecord>(path),
                         doctest::Contains("segment_index"), ValidationError);
  }

  SUBCASE("missing version field") {
    write_file(path, "{\"recording_id\":\"r1\",\"segment_index\":0,\"text\":\"a\"}\n");
    CHECK_THROWS_WITH_AS(manifest::read<TranscriptRecord>(path), doctest::Contains("'v'"),
                         ValidationError);
  }

  SUBCASE("wrong version value") {
    write_file(path, "{\"v\":2,\"recording_id\":\"r1\",\"segment_index\":0,\"text\":\"a\"}\n");
    CHECK_THROWS_AS(manifest::read<TranscriptRecord>(path), ValidationError);
  }

  SUBCASE("invalid json names the line") {
    write_file(path, "not json\n");
    CHECK_THROWS_WITH_AS(manifest::read<TranscriptRecord>(path), doctest::Contains(":1"),
                         ValidationError);
  }

  SUBCASE("blank lines and trailing carriage returns are tolerated") {
    write_file(path, manifest::to_line(records[0]) + "\r\n\n" + manifest::to_line(records[1]) + "\n");
    CHECK(manifest::read<TranscriptRecord>(path).size() == 2);
  }
}

TEST_CASE("span validation names the failing field") {
  const std::string good =
      R"({"v":1,"recording_id":"r","segments":[{"start_s":1.0,"end_s":2.0,"speaker_id":"s"}]})";
  CHECK_NOTHROW(manifest::from_line<Recording>(good));

  const std::string backwards =
      R"({"v":1,"recording_id":"r","segments":[{"start_s":2.0,"end_s":1.0,"speaker_id":"s"}]})";
  CHECK_THROWS_WITH_AS(manifest::from_line<Recording>(backwards), doctest::Contains("end_s"),
                       ValidationError);

  const std::string zero_length =
      R"({"v":1,"recording_id":"r","segments":[{"start_s":1.0,"end_s":1.0,"speaker_id":"s"}]})";
  CHECK_THROWS_AS(manifest::from_line<Recording>(zero_length), ValidationError);

  const std::string negative =
      R"({"v":1,"recording_id":"r","segments":[{"start_s":-1.0,"end_s":1.0,"speaker_id":"s"}]})";
  CHECK_THROWS_WITH_AS(manifest::from_line<Recording>(negative), doctest::Contains("start_s"),
                       ValidationError);
}

TEST_CASE("source stats cross-check hours against tokens at 12.5 tokens per second") {
  // 8.03e6 hours at 45000 tokens/hour implies 361.35e9, within 1% of 361.3e9.
  const std::string consistent =
      R"({"v":1,"name":"web-crawl","hours":8.03e6,"tokens_available":361300000000})";
  SourceStats s = manifest::from_line<SourceStats>(consistent);
  CHECK(s.hours.has_value());
  CHECK(s.tokens_available == 361'300'000'000);

  const std::string inconsistent =
      R"({"v":1,"name":"bad","hours":1.0,"tokens_available":1000000000})";
  CHECK_THROWS_WITH_AS(manifest::from_line<SourceStats>(inconsistent),
                       doctest::Contains("12.5 tokens/s"), ValidationError);

  const std::string no_hours = R"({"v":1,"name":"text","tokens_available":2200000000000})";
  CHECK_FALSE(manifest::from_line<SourceStats>(no_hours).hours.has_value());
}

TEST_CASE("rendered sequence tag and mask encodings validate") {
  const std::string good =
      R"({"v":1,"sample_id":"s","tokens":[1,2],"modality_tags":"AT","loss_mask":"01"})";
  RenderedSequence r = manifest::from_line<RenderedSequence>(good);
  CHECK(r.modality_tags == std::vector<Modality>{Modality::kAudio, Modality::kText});
  CHECK(r.loss_mask == std::vector<bool>{false, true});

  const std::string bad_tag =
      R"({"v":1,"sample_id":"s","tokens":[1],"modality_tags":"X","loss_mask":"1"})";
  CHECK_THROWS_WITH_AS(manifest::from_line<RenderedSequence>(bad_tag), doctest::Contains("'X'"),
                       ValidationError);

  const std::string bad_mask =
      R"({"v":1,"sample_id":"s","tokens":[1],"modality_tags":"A","loss_mask":"2"})";
  CHECK_THROWS_AS(manifest::from_line<RenderedSequence>(bad_mask), ValidationError);

  const std::string length_mismatch =
      R"({"v":1,"sample_id":"s","tokens":[1,2],"modality_tags":"A","loss_mask":"11"})";
  CHECK_THROWS_WITH_AS(manifest::from_line<RenderedSequence>(length_mismatch),
                       doctest::Contains("equal length"), ValidationError);
}

TEST_CASE("distribution rows must be normalized") {
  const std::string good =
      R"({"v":1,"item_id":"q","p_aud":[[0.5,0.5]],"p_text":[[1.0,0.0]],"padded":"0"})";
  CHECK_NOTHROW(manifest::from_line<DistributionPairRecord>(good));

  const std::string unnormalized =
      R"({"v":1,"item_id":"q","p_aud":[[0.5,0.6]],"p_text":[[1.0,0.0]],"padded":"0"})";
  CHECK_THROWS_WITH_AS(manifest::from_line<DistributionPairRecord>(unnormalized),
                       doctest::Contains("sum to 1"), ValidationError);

  const std::string negative =
      R"({"v":1,"item_id":"q","p_aud":[[1.5,-0.5]],"p_text":[[1.0,0.0]],"padded":"0"})";
  CHECK_THROWS_AS(manifest::from_line<DistributionPairRecord>(negative), ValidationError);

  const std::string pad_mismatch =
      R"({"v":1,"item_id":"q","p_aud":[[0.5,0.5]],"p_text":[[1.0,0.0]],"padded":"00"})";
  CHECK_THROWS_WITH_AS(manifest::from_line<DistributionPairRecord>(pad_mismatch),
                       doctest::Contains("padded"), ValidationError);
}

TEST_CASE("testset items validate choice shape") {
  const std::string three_choices =
      R"({"v":1,"item_id":"q","question":"?","choices":["a","b","c"],"answer_index":0})";
  CHECK_THROWS_WITH_AS(manifest::from_line<TestItem>(three_choices),
                       doctest::Contains("exactly 4"), ValidationError);

  const std::string bad_index =
      R"({"v":1,"item_id":"q","question":"?","choices":["a","b","c","d"],"answer_index":4})";
  CHECK_THROWS_WITH_AS(manifest::from_line<TestItem>(bad_index), doctest::Contains("answer_index"),
                       ValidationError);
}

TEST_CASE("validate counts records by schema name") {
  TempDir dir("validate");
  const std::string path = dir.file("labels.jsonl");
  manifest::write(std::vector<LabelRecord>{{"History"}, {"Science"}}, path);

  CHECK(manifest::validate(path, "labels") == 2);
  CHECK_THROWS_AS(manifest::validate(path, "testset"), ValidationError);
  CHECK_THROWS_WITH_AS(manifest::validate(path, "nope"), doctest::Contains("unknown schema"),
                       ValidationError);

  auto names = manifest::schema_names();
  CHECK(names.size() == 16);
  for (const char* expected :
       {"diarization", "chunks", "candidates", "transcripts", "samples", "rendered", "packed",
        "sources", "testset", "texts", "correct", "labels", "docs", "hits", "choices", "dists"}) {
    CAPTURE(expected);
    CHECK(std::find(names.begin(), names.end(), expected) != names.end());
  }
}

TEST_CASE("missing file raises a stage error") {
  CHECK_THROWS_AS(manifest::read<LabelRecord>("/nonexistent/labels.jsonl"), StageError);
}
