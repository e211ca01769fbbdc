#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "forge/error.hpp"
#include "forge/mixture.hpp"
#include "testutil.hpp"

using namespace forge;

namespace {

// Corpus inventory used throughout: hours where the catalog provides them.
std::vector<SourceStats> corpus() {
  return {
      {"web-crawl", 8.03e6, 361'300'000'000},
      {"krist", 4.72e6, 212'400'000'000},
      {"quest", std::nullopt, 38'000'000'000},
      {"text", std::nullopt, 2'200'000'000'000},
  };
}

MixtureSpec base_spec() {
  MixtureSpec spec;
  spec.text_fraction = 0.6;
  spec.text_source = "text";
  spec.total_steps = 200'000;
  spec.batch_size = 512;
  spec.sequence_length = 16'384;
  return spec;
}

struct PublishedCell {
  std::string name;
  double toks_b = 0.0;  // published token count, billions
  double repeats = 0.0;
};

void check_against_published(const MixturePlan& got, const std::vector<PublishedCell>& cells) {
  REQUIRE(got.rows.size() == cells.size());
  std::int64_t row_sum = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const PlanRow& row = got.rows[i];
    const PublishedCell& cell = cells[i];
    CAPTURE(cell.name);
    CHECK(row.name == cell.name);
    double toks_b = static_cast<double>(row.tokens_drawn) / 1e9;
    CHECK(std::fabs(toks_b - cell.toks_b) / cell.toks_b <= 0.02);
    CHECK(std::fabs(row.repeats - cell.repeats) / cell.repeats <= 0.02);
    row_sum += row.tokens_drawn;
  }
  // The text residual reconciles the rows to the total exactly.
  CHECK(row_sum == got.total_tokens);
  double fraction_sum = 0.0;
  for (const PlanRow& row : got.rows) fraction_sum += row.global_fraction;
  CHECK(fraction_sum == doctest::Approx(1.0).epsilon(1e-12));
}

}  // namespace

TEST_CASE("run length in tokens") {
  CHECK(total_tokens(200'000, 512, 16'384) == 1'677'721'600'000);
  CHECK(total_tokens(1, 1, 1) == 1);
  CHECK_THROWS_AS(total_tokens(0, 512, 16'384), ValidationError);
  CHECK_THROWS_AS(total_tokens(-1, 512, 16'384), ValidationError);
  CHECK_THROWS_WITH_AS(total_tokens(1'000'000'000'000, 1'000'000'000'000, 2),
                       doctest::Contains("overflows"), ValidationError);
}

TEST_CASE("hand-checkable plan arithmetic") {
  MixtureSpec spec;
  spec.text_fraction = 0.6;
  spec.text_source = "t";
  spec.speech_sources = {{"a", 0.25}, {"b", 0.75}};
  spec.total_steps = 1;
  spec.batch_size = 10;
  spec.sequence_length = 100;

  std::vector<SourceStats> sources = {
      {"a", std::nullopt, 100},
      {"b", std::nullopt, 1000},
      {"t", std::nullopt, 3000},
  };
  MixturePlan got = plan(spec, sources);
  CHECK(got.total_tokens == 1000);
  REQUIRE(got.rows.size() == 3);

  CHECK(got.rows[0].name == "t");
  CHECK(got.rows[0].tokens_drawn == 600);
  CHECK(got.rows[0].repeats == doctest::Approx(0.2));
  CHECK(got.rows[0].global_fraction == doctest::Approx(0.6));

  CHECK(got.rows[1].name == "a");
  CHECK(got.rows[1].tokens_drawn == 100);
  CHECK(got.rows[1].repeats == doctest::Approx(1.0));

  CHECK(got.rows[2].name == "b");
  CHECK(got.rows[2].tokens_drawn == 300);
  CHECK(got.rows[2].repeats == doctest::Approx(0.3));
}

TEST_CASE("one-source speech mixture") {
  MixtureSpec spec = base_spec();
  spec.speech_sources = {{"web-crawl", 1.0}};
  check_against_published(plan(spec, corpus()),
                          {{"text", 1000, 0.45}, {"web-crawl", 670, 1.85}});
}

TEST_CASE("two-source speech mixtures") {
  MixtureSpec spec = base_spec();
  spec.speech_sources = {{"web-crawl", 355.0 / 670}, {"krist", 315.0 / 670}};
  check_against_published(
      plan(spec, corpus()),
      {{"text", 1000, 0.45}, {"web-crawl", 355, 0.98}, {"krist", 315, 1.48}});

  spec.speech_sources = {{"web-crawl", 442.0 / 670}, {"quest", 228.0 / 670}};
  check_against_published(
      plan(spec, corpus()),
      {{"text", 1000, 0.45}, {"web-crawl", 442, 1.22}, {"quest", 228, 6.00}});
}

TEST_CASE("three-source speech mixtures") {
  MixtureSpec spec = base_spec();
  spec.speech_sources = {{"web-crawl", 395.0 / 670}, {"krist", 232.0 / 670}, {"quest", 43.0 / 670}};
  check_against_published(plan(spec, corpus()), {{"text", 1000, 0.45},
                                                 {"web-crawl", 395, 1.09},
                                                 {"krist", 232, 1.10},
                                                 {"quest", 43, 1.13}});

  spec.speech_sources = {{"web-crawl", 267.0 / 670}, {"krist", 221.0 / 670}, {"quest", 182.0 / 670}};
  check_against_published(plan(spec, corpus()), {{"text", 1000, 0.45},
                                                 {"web-crawl", 267, 0.74},
                                                 {"krist", 221, 1.04},
                                                 {"quest", 182, 4.79}});
}

TEST_CASE("plan input validation") {
  MixtureSpec spec = base_spec();
  spec.speech_sources = {{"web-crawl", 1.0}};

  SUBCASE("unknown source") {
    spec.speech_sources = {{"nope", 1.0}};
    CHECK_THROWS_WITH_AS(plan(spec, corpus()), doctest::Contains("nope"), ValidationError);
  }
  SUBCASE("unknown text source") {
    spec.text_source = "missing";
    CHECK_THROWS_WITH_AS(plan(spec, corpus()), doctest::Contains("missing"), ValidationError);
  }
  SUBCASE("empty inventory") {
    std::vector<SourceStats> sources = corpus();
    sources[0].tokens_available = 0;
    CHECK_THROWS_WITH_AS(plan(spec, sources), doctest::Contains("no tokens"), ValidationError);
  }
  SUBCASE("weights must sum to one") {
    spec.speech_sources = {{"web-crawl", 0.5}, {"krist", 0.4}};
    CHECK_THROWS_WITH_AS(plan(spec, corpus()), doctest::Contains("sum to 1"), ValidationError);
  }
  SUBCASE("negative weight") {
    spec.speech_sources = {{"web-crawl", 1.5}, {"krist", -0.5}};
    CHECK_THROWS_WITH_AS(plan(spec, corpus()), doctest::Contains("negative"), ValidationError);
  }
  SUBCASE("text fraction range") {
    spec.text_fraction = 1.2;
    CHECK_THROWS_AS(plan(spec, corpus()), ValidationError);
    spec.text_fraction = -0.2;
    CHECK_THROWS_AS(plan(spec, corpus()), ValidationError);
  }
  SUBCASE("speech rounding may not exceed the total") {
    // Budget 3 split half-and-half rounds both shares up to 2.
    MixtureSpec tiny;
    tiny.text_fraction = 0.0;
    tiny.text_source = "text";
    tiny.speech_sources = {{"web-crawl", 0.5}, {"krist", 0.5}};
    tiny.total_steps = 1;
    tiny.batch_size = 1;
    tiny.sequence_length = 3;
    CHECK_THROWS_WITH_AS(plan(tiny, corpus()), doctest::Contains("exceed"), ValidationError);
  }
}

TEST_CASE("flops estimate") {
  std::int64_t tokens = total_tokens(200'000, 512, 16'384);
  double flops = estimate_flops(3.8e9, tokens);
  CHECK(flops == doctest::Approx(3.8252e22).epsilon(1e-4));
  CHECK(flops > 3.74e22);
  CHECK(flops < 3.90e22);
  CHECK(estimate_flops(1.0, 1) == doctest::Approx(6.0));
  CHECK_THROWS_AS(estimate_flops(0.0, 1), ValidationError);
  CHECK_THROWS_AS(estimate_flops(1.0, -1), ValidationError);
}

TEST_CASE("hours and token counts must agree at 12.5 tokens per second") {
  std::vector<SourceStats> sources = corpus();
  // 8.03M hours at 45000 tokens/hour implies 361.35B; the catalog says 361.3B.
  CHECK(hours_tokens_consistent(sources[0], 0.01));
  CHECK(hours_tokens_consistent(sources[1], 0.01));
  // Hours absent: nothing to check.
  CHECK(hours_tokens_consistent(sources[2], 0.01));

  // 0.86M hours implies 38.7B tokens, 1.8% above the cataloged 38B.
  SourceStats quest{"quest", 0.86e6, 38'000'000'000};
  CHECK_FALSE(hours_tokens_consistent(quest, 0.01));
  CHECK(hours_tokens_consistent(quest, 0.02));
}

TEST_CASE("reading a mixture spec file") {
  testutil::TempDir dir("mixture");
  std::string path = dir.file("spec.json");
  testutil::write_file(path, R"({
    "text_fraction": 0.6,
    "text_source": "text",
    "speech_sources": [
      {"name": "web-crawl", "weight": 0.53},
      {"name": "krist", "weight": 0.47}
    ],
    "total_steps": 200000,
    "batch_size": 512,
    "sequence_length": 16384
  })");

  MixtureSpec spec = parse_mixture_spec(path);
  CHECK(spec.text_fraction == doctest::Approx(0.6));
  CHECK(spec.text_source == "text");
  REQUIRE(spec.speech_sources.size() == 2);
  CHECK(spec.speech_sources[0].name == "web-crawl");
  CHECK(spec.speech_sources[1].weight == doctest::Approx(0.47));
  CHECK(spec.total_steps == 200'000);

  SUBCASE("missing keys are named") {
    std::string broken = dir.file("broken.json");
    testutil::write_file(broken, R"({"text_fraction": 0.6})");
    CHECK_THROWS_AS(parse_mixture_spec(broken), ValidationError);
  }
  SUBCASE("invalid JSON") {
    std::string bad = dir.file("bad.json");
    testutil::write_file(bad, "{nope");
    CHECK_THROWS_WITH_AS(parse_mixture_spec(bad), doctest::Contains("invalid JSON"),
                         ValidationError);
  }
  SUBCASE("not an object") {
    std::string arr = dir.file("arr.json");
    testutil::write_file(arr, "[1, 2]");
    CHECK_THROWS_AS(parse_mixture_spec(arr), ValidationError);
  }
}

TEST_CASE("reading source inventories") {
  testutil::TempDir dir("sources");

  // The same inventory as a JSON array and as JSONL must parse identically.
  std::string json_path = dir.file("sources.json");
  testutil::write_file(json_path, R"([
    {"name": "web-crawl", "hours": 8.03e6, "tokens_available": 361300000000},
    {"name": "quest", "tokens_available": 38000000000}
  ])");

  std::string jsonl_path = dir.file("sources.jsonl");
  testutil::write_file(jsonl_path,
                       "{\"v\":1,\"name\":\"web-crawl\",\"hours\":8.03e6,"
                       "\"tokens_available\":361300000000}\n"
                       "{\"v\":1,\"name\":\"quest\",\"tokens_available\":38000000000}\n");

  auto from_json = read_sources(json_path);
  auto from_jsonl = read_sources(jsonl_path);
  REQUIRE(from_json.size() == 2);
  REQUIRE(from_jsonl.size() == 2);
  for (const auto& sources : {from_json, from_jsonl}) {
    CHECK(sources[0].name == "web-crawl");
    REQUIRE(sources[0].hours.has_value());
    CHECK(*sources[0].hours == doctest::Approx(8.03e6));
    CHECK(sources[0].tokens_available == 361'300'000'000);
    CHECK(sources[1].name == "quest");
    CHECK_FALSE(sources[1].hours.has_value());
  }

  SUBCASE("json file must hold an array") {
    std::string obj = dir.file("obj.json");
    testutil::write_file(obj, R"({"name": "x"})");
    CHECK_THROWS_WITH_AS(read_sources(obj), doctest::Contains("array"), ValidationError);
  }
  SUBCASE("inconsistent hours are rejected on parse") {
    std::string off = dir.file("off.json");
    testutil::write_file(off, R"([{"name": "quest", "hours": 0.86e6,
                                   "tokens_available": 38000000000}])");
    CHECK_THROWS_WITH_AS(read_sources(off), doctest::Contains("12.5"), ValidationError);
  }
}
