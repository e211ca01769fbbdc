#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "forge/error.hpp"
#include "forge/evalkit.hpp"
#include "forge/manifest.hpp"
#include "forge/rng.hpp"
#include "testutil.hpp"

using namespace forge;
using namespace forge::evalkit;

namespace {

std::vector<double> random_distribution(rng::Counter& draw, std::size_t size, bool with_zeros) {
  std::vector<double> p(size);
  double sum = 0.0;
  for (double& v : p) {
    v = with_zeros && draw.next_below(4) == 0 ? 0.0 : 0.05 + draw.next_unit();
    sum += v;
  }
  if (sum == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::array<ChoiceScore, 4> scores4(ChoiceScore a, ChoiceScore b, ChoiceScore c, ChoiceScore d) {
  return {a, b, c, d};
}

DistributionPairRecord record_of(std::string id,
                                 std::vector<std::vector<double>> aud,
                                 std::vector<std::vector<double>> text,
                                 std::vector<bool> padded) {
  DistributionPairRecord rec;
  rec.item_id = std::move(id);
  rec.p_aud = std::move(aud);
  rec.p_text = std::move(text);
  rec.padded = std::move(padded);
  return rec;
}

}  // namespace

TEST_CASE("choice selection by length-normalized score") {
  CHECK(choose(scores4({-1, 1}, {-3, 1}, {-3, 1}, {-3, 1})) == 0);
  // Normalization: -4/4 beats -1.5/1, -9/3 and -8/2.
  CHECK(choose(scores4({-4, 4}, {-1.5, 1}, {-9, 3}, {-8, 2})) == 0);
  // All tie at -1 per token: lowest index wins.
  CHECK(choose(scores4({-2, 2}, {-1, 1}, {-5, 5}, {-10, 10})) == 0);
  CHECK(choose(scores4({-4, 2}, {-1, 1}, {-2, 2}, {-3, 3})) == 1);

  CHECK_THROWS_WITH_AS(choose(scores4({-1, 1}, {-1, 1}, {-1, 0}, {-1, 1})),
                       doctest::Contains("choice 2"), ValidationError);
}

TEST_CASE("accuracy") {
  CHECK(accuracy({true, false, true, false}) == doctest::Approx(0.5));
  CHECK(accuracy({true}) == doctest::Approx(1.0));
  CHECK(accuracy({false, false}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(accuracy({}), ValidationError);
}

TEST_CASE("divergence kernel reproduces hand-computed values") {
  const std::vector<double> p = {0.75, 0.25};
  const std::vector<double> q = {0.5, 0.5};
  Divergences d = per_token_divergences(p, q);
  // 0.75 ln 1.5 + 0.25 ln 0.5 and 0.5 ln(4/3).
  CHECK(d.fkl == doctest::Approx(0.13081203594113697).epsilon(1e-12));
  CHECK(d.rkl == doctest::Approx(0.14384103622589045).epsilon(1e-12));
  CHECK(d.jsd == doctest::Approx(0.03382207556860525).epsilon(1e-12));

  Divergences same = per_token_divergences(q, q);
  CHECK(same.fkl == 0.0);
  CHECK(same.rkl == 0.0);
  CHECK(same.jsd == 0.0);
}

TEST_CASE("a zero probability contributes nothing forward, the floor backward") {
  const std::vector<double> p = {0.5, 0.5, 0.0};
  const std::vector<double> q = {0.25, 0.25, 0.5};
  Divergences d = per_token_divergences(p, q);
  CHECK(d.fkl == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  double expected_rkl = 0.25 * std::log(0.25 / 0.5) + 0.25 * std::log(0.25 / 0.5) +
                        0.5 * (std::log(0.5) - std::log(kLogFloor));
  CHECK(d.rkl == doctest::Approx(expected_rkl).epsilon(1e-12));
}

TEST_CASE("disjoint supports meet the JSD ceiling") {
  Divergences d = per_token_divergences({1.0, 0.0}, {0.0, 1.0});
  CHECK(d.jsd == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("forward and reverse are argument swaps, bit for bit") {
  rng::Counter draw(17, rng::stream_of("divergence-prop"));
  const double ln2 = std::log(2.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t size = 2 + draw.next_below(63);
    std::vector<double> p = random_distribution(draw, size, trial % 2 == 0);
    std::vector<double> q = random_distribution(draw, size, trial % 3 == 0);

    Divergences pq = per_token_divergences(p, q);
    Divergences qp = per_token_divergences(q, p);
    CHECK(pq.fkl == qp.rkl);  // identical floating-point operations
    CHECK(pq.rkl == qp.fkl);
    CHECK(pq.jsd == qp.jsd);

    // Flooring adds at most |V| * 1e-10 of mass, so the Gibbs bound only
    // softens negligibly.
    CHECK(pq.fkl >= -1e-6);
    CHECK(pq.rkl >= -1e-6);
    CHECK(pq.jsd >= -1e-12);
    CHECK(pq.jsd <= ln2 + 1e-12);
  }
}

TEST_CASE("divergence input validation") {
  CHECK_THROWS_WITH_AS(per_token_divergences({0.5, 0.5}, {1.0}),
                       doctest::Contains("length mismatch"), ValidationError);
  CHECK_THROWS_WITH_AS(per_token_divergences({}, {}), doctest::Contains("empty"),
                       ValidationError);
}

TEST_CASE("aggregation means over unpadded rows") {
  DistributionPairRecord rec = record_of(
      "item-a",
      {{0.75, 0.25}, {0.9, 0.1}, {0.5, 0.5}},
      {{0.5, 0.5}, {0.9, 0.1}, {0.5, 0.5}},
      {false, true, false});  // middle row is padding

  auto item = aggregate(rec);
  REQUIRE(item.has_value());
  CHECK(item->item_id == "item-a");
  CHECK(item->positions == 2);
  // Rows 0 and 2; row 2 is identical distributions, diverging by zero.
  CHECK(item->fkl == doctest::Approx(0.13081203594113697 / 2).epsilon(1e-12));
  CHECK(item->jsd == doctest::Approx(0.03382207556860525 / 2).epsilon(1e-12));

  SUBCASE("all padded rows aggregate to nothing") {
    rec.padded = {true, true, true};
    CHECK_FALSE(aggregate(rec).has_value());
  }
  SUBCASE("no rows aggregate to nothing") {
    CHECK_FALSE(aggregate(record_of("empty", {}, {}, {})).has_value());
  }
}

TEST_CASE("dataset means skip all-padded items and histogram the rest") {
  std::vector<DistributionPairRecord> records = {
      record_of("a", {{0.75, 0.25}, {0.5, 0.5}}, {{0.5, 0.5}, {0.5, 0.5}}, {false, false}),
      record_of("skipme", {{0.5, 0.5}}, {{0.5, 0.5}}, {true}),
      record_of("b", {{0.5, 0.5}}, {{0.5, 0.5}}, {false}),
  };
  DivergenceSummary summary = dataset_means(records);
  CHECK(summary.items == 2);
  CHECK(summary.skipped == 1);
  REQUIRE(summary.per_item.size() == 2);
  CHECK(summary.per_item[0].item_id == "a");
  CHECK(summary.per_item[1].item_id == "b");
  // Item a means over two rows (one divergent, one zero), item b is zero.
  double item_a_fkl = 0.13081203594113697 / 2;
  CHECK(summary.mean_fkl == doctest::Approx(item_a_fkl / 2).epsilon(1e-12));
  CHECK(summary.mean_jsd == doctest::Approx(0.03382207556860525 / 4).epsilon(1e-12));

  REQUIRE(summary.jsd_histogram.size() == static_cast<std::size_t>(kHistogramBins));
  std::int64_t total = 0;
  for (std::int64_t c : summary.jsd_histogram) total += c;
  CHECK(total == 2);
  CHECK(summary.jsd_histogram[0] == 1);  // item b at zero
  // Item a sits at jsd ~0.0169, bin floor(0.0169/ln2*50) = 1.
  CHECK(summary.jsd_histogram[1] == 1);

  SUBCASE("parallel evaluation is bit-identical") {
    DivergenceSummary par = dataset_means(records, 4);
    CHECK(par.mean_fkl == summary.mean_fkl);
    CHECK(par.mean_rkl == summary.mean_rkl);
    CHECK(par.mean_jsd == summary.mean_jsd);
    CHECK(par.items == summary.items);
    CHECK(par.skipped == summary.skipped);
  }
  SUBCASE("order of items only reorders per-item rows") {
    std::vector<DistributionPairRecord> reversed(records.rbegin(), records.rend());
    DivergenceSummary rev = dataset_means(reversed);
    CHECK(rev.items == summary.items);
    CHECK(rev.skipped == summary.skipped);
    CHECK(rev.mean_fkl == doctest::Approx(summary.mean_fkl).epsilon(1e-12));
    CHECK(rev.mean_jsd == doctest::Approx(summary.mean_jsd).epsilon(1e-12));
  }
  SUBCASE("no contributing items leave the means at zero") {
    DivergenceSummary empty = dataset_means({records[1]});
    CHECK(empty.items == 0);
    CHECK(empty.skipped == 1);
    CHECK(empty.mean_fkl == 0.0);
  }
}

TEST_CASE("histogram binning clamps out-of-range values") {
  CHECK(histogram({0.0, 0.5, 1.0}, 2, 0.0, 1.0) == std::vector<std::int64_t>{1, 2});
  CHECK(histogram({-5.0, 2.0}, 4, 0.0, 1.0) == std::vector<std::int64_t>{1, 0, 0, 1});
  CHECK(histogram({}, 3, 0.0, 1.0) == std::vector<std::int64_t>{0, 0, 0});
  CHECK_THROWS_AS(histogram({1.0}, 0, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(histogram({1.0}, 2, 1.0, 1.0), ValidationError);
}

TEST_CASE("cloze rendering is byte exact") {
  CHECK(render_cloze("What is it?", " An example") == "Question:\nWhat is it?\nAnswer: An example");
  CHECK(render_cloze("", "") == "Question:\n\nAnswer:");
}

TEST_CASE("binary dumps round-trip with float32 precision") {
  rng::Counter draw(41, rng::stream_of("dump-prop"));
  std::vector<DistributionPairRecord> records;
  records.push_back(record_of("first", {}, {}, {}));  // zero positions is legal
  for (int i = 0; i < 3; ++i) {
    std::size_t o = 1 + draw.next_below(4);
    std::size_t v = 2 + draw.next_below(6);
    DistributionPairRecord rec;
    rec.item_id = "item-" + std::to_string(i);
    for (std::size_t r = 0; r < o; ++r) {
      rec.p_aud.push_back(random_distribution(draw, v, false));
      rec.p_text.push_back(random_distribution(draw, v, false));
      rec.padded.push_back(draw.next_below(3) == 0);
    }
    records.push_back(std::move(rec));
  }

  testutil::TempDir dir("dumps");
  std::string bin = dir.file("scores.bin");
  write_dump(bin, records);

  auto loaded = read_dump(bin);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].item_id == records[i].item_id);
    CHECK(loaded[i].padded == records[i].padded);
    REQUIRE(loaded[i].p_aud.size() == records[i].p_aud.size());
    for (std::size_t r = 0; r < records[i].p_aud.size(); ++r) {
      for (std::size_t c = 0; c < records[i].p_aud[r].size(); ++c) {
        CHECK(std::fabs(loaded[i].p_aud[r][c] - records[i].p_aud[r][c]) <= 1e-6);
        CHECK(std::fabs(loaded[i].p_text[r][c] - records[i].p_text[r][c]) <= 1e-6);
      }
    }
  }

  SUBCASE("the sidecar counts records") {
    std::string side = testutil::read_file(bin + ".idx.json");
    CHECK(side.find("\"records\":4") != std::string::npos);
  }
  SUBCASE("a missing sidecar is tolerated") {
    std::filesystem::remove(bin + ".idx.json");
    CHECK(read_dump(bin).size() == records.size());
  }
  SUBCASE("a sidecar miscount is corruption") {
    testutil::write_file(bin + ".idx.json", "{\"v\":1,\"records\":7,\"items\":[]}\n");
    CHECK_THROWS_WITH_AS(read_dump(bin), doctest::Contains("sidecar record count"),
                         ValidationError);
  }
  SUBCASE("truncation is detected") {
    std::string raw = testutil::read_file(bin);
    testutil::write_file(bin, raw.substr(0, raw.size() - 3));
    std::filesystem::remove(bin + ".idx.json");
    CHECK_THROWS_WITH_AS(read_dump(bin), doctest::Contains("truncated"), ValidationError);
  }
}

TEST_CASE("dump headers are verified") {
  testutil::TempDir dir("dump-errs");
  std::string bad_magic = dir.file("x.bin");
  testutil::write_file(bad_magic, "NOPE....garbage");
  CHECK_THROWS_WITH_AS(read_dump(bad_magic), doctest::Contains("bad magic"), ValidationError);

  std::string bad_version = dir.file("y.bin");
  testutil::write_file(bad_version, std::string("FDMP") + std::string("\x02\x00\x00\x00", 4));
  CHECK_THROWS_WITH_AS(read_dump(bad_version), doctest::Contains("unsupported dump version"),
                       ValidationError);

  // Rows are revalidated on read; an off-sum row is corruption.
  std::string off = dir.file("z.bin");
  write_dump(off, {record_of("bad", {{0.5, 0.4}}, {{0.5, 0.5}}, {false})});
  CHECK_THROWS_WITH_AS(read_dump(off), doctest::Contains("does not sum to 1"), ValidationError);

  CHECK_THROWS_AS(read_dump(dir.file("missing.bin")), StageError);
}

TEST_CASE("dump directories mix binary and JSONL files in name order") {
  testutil::TempDir dir("dump-dir");

  std::vector<DistributionPairRecord> bin_records = {
      record_of("bin-item", {{0.5, 0.5}}, {{0.25, 0.75}}, {false})};
  write_dump(dir.file("a.bin"), bin_records);

  std::vector<DistributionPairRecord> jsonl_records = {
      record_of("jsonl-item", {{1.0, 0.0}}, {{0.5, 0.5}}, {false})};
  manifest::write(jsonl_records, dir.file("b.jsonl"));

  auto all = read_dumps(dir.path());
  REQUIRE(all.size() == 2);
  CHECK(all[0].item_id == "bin-item");
  CHECK(all[1].item_id == "jsonl-item");
  CHECK(all[1].p_aud[0][0] == doctest::Approx(1.0));

  SUBCASE("single files dispatch on extension") {
    CHECK(read_dumps(dir.file("a.bin"))[0].item_id == "bin-item");
    CHECK(read_dumps(dir.file("b.jsonl"))[0].item_id == "jsonl-item");
  }
  SUBCASE("an empty directory has no dumps") {
    testutil::TempDir empty("dump-empty");
    CHECK_THROWS_WITH_AS(read_dumps(empty.path()),
                         doctest::Contains("no .bin or .jsonl dump files found"),
                         ValidationError);
  }
  SUBCASE("a missing path is named") {
    CHECK_THROWS_WITH_AS(read_dumps(dir.file("nowhere")), doctest::Contains("no such dump path"),
                         ValidationError);
  }
}
