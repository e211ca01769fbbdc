#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace forge::pipeline {

// One stage instance in a run config: a registered kind plus the files it
// reads and writes. Stages communicate only through these files.
struct StageSpec {
  std::string name;
  std::string kind;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::ordered_json options = nlohmann::ordered_json::object();
};

struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string endpoints;  // endpoint config path, required by client stages
  std::vector<StageSpec> stages;
};

RunConfig parse_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::ordered_json& j, const std::string& where);

struct StageContext {
  StageSpec spec;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string endpoints;
};

using StageFn = void (*)(const StageContext&);

// Kind name -> implementation. Covers every subcommand that can appear in a
// run config.
const std::map<std::string, StageFn>& stage_registry();

void run_stage(const StageContext& context);

enum class StageStatus { kOk, kFailed, kSkipped };
const char* stage_status_name(StageStatus status);

struct OutputRecord {
  std::string path;
  std::string hash;    // content hash, empty when invalid
  bool valid = false;  // false for outputs of a failed stage
};

struct StageResult {
  StageSpec spec;
  StageStatus status = StageStatus::kSkipped;
  std::string error;
  std::vector<OutputRecord> outputs;
};

// No timestamps anywhere: identical config + inputs must produce an
// identical manifest. Each entry carries the full stage spec so any stage
// can be re-run in isolation from the manifest alone.
struct RunManifest {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string config_hash;
  bool ok = true;
  std::vector<StageResult> stages;
};

// Validates the DAG (unique names, known kinds, single producer per path,
// acyclic, every input either produced earlier or already on disk), then
// executes in topological layers; stages within a layer run in parallel up
// to jobs. A failed stage marks its outputs invalid and skips its transitive
// dependents; independent branches still run. Configuration problems throw
// ValidationError before anything executes; stage failures come back in the
// manifest with ok = false.
RunManifest run(const RunConfig& config);

nlohmann::ordered_json manifest_json(const RunManifest& manifest);
void write_run_manifest(const RunManifest& manifest, const std::string& path);

std::string file_hash_hex(const std::string& path);

struct TopicHistogram {
  std::string dataset;
  std::map<std::string, double> freq;  // sums to 1 within 1e-9
};

struct TopicPair {
  std::string a;
  std::string b;
  double l1 = 0.0;
};

struct TopicSummary {
  std::vector<TopicHistogram> histograms;
  std::vector<TopicPair> pairs;  // every unordered dataset pair
};

// dataset_files pairs a dataset name with its labels file. When label_set is
// non-empty, a label outside it is a ValidationError naming the label and
// line; otherwise the set is the union of observed labels. Frequencies are
// computed over the shared label set, absent labels counting zero.
TopicSummary topic_histograms(const std::vector<std::pair<std::string, std::string>>& dataset_files,
                              const std::vector<std::string>& label_set = {});

}  // namespace forge::pipeline
