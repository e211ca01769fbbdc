#include "forge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>

#include "forge/chunker.hpp"
#include "forge/clients.hpp"
#include "forge/decontam.hpp"
#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/evalkit.hpp"
#include "forge/hash.hpp"
#include "forge/interleave.hpp"
#include "forge/log.hpp"
#include "forge/manifest.hpp"
#include "forge/mixture.hpp"
#include "forge/mock_server.hpp"
#include "forge/parallel.hpp"
#include "forge/rng.hpp"
#include "forge/synth.hpp"
#include "forge/tokenize.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& detail) { throw ValidationError(detail); }

std::string stage_tag(const StageContext& ctx) {
  return "stage " + ctx.spec.name + " (" + ctx.spec.kind + ")";
}

void check_option_keys(const StageContext& ctx, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : ctx.spec.options.items()) {
    if (!allowed.count(key))
      bad(stage_tag(ctx) + ": unknown option '" + key + "'");
  }
}

std::string opt_str(const StageContext& ctx, const std::string& key, const std::string& fallback) {
  if (!ctx.spec.options.contains(key)) return fallback;
  const json& v = ctx.spec.options[key];
  if (!v.is_string()) bad(stage_tag(ctx) + ": option '" + key + "' must be a string");
  return v.get<std::string>();
}

double opt_num(const StageContext& ctx, const std::string& key, double fallback) {
  if (!ctx.spec.options.contains(key)) return fallback;
  const json& v = ctx.spec.options[key];
  if (!v.is_number()) bad(stage_tag(ctx) + ": option '" + key + "' must be a number");
  return v.get<double>();
}

std::int64_t opt_int(const StageContext& ctx, const std::string& key, std::int64_t fallback) {
  if (!ctx.spec.options.contains(key)) return fallback;
  const json& v = ctx.spec.options[key];
  if (!v.is_number_integer()) bad(stage_tag(ctx) + ": option '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

bool opt_bool(const StageContext& ctx, const std::string& key, bool fallback) {
  if (!ctx.spec.options.contains(key)) return fallback;
  const json& v = ctx.spec.options[key];
  if (!v.is_boolean()) bad(stage_tag(ctx) + ": option '" + key + "' must be a boolean");
  return v.get<bool>();
}

const std::string& need_input(const StageContext& ctx, std::size_t i, const char* what) {
  if (ctx.spec.inputs.size() <= i)
    bad(stage_tag(ctx) + ": missing input " + std::to_string(i + 1) + " (" + what + ")");
  return ctx.spec.inputs[i];
}

const std::string& need_output(const StageContext& ctx, std::size_t i, const char* what) {
  if (ctx.spec.outputs.size() <= i)
    bad(stage_tag(ctx) + ": missing output " + std::to_string(i + 1) + " (" + what + ")");
  return ctx.spec.outputs[i];
}

void check_arity(const StageContext& ctx, std::size_t inputs, std::size_t min_outputs,
                 std::size_t max_outputs) {
  if (ctx.spec.inputs.size() != inputs)
    bad(stage_tag(ctx) + ": expects exactly " + std::to_string(inputs) + " input(s), got " +
        std::to_string(ctx.spec.inputs.size()));
  if (ctx.spec.outputs.size() < min_outputs || ctx.spec.outputs.size() > max_outputs)
    bad(stage_tag(ctx) + ": output count must be between " + std::to_string(min_outputs) +
        " and " + std::to_string(max_outputs) + ", got " +
        std::to_string(ctx.spec.outputs.size()));
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw StageError("write failed for " + path);
}

// ---------------------------------------------------------------- stages --

void stage_chunk(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {"strategy", "min_duration_s", "max_gap_s", "text_separator"});
  ChunkingConfig cfg;
  cfg.strategy = chunk_strategy_from_name(opt_str(ctx, "strategy", "coarse"));
  cfg.min_duration_s = opt_num(ctx, "min_duration_s", 0.2);
  cfg.max_gap_s = opt_num(ctx, "max_gap_s", cfg.max_gap_s);
  cfg.text_separator = opt_str(ctx, "text_separator", " ");
  auto recordings = manifest::read<Recording>(need_input(ctx, 0, "diarization"));
  std::vector<std::vector<ChunkRecord>> per_rec(recordings.size());
  parallel_for(recordings.size(), ctx.jobs, [&](std::size_t i) {
    auto chunks = chunk(recordings[i].segments, cfg);
    per_rec[i].reserve(chunks.size());
    for (std::size_t k = 0; k < chunks.size(); ++k)
      per_rec[i].push_back(
          ChunkRecord{recordings[i].recording_id, static_cast<int>(k), std::move(chunks[k])});
  });
  std::vector<ChunkRecord> out;
  for (auto& group : per_rec)
    out.insert(out.end(), std::make_move_iterator(group.begin()),
               std::make_move_iterator(group.end()));
  manifest::write(out, need_output(ctx, 0, "chunks"));
}

void stage_attach(const StageContext& ctx) {
  check_arity(ctx, 2, 1, 1);
  check_option_keys(ctx, {});
  auto recordings = manifest::read<Recording>(need_input(ctx, 0, "diarization"));
  auto transcripts = manifest::read<TranscriptRecord>(need_input(ctx, 1, "transcripts"));
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < recordings.size(); ++i) by_id[recordings[i].recording_id] = i;
  for (const TranscriptRecord& t : transcripts) {
    auto it = by_id.find(t.recording_id);
    if (it == by_id.end())
      bad("transcript references unknown recording " + t.recording_id);
    auto& segments = recordings[it->second].segments;
    if (t.segment_index < 0 || static_cast<std::size_t>(t.segment_index) >= segments.size())
      bad("transcript references segment " + std::to_string(t.segment_index) +
          " outside recording " + t.recording_id);
    segments[static_cast<std::size_t>(t.segment_index)].text = t.text;
  }
  manifest::write(recordings, need_output(ctx, 0, "diarization with text"));
}

void stage_ensemble(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {});
  auto records = manifest::read<CandidateRecord>(need_input(ctx, 0, "candidates"));
  std::vector<TranscriptRecord> out(records.size());
  parallel_for(records.size(), ctx.jobs, [&](std::size_t i) {
    out[i] = TranscriptRecord{records[i].recording_id, records[i].segment_index,
                              ensemble(records[i].candidates)};
  });
  manifest::write(out, need_output(ctx, 0, "transcripts"));
}

void stage_filter_repeats(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {"ngram", "max_occurrences"});
  RepetitionConfig cfg;
  cfg.ngram = static_cast<int>(opt_int(ctx, "ngram", cfg.ngram));
  cfg.max_occurrences = static_cast<int>(opt_int(ctx, "max_occurrences", cfg.max_occurrences));
  auto records = manifest::read<ChunkRecord>(need_input(ctx, 0, "chunks"));
  std::vector<char> keep(records.size(), 1);
  parallel_for(records.size(), ctx.jobs, [&](std::size_t i) {
    keep[i] = has_repetition(records[i].chunk.text, cfg) ? 0 : 1;
  });
  std::vector<ChunkRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(std::move(records[i]));
  log::info("repetition filter",
            {{"kept", std::to_string(out.size())},
             {"dropped", std::to_string(records.size() - out.size())}});
  manifest::write(out, need_output(ctx, 0, "chunks"));
}

void stage_assemble(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {"chunks_per_sample"});
  auto per_sample = opt_int(ctx, "chunks_per_sample", 0);
  if (per_sample < 0) bad(stage_tag(ctx) + ": chunks_per_sample must be >= 0");
  auto records = manifest::read<ChunkRecord>(need_input(ctx, 0, "chunks"));
  std::stable_sort(records.begin(), records.end(), [](const ChunkRecord& a, const ChunkRecord& b) {
    return a.recording_id == b.recording_id ? a.chunk_index < b.chunk_index
                                            : a.recording_id < b.recording_id;
  });
  std::vector<InterleavedSample> samples;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].recording_id == records[i].recording_id) ++j;
    int index = 0;
    std::size_t start = i;
    while (start < j) {
      std::size_t stop = per_sample == 0
                             ? j
                             : std::min(j, start + static_cast<std::size_t>(per_sample));
      InterleavedSample sample;
      sample.sample_id = records[i].recording_id + "-" + std::to_string(index++);
      for (std::size_t k = start; k < stop; ++k) {
        AudioTextChunk chunk = std::move(records[k].chunk);
        if (chunk.text_tokens.empty() && !chunk.text.empty())
          chunk.text_tokens = stand_in_text_token_ids(chunk.text);
        sample.chunks.push_back(std::move(chunk));
      }
      samples.push_back(std::move(sample));
      start = stop;
    }
    i = j;
  }
  manifest::write(samples, need_output(ctx, 0, "samples"));
}

void stage_render(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {"scheme", "audio_prob", "mask_audio_loss"});
  SamplingConfig cfg;
  cfg.scheme = sampling_scheme_from_name(opt_str(ctx, "scheme", "stochastic"));
  cfg.audio_prob = opt_num(ctx, "audio_prob", 0.5);
  cfg.seed = ctx.seed;
  bool mask = opt_bool(ctx, "mask_audio_loss", true);
  auto samples = manifest::read<InterleavedSample>(need_input(ctx, 0, "samples"));
  std::vector<RenderedSequence> out(samples.size());
  parallel_for(samples.size(), ctx.jobs, [&](std::size_t i) {
    // Stream derives from the sample id so results are independent of
    // sample order and worker count.
    auto modalities =
        render_modalities(samples[i].chunks.size(), cfg, rng::stream_of(samples[i].sample_id));
    out[i] = render_tokens(samples[i], modalities, mask);
  });
  manifest::write(out, need_output(ctx, 0, "rendered"));
}

void stage_pack(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {"sequence_length", "pad_token"});
  PackingConfig cfg;
  cfg.sequence_length = opt_int(ctx, "sequence_length", cfg.sequence_length);
  cfg.pad_token = opt_int(ctx, "pad_token", cfg.pad_token);
  auto rendered = manifest::read<RenderedSequence>(need_input(ctx, 0, "rendered"));
  manifest::write(pack(rendered, cfg), need_output(ctx, 0, "packed"));
}

void stage_plan(const StageContext& ctx) {
  check_arity(ctx, 2, 1, 1);
  check_option_keys(ctx, {"model_params"});
  MixtureSpec spec = parse_mixture_spec(need_input(ctx, 0, "mixture spec"));
  auto sources = read_sources(need_input(ctx, 1, "sources"));
  MixturePlan result = plan(spec, sources);
  json j;
  j["v"] = kManifestVersion;
  j["total_tokens"] = result.total_tokens;
  j["rows"] = json::array();
  for (const PlanRow& row : result.rows) {
    json r;
    r["name"] = row.name;
    r["fraction"] = row.global_fraction;
    r["tokens"] = row.tokens_drawn;
    r["repeats"] = row.repeats;
    j["rows"].push_back(r);
  }
  double params = opt_num(ctx, "model_params", 0.0);
  if (params > 0) j["flops"] = estimate_flops(params, result.total_tokens);
  write_json(j, need_output(ctx, 0, "plan"));
}

// Endpoint config: {"llm": {...}, "tts": {...}} where each endpoint is
//   {"kind": "http", "base_url": "...", "timeout_s": 30, "token_env": "..."}
// or {"kind": "mock", "fail_first": 0}. Credentials only ever come from the
// named environment variable.
struct EndpointBundle {
  std::unique_ptr<LlmClient> llm;
  std::unique_ptr<TtsClient> tts;
  std::vector<std::unique_ptr<MockServer>> servers;
};

std::string endpoint_base_url(const json& spec, EndpointBundle& bundle, const std::string& name) {
  std::string kind = spec.value("kind", "http");
  if (kind == "mock") {
    bundle.servers.push_back(std::make_unique<MockServer>(spec.value("fail_first", 0)));
    return bundle.servers.back()->base_url();
  }
  if (kind != "http") bad("endpoint " + name + ": unknown kind '" + kind + "'");
  if (!spec.contains("base_url") || !spec["base_url"].is_string())
    bad("endpoint " + name + ": missing string field 'base_url'");
  return spec["base_url"].get<std::string>();
}

std::string endpoint_token(const json& spec, const std::string& name) {
  if (!spec.contains("token_env")) return "";
  std::string var = spec["token_env"].get<std::string>();
  const char* token = std::getenv(var.c_str());
  if (!token || !*token)
    bad("endpoint " + name + ": environment variable " + var + " is not set");
  return token;
}

EndpointBundle make_endpoints(const std::string& path) {
  if (path.empty()) bad("synth requires an endpoint config (--endpoints)");
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open endpoint config " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) bad(path + ": endpoint config must be a JSON object");
  if (!j.contains("llm") || !j.contains("tts"))
    bad(path + ": endpoint config needs 'llm' and 'tts' entries");
  EndpointBundle bundle;
  int timeout_llm = j["llm"].value("timeout_s", 30);
  int timeout_tts = j["tts"].value("timeout_s", 30);
  std::string llm_url = endpoint_base_url(j["llm"], bundle, "llm");
  std::string tts_url = endpoint_base_url(j["tts"], bundle, "tts");
  bundle.llm = std::make_unique<HttpLlmClient>(llm_url, timeout_llm, endpoint_token(j["llm"], "llm"));
  bundle.tts = std::make_unique<HttpTtsClient>(tts_url, timeout_tts, endpoint_token(j["tts"], "tts"));
  return bundle;
}

void stage_synth(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 3);
  check_option_keys(ctx, {"mode", "voice_count", "max_in_flight", "requests_per_s",
                          "filter_domains", "max_attempts"});
  SynthConfig cfg;
  cfg.mode = synth_mode_from_name(opt_str(ctx, "mode", "krist"));
  cfg.seed = ctx.seed;
  cfg.voice_count = static_cast<int>(opt_int(ctx, "voice_count", cfg.voice_count));
  cfg.max_in_flight = static_cast<int>(opt_int(ctx, "max_in_flight", ctx.jobs));
  cfg.requests_per_s = opt_num(ctx, "requests_per_s", cfg.requests_per_s);
  cfg.filter_domains = opt_bool(ctx, "filter_domains", cfg.filter_domains);
  cfg.retry.max_attempts = static_cast<int>(opt_int(ctx, "max_attempts", cfg.retry.max_attempts));
  auto docs = manifest::read<SeedDocument>(need_input(ctx, 0, "docs"));
  EndpointBundle endpoints = make_endpoints(ctx.endpoints);
  SynthResult result = synth_corpus(docs, *endpoints.llm, *endpoints.tts, cfg);
  manifest::write(result.samples, need_output(ctx, 0, "samples"));
  log::info("synth finished",
            {{"samples", std::to_string(result.samples.size())},
             {"dead_letters", std::to_string(result.dead_letters.size())},
             {"rejected", std::to_string(result.rejected.size())},
             {"retries", std::to_string(result.retries)},
             {"docs_skipped_domain", std::to_string(result.docs_skipped_domain)}});
  if (ctx.spec.outputs.size() > 1) {
    std::ofstream dead(ctx.spec.outputs[1], std::ios::binary | std::ios::trunc);
    if (!dead) throw StageError("cannot write " + ctx.spec.outputs[1]);
    for (const DeadLetter& letter : result.dead_letters) {
      json line;
      line["v"] = kManifestVersion;
      line["doc_id"] = letter.doc_id;
      line["stage"] = letter.stage;
      line["detail"] = letter.detail;
      dead << line.dump() << '\n';
    }
  }
  if (ctx.spec.outputs.size() > 2) {
    std::ofstream rej(ctx.spec.outputs[2], std::ios::binary | std::ios::trunc);
    if (!rej) throw StageError("cannot write " + ctx.spec.outputs[2]);
    for (const RejectedQuestion& q : result.rejected) {
      json line;
      line["v"] = kManifestVersion;
      line["doc_id"] = q.doc_id;
      line["question"] = q.question;
      line["complete"] = q.verdict.complete;
      line["is_question"] = q.verdict.is_question;
      rej << line.dump() << '\n';
    }
  }
}

std::vector<std::string> train_shards(const std::string& path) {
  fs::path p(path);
  if (!fs::exists(p)) bad(path + ": no such train path");
  if (!fs::is_directory(p)) return {path};
  std::vector<std::string> shards;
  for (const auto& entry : fs::directory_iterator(p))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      shards.push_back(entry.path().string());
  std::sort(shards.begin(), shards.end());
  if (shards.empty()) bad(path + ": no .jsonl shards found");
  return shards;
}

void stage_decontam(const StageContext& ctx) {
  check_arity(ctx, 2, 1, 2);
  check_option_keys(ctx, {"n_min", "n_max"});
  NgramRange range;
  range.n_min = static_cast<int>(opt_int(ctx, "n_min", range.n_min));
  range.n_max = static_cast<int>(opt_int(ctx, "n_max", range.n_max));
  auto items = manifest::read<TestItem>(need_input(ctx, 1, "testset"));
  EvalIndex index(items, range);
  Tokenizer tokenizer = default_tokenizer();
  auto shards = train_shards(need_input(ctx, 0, "train texts"));
  std::vector<ContaminationHit> hits;
  std::map<std::string, std::set<std::string>> items_by_shard;
  for (const std::string& shard : shards) {
    std::ifstream in(shard, std::ios::binary);
    if (!in) throw StageError("cannot open " + shard);
    std::string line;
    std::size_t lineno = 0;
    std::size_t before = hits.size();
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto doc = manifest::from_line<TrainText>(line, shard + ":" + std::to_string(lineno));
      index.probe(doc.id, tokenizer(doc.text), hits);
    }
    auto& shard_items = items_by_shard[fs::path(shard).filename().string()];
    for (std::size_t i = before; i < hits.size(); ++i) shard_items.insert(hits[i].test_id);
  }
  manifest::write(hits, need_output(ctx, 0, "hits"));
  if (ctx.spec.outputs.size() > 1) {
    std::string eval_name = fs::path(need_input(ctx, 1, "testset")).filename().string();
    std::vector<std::string> corpus_names;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> hit_items;
    for (const std::string& shard : shards) {
      std::string shard_name = fs::path(shard).filename().string();
      corpus_names.push_back(shard_name);
      hit_items[{eval_name, shard_name}] = items_by_shard[shard_name];
    }
    auto report = contamination_report({{eval_name, static_cast<std::int64_t>(items.size())}},
                                       corpus_names, hit_items);
    json j;
    j["v"] = kManifestVersion;
    j["eval_sets"] = report.eval_names;
    j["corpora"] = report.corpus_names;
    j["cells"] = json::array();
    for (std::size_t r = 0; r < report.cells.size(); ++r) {
      json row = json::array();
      for (const ReportCell& cell : report.cells[r]) {
        json c;
        c["contaminated"] = cell.contaminated;
        c["total"] = cell.total;
        c["display"] = cell.display();
        row.push_back(c);
      }
      j["cells"].push_back(row);
    }
    const ReportCell& unioned = report.cells.at(0).back();
    j["clean_items"] = unioned.total - unioned.contaminated;
    write_json(j, ctx.spec.outputs[1]);
  }
}

void stage_significance(const StageContext& ctx) {
  check_arity(ctx, 2, 1, 1);
  check_option_keys(ctx, {"replicates"});
  int replicates = static_cast<int>(opt_int(ctx, "replicates", 10000));
  auto graded = manifest::read<CorrectRecord>(need_input(ctx, 0, "grading"));
  auto hits = manifest::read<ContaminationHit>(need_input(ctx, 1, "hits"));
  std::set<std::string> dirty;
  for (const ContaminationHit& h : hits) dirty.insert(h.test_id);
  std::vector<bool> correct;
  std::vector<std::size_t> contaminated;
  correct.reserve(graded.size());
  for (std::size_t i = 0; i < graded.size(); ++i) {
    correct.push_back(graded[i].correct);
    if (dirty.count(graded[i].item_id)) contaminated.push_back(i);
  }
  BootstrapResult result = significance(correct, contaminated, replicates, ctx.seed);
  json j;
  j["v"] = kManifestVersion;
  j["n_items"] = result.n_items;
  j["k_removed"] = result.k_removed;
  j["replicates"] = result.replicates;
  j["full_acc"] = result.full_acc;
  j["clean_acc"] = result.clean_acc;
  j["rand_mean"] = result.rand_mean;
  j["ci_low"] = result.ci_low;
  j["ci_high"] = result.ci_high;
  j["p"] = result.p;
  j["below_resolution"] = result.below_resolution;
  j["p_display"] = result.p_display();
  write_json(j, need_output(ctx, 0, "significance"));
}

void stage_score(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {});
  auto records = manifest::read<ChoiceRecord>(need_input(ctx, 0, "choices"));
  if (records.empty()) bad(stage_tag(ctx) + ": empty choices file");
  std::int64_t matches = 0;
  for (const ChoiceRecord& rec : records)
    if (evalkit::choose(rec.choices) == rec.answer_index) ++matches;
  json j;
  j["v"] = kManifestVersion;
  j["items"] = records.size();
  j["correct"] = matches;
  j["accuracy"] = static_cast<double>(matches) / static_cast<double>(records.size());
  write_json(j, need_output(ctx, 0, "accuracy"));
}

void stage_divergence(const StageContext& ctx) {
  check_arity(ctx, 1, 1, 1);
  check_option_keys(ctx, {});
  auto records = evalkit::read_dumps(need_input(ctx, 0, "dumps"));
  evalkit::DivergenceSummary summary = evalkit::dataset_means(records, ctx.jobs);
  json j;
  j["v"] = kManifestVersion;
  j["items"] = summary.items;
  j["skipped"] = summary.skipped;
  j["mean_fkl"] = summary.mean_fkl;
  j["mean_rkl"] = summary.mean_rkl;
  j["mean_jsd"] = summary.mean_jsd;
  json hist;
  hist["lo"] = 0.0;
  hist["hi"] = std::log(2.0);
  hist["counts"] = summary.jsd_histogram;
  j["jsd_histogram"] = hist;
  j["per_item"] = json::array();
  for (const evalkit::ItemDivergence& item : summary.per_item) {
    json r;
    r["item_id"] = item.item_id;
    r["fkl"] = item.fkl;
    r["rkl"] = item.rkl;
    r["jsd"] = item.jsd;
    r["positions"] = item.positions;
    j["per_item"].push_back(r);
  }
  write_json(j, need_output(ctx, 0, "divergence"));
}

void stage_topics(const StageContext& ctx) {
  if (ctx.spec.inputs.empty()) bad(stage_tag(ctx) + ": needs at least one labels file");
  if (ctx.spec.outputs.size() != 1) bad(stage_tag(ctx) + ": expects exactly one output");
  check_option_keys(ctx, {"label_set"});
  std::vector<std::string> label_set;
  if (ctx.spec.options.contains("label_set")) {
    for (const json& l : ctx.spec.options["label_set"]) label_set.push_back(l.get<std::string>());
  }
  std::vector<std::pair<std::string, std::string>> dataset_files;
  for (const std::string& in : ctx.spec.inputs)
    dataset_files.emplace_back(fs::path(in).stem().string(), in);
  TopicSummary summary = topic_histograms(dataset_files, label_set);
  json j;
  j["v"] = kManifestVersion;
  j["datasets"] = json::array();
  for (const TopicHistogram& h : summary.histograms) {
    json d;
    d["name"] = h.dataset;
    d["freq"] = json::object();
    for (const auto& [label, f] : h.freq) d["freq"][label] = f;
    j["datasets"].push_back(d);
  }
  j["pairs"] = json::array();
  for (const TopicPair& p : summary.pairs) {
    json d;
    d["a"] = p.a;
    d["b"] = p.b;
    d["l1"] = p.l1;
    j["pairs"].push_back(d);
  }
  write_json(j, need_output(ctx, 0, "topics"));
}

}  // namespace

const std::map<std::string, StageFn>& stage_registry() {
  static const std::map<std::string, StageFn> registry = {
      {"chunk", &stage_chunk},
      {"attach", &stage_attach},
      {"ensemble", &stage_ensemble},
      {"filter-repeats", &stage_filter_repeats},
      {"assemble", &stage_assemble},
      {"render", &stage_render},
      {"pack", &stage_pack},
      {"plan", &stage_plan},
      {"synth", &stage_synth},
      {"decontam", &stage_decontam},
      {"significance", &stage_significance},
      {"score", &stage_score},
      {"divergence", &stage_divergence},
      {"topics", &stage_topics},
  };
  return registry;
}

void run_stage(const StageContext& context) {
  auto it = stage_registry().find(context.spec.kind);
  if (it == stage_registry().end())
    bad("unknown stage kind '" + context.spec.kind + "'");
  it->second(context);
}

const char* stage_status_name(StageStatus status) {
  switch (status) {
    case StageStatus::kOk: return "ok";
    case StageStatus::kFailed: return "failed";
    case StageStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

namespace {

std::vector<std::string> string_list(const json& j, const std::string& where) {
  std::vector<std::string> out;
  if (j.is_string()) {
    out.push_back(j.get<std::string>());
    return out;
  }
  if (!j.is_array()) bad(where + " must be a string or array of strings");
  for (const json& e : j) {
    if (!e.is_string()) bad(where + " must contain only strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where + ": run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "v" && key != "seed" && key != "jobs" && key != "endpoints" && key != "stages")
      bad(where + ": unknown run config key '" + key + "'");
  }
  RunConfig config;
  if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("jobs")) {
    config.jobs = j["jobs"].get<int>();
    if (config.jobs < 1) bad(where + ": jobs must be >= 1");
  }
  if (j.contains("endpoints")) config.endpoints = j["endpoints"].get<std::string>();
  if (j.contains("stages")) {
    if (!j["stages"].is_array()) bad(where + ": 'stages' must be an array");
    std::size_t index = 0;
    for (const json& s : j["stages"]) {
      ++index;
      std::string stage_where = where + ": stage " + std::to_string(index);
      if (!s.is_object()) bad(stage_where + " must be a JSON object");
      StageSpec spec;
      for (const auto& [key, value] : s.items()) {
        if (key != "name" && key != "kind" && key != "in" && key != "out" && key != "options")
          bad(stage_where + ": unknown key '" + key + "'");
      }
      if (!s.contains("kind") || !s["kind"].is_string())
        bad(stage_where + ": missing string field 'kind'");
      spec.kind = s["kind"].get<std::string>();
      spec.name = s.contains("name") ? s["name"].get<std::string>()
                                     : spec.kind + "-" + std::to_string(index);
      if (s.contains("in")) spec.inputs = string_list(s["in"], stage_where + " 'in'");
      if (s.contains("out")) spec.outputs = string_list(s["out"], stage_where + " 'out'");
      if (s.contains("options")) {
        if (!s["options"].is_object()) bad(stage_where + ": 'options' must be an object");
        spec.options = s["options"];
      }
      config.stages.push_back(std::move(spec));
    }
  }
  return config;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open run config " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ValidationError(path + ": invalid JSON");
  return run_config_from_json(j, path);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("cannot hash " + path);
  Hash128Stream stream;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    stream.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  return to_hex(stream.digest());
}

namespace {

json config_json(const RunConfig& config) {
  json j;
  j["v"] = kManifestVersion;
  j["seed"] = config.seed;
  j["jobs"] = config.jobs;
  j["endpoints"] = config.endpoints;
  j["stages"] = json::array();
  for (const StageSpec& s : config.stages) {
    json e;
    e["name"] = s.name;
    e["kind"] = s.kind;
    e["in"] = s.inputs;
    e["out"] = s.outputs;
    e["options"] = s.options;
    j["stages"].push_back(e);
  }
  return j;
}

struct Dag {
  // deps[i] holds producing stage indices; layer[i] is the topological depth.
  std::vector<std::set<std::size_t>> deps;
  std::vector<std::size_t> layer;
  std::size_t layer_count = 0;
};

Dag validate_dag(const RunConfig& config) {
  const auto& stages = config.stages;
  std::set<std::string> names;
  std::map<std::string, std::size_t> producer;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].name.empty()) bad("stage " + std::to_string(i + 1) + " has an empty name");
    if (!names.insert(stages[i].name).second) bad("duplicate stage name '" + stages[i].name + "'");
    if (!stage_registry().count(stages[i].kind))
      bad("stage " + stages[i].name + ": unknown kind '" + stages[i].kind + "'");
    for (const std::string& out : stages[i].outputs) {
      auto [it, inserted] = producer.emplace(out, i);
      if (!inserted)
        bad("stages " + stages[it->second].name + " and " + stages[i].name +
            " both produce " + out);
    }
  }
  Dag dag;
  dag.deps.resize(stages.size());
  for (std::size_t i = 0; i < stages.size(); ++i) {
    for (const std::string& in : stages[i].inputs) {
      auto it = producer.find(in);
      if (it != producer.end()) {
        if (it->second == i) bad("stage " + stages[i].name + " consumes its own output " + in);
        dag.deps[i].insert(it->second);
      } else if (!fs::exists(in)) {
        bad("stage " + stages[i].name + ": input " + in +
            " is neither produced by another stage nor present on disk");
      }
    }
  }
  // Longest-path layering; a leftover stage means a dependency cycle.
  dag.layer.assign(stages.size(), 0);
  std::vector<bool> placed(stages.size(), false);
  std::size_t remaining = stages.size();
  while (remaining > 0) {
    bool progress = false;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (placed[i]) continue;
      bool ready = true;
      std::size_t depth = 0;
      for (std::size_t d : dag.deps[i]) {
        if (!placed[d]) {
          ready = false;
          break;
        }
        depth = std::max(depth, dag.layer[d] + 1);
      }
      if (!ready) continue;
      dag.layer[i] = depth;
      dag.layer_count = std::max(dag.layer_count, depth + 1);
      placed[i] = true;
      --remaining;
      progress = true;
    }
    if (!progress) {
      std::string cycle;
      for (std::size_t i = 0; i < stages.size(); ++i)
        if (!placed[i]) cycle += (cycle.empty() ? "" : ", ") + stages[i].name;
      bad("stage dependency cycle involving: " + cycle);
    }
  }
  return dag;
}

}  // namespace

RunManifest run(const RunConfig& config) {
  Dag dag = validate_dag(config);
  RunManifest manifest;
  manifest.seed = config.seed;
  manifest.jobs = config.jobs;
  manifest.config_hash = to_hex(hash128(config_json(config).dump()));
  manifest.stages.resize(config.stages.size());
  for (std::size_t i = 0; i < config.stages.size(); ++i)
    manifest.stages[i].spec = config.stages[i];

  std::vector<bool> succeeded(config.stages.size(), false);
  for (std::size_t layer = 0; layer < dag.layer_count; ++layer) {
    std::vector<std::size_t> runnable;
    for (std::size_t i = 0; i < config.stages.size(); ++i) {
      if (dag.layer[i] != layer) continue;
      bool upstream_ok = true;
      for (std::size_t d : dag.deps[i]) upstream_ok = upstream_ok && succeeded[d];
      if (upstream_ok) {
        runnable.push_back(i);
      } else {
        manifest.stages[i].status = StageStatus::kSkipped;
        manifest.stages[i].error = "skipped: upstream stage failed";
      }
    }
    parallel_for(runnable.size(), config.jobs, [&](std::size_t k) {
      std::size_t i = runnable[k];
      StageResult& result = manifest.stages[i];
      StageContext ctx{config.stages[i], config.seed, config.jobs, config.endpoints};
      try {
        log::info("stage start", {{"name", ctx.spec.name}, {"kind", ctx.spec.kind}});
        run_stage(ctx);
        for (const std::string& out : ctx.spec.outputs)
          if (!fs::exists(out))
            throw StageError("stage did not write declared output " + out);
        result.status = StageStatus::kOk;
        for (const std::string& out : ctx.spec.outputs)
          result.outputs.push_back(OutputRecord{out, file_hash_hex(out), true});
        succeeded[i] = true;
        log::info("stage ok", {{"name", ctx.spec.name}});
      } catch (const std::exception& e) {
        result.status = StageStatus::kFailed;
        result.error = e.what();
        for (const std::string& out : ctx.spec.outputs)
          result.outputs.push_back(OutputRecord{out, "", false});
        log::error("stage failed", {{"name", ctx.spec.name}, {"error", e.what()}});
      }
    });
  }
  manifest.ok = true;
  for (const StageResult& r : manifest.stages)
    manifest.ok = manifest.ok && r.status == StageStatus::kOk;
  return manifest;
}

json manifest_json(const RunManifest& manifest) {
  json j;
  j["v"] = kManifestVersion;
  j["seed"] = manifest.seed;
  j["jobs"] = manifest.jobs;
  j["config_hash"] = manifest.config_hash;
  j["ok"] = manifest.ok;
  j["stages"] = json::array();
  for (const StageResult& r : manifest.stages) {
    json e;
    e["name"] = r.spec.name;
    e["kind"] = r.spec.kind;
    e["in"] = r.spec.inputs;
    e["out"] = r.spec.outputs;
    e["options"] = r.spec.options;
    e["status"] = stage_status_name(r.status);
    if (!r.error.empty()) e["error"] = r.error;
    e["outputs"] = json::array();
    for (const OutputRecord& o : r.outputs) {
      json f;
      f["path"] = o.path;
      f["valid"] = o.valid;
      if (o.valid) f["hash"] = o.hash;
      e["outputs"].push_back(f);
    }
    j["stages"].push_back(e);
  }
  return j;
}

void write_run_manifest(const RunManifest& manifest, const std::string& path) {
  write_json(manifest_json(manifest), path);
}

TopicSummary topic_histograms(const std::vector<std::pair<std::string, std::string>>& dataset_files,
                              const std::vector<std::string>& label_set) {
  if (dataset_files.empty()) throw ValidationError("topic_histograms: no datasets");
  std::set<std::string> allowed(label_set.begin(), label_set.end());
  std::vector<std::map<std::string, std::int64_t>> counts(dataset_files.size());
  std::set<std::string> all_labels(label_set.begin(), label_set.end());
  for (std::size_t d = 0; d < dataset_files.size(); ++d) {
    auto labels = manifest::read<LabelRecord>(dataset_files[d].second);
    if (labels.empty())
      throw ValidationError(dataset_files[d].second + ": empty labels file");
    std::size_t lineno = 0;
    for (const LabelRecord& rec : labels) {
      ++lineno;
      if (!allowed.empty() && !allowed.count(rec.label))
        throw ValidationError(dataset_files[d].second + ":" + std::to_string(lineno) +
                              ": unknown label '" + rec.label + "'");
      ++counts[d][rec.label];
      all_labels.insert(rec.label);
    }
  }
  TopicSummary summary;
  for (std::size_t d = 0; d < dataset_files.size(); ++d) {
    TopicHistogram hist;
    hist.dataset = dataset_files[d].first;
    std::int64_t total = 0;
    for (const auto& [label, n] : counts[d]) total += n;
    for (const std::string& label : all_labels) {
      auto it = counts[d].find(label);
      hist.freq[label] =
          it == counts[d].end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
    }
    summary.histograms.push_back(std::move(hist));
  }
  for (std::size_t a = 0; a < summary.histograms.size(); ++a) {
    for (std::size_t b = a + 1; b < summary.histograms.size(); ++b) {
      double l1 = 0.0;
      for (const std::string& label : all_labels)
        l1 += std::fabs(summary.histograms[a].freq.at(label) - summary.histograms[b].freq.at(label));
      summary.pairs.push_back(TopicPair{summary.histograms[a].dataset,
                                        summary.histograms[b].dataset, l1});
    }
  }
  return summary;
}

}  // namespace forge::pipeline
