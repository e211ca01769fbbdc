#include <cstdint>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/manifest.hpp"
#include "forge/pipeline.hpp"

namespace {

using forge::pipeline::RunConfig;
using forge::pipeline::StageContext;
using forge::pipeline::StageSpec;
using json = nlohmann::ordered_json;

struct Global {
  std::uint64_t seed = 0;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string log_format = "text";
  std::string endpoints;
};

// Every subcommand is the corresponding pipeline stage run standalone, so a
// command line and a run-config stage behave identically.
int run_one(const Global& g, const char* kind, std::vector<std::string> inputs,
            std::vector<std::string> outputs, json options) {
  StageSpec spec;
  spec.name = kind;
  spec.kind = kind;
  spec.inputs = std::move(inputs);
  spec.outputs = std::move(outputs);
  spec.options = std::move(options);
  forge::pipeline::run_stage(StageContext{std::move(spec), g.seed, g.jobs, g.endpoints});
  return 0;
}

std::vector<std::string> read_label_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw forge::ValidationError("cannot open label set " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) labels.push_back(line);
  }
  return labels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech-text interleaved pretraining data toolkit"};
  app.require_subcommand(1);

  Global g;
  auto* seed_opt = app.add_option("--seed", g.seed, "global random seed")->capture_default_str();
  auto* jobs_opt = app.add_option("--jobs", g.jobs, "worker thread count")
                       ->check(CLI::PositiveNumber)
                       ->capture_default_str();
  app.add_option("--log-format", g.log_format, "log format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  // chunk
  auto* chunk = app.add_subcommand("chunk", "merge diarized segments into audio-text chunks");
  std::string chunk_in, chunk_out, chunk_strategy = "coarse";
  double chunk_min_dur = 0.2, chunk_max_gap = 0.0;
  chunk->add_option("--in", chunk_in, "diarization.jsonl")->required();
  chunk->add_option("--out", chunk_out, "chunks.jsonl")->required();
  chunk->add_option("--strategy", chunk_strategy, "merge strategy")
      ->check(CLI::IsMember({"coarse", "fine"}))
      ->capture_default_str();
  chunk->add_option("--min-dur", chunk_min_dur, "drop chunks shorter than this (seconds)")
      ->capture_default_str();
  auto* chunk_gap_opt =
      chunk->add_option("--max-gap", chunk_max_gap, "break merges across gaps longer than this");

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "combine candidate transcriptions per segment");
  std::string ens_in, ens_out;
  ens->add_option("--in", ens_in, "candidates.jsonl")->required();
  ens->add_option("--out", ens_out, "transcripts.jsonl")->required();

  // filter-repeats
  auto* filt = app.add_subcommand("filter-repeats", "drop chunks with repeated n-gram spans");
  std::string filt_in, filt_out;
  std::int64_t filt_ngram = 15, filt_max_occ = 5;
  filt->add_option("--in", filt_in, "chunks.jsonl")->required();
  filt->add_option("--out", filt_out, "chunks.jsonl")->required();
  filt->add_option("--ngram", filt_ngram, "window size in tokens")->capture_default_str();
  filt->add_option("--max-occ", filt_max_occ, "occurrences above this discard the chunk")
      ->capture_default_str();

  // attach
  auto* att = app.add_subcommand("attach", "attach ensembled transcripts onto diarization");
  std::string att_diar, att_tr, att_out;
  att->add_option("--diarization", att_diar, "diarization.jsonl")->required();
  att->add_option("--transcripts", att_tr, "transcripts.jsonl")->required();
  att->add_option("--out", att_out, "diarization.jsonl with text")->required();

  // assemble
  auto* asm_ = app.add_subcommand("assemble", "group chunks into interleaved samples");
  std::string asm_in, asm_out;
  std::int64_t asm_per_sample = 0;
  asm_->add_option("--in", asm_in, "chunks.jsonl")->required();
  asm_->add_option("--out", asm_out, "samples.jsonl")->required();
  asm_->add_option("--chunks-per-sample", asm_per_sample,
                   "split recordings into samples of this many chunks (0 = whole recording)")
      ->capture_default_str();

  // render
  auto* rend = app.add_subcommand("render", "render samples into token sequences");
  std::string rend_in, rend_out, rend_scheme = "stochastic", rend_mask = "on";
  double rend_audio_prob = 0.5;
  rend->add_option("--in", rend_in, "samples.jsonl")->required();
  rend->add_option("--out", rend_out, "rendered.jsonl")->required();
  rend->add_option("--scheme", rend_scheme, "modality sampling scheme")
      ->check(CLI::IsMember({"stochastic", "deterministic"}))
      ->capture_default_str();
  rend->add_option("--audio-prob", rend_audio_prob, "stochastic audio probability")
      ->capture_default_str();
  rend->add_option("--mask-audio-loss", rend_mask, "mask audio positions out of the loss")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();

  // pack
  auto* pk = app.add_subcommand("pack", "pack rendered sequences to a fixed length");
  std::string pk_in, pk_out;
  std::int64_t pk_len = 16384, pk_pad = 0;
  pk->add_option("--in", pk_in, "rendered.jsonl")->required();
  pk->add_option("--out", pk_out, "packed.jsonl")->required();
  pk->add_option("--seq-len", pk_len, "packed sequence length")->capture_default_str();
  pk->add_option("--pad-token", pk_pad, "padding token id")->capture_default_str();

  // plan
  auto* pl = app.add_subcommand("plan", "token budgets and repeats for a training mixture");
  std::string pl_spec, pl_sources, pl_out;
  double pl_params = 0.0;
  pl->add_option("--spec", pl_spec, "mixture.json")->required();
  pl->add_option("--sources", pl_sources, "sources.json or sources.jsonl")->required();
  pl->add_option("--out", pl_out, "plan.json")->required();
  pl->add_option("--model-params", pl_params, "parameter count for the FLOP estimate");

  // synth
  auto* sy = app.add_subcommand("synth", "build synthetic spoken corpora from crawled pages");
  std::string sy_in, sy_out, sy_mode = "krist", sy_endpoints, sy_dead, sy_rejected;
  std::int64_t sy_voices = 5, sy_in_flight = 0, sy_attempts = 3;
  double sy_rps = 0.0;
  bool sy_no_filter = false;
  sy->add_option("--in", sy_in, "docs.jsonl")->required();
  sy->add_option("--out", sy_out, "samples.jsonl")->required();
  sy->add_option("--mode", sy_mode, "corpus recipe")
      ->check(CLI::IsMember({"krist", "quest"}))
      ->capture_default_str();
  sy->add_option("--endpoint-config", sy_endpoints, "endpoints.json for the LLM and TTS clients")
      ->required();
  sy->add_option("--dead-letters", sy_dead, "write failed jobs here");
  sy->add_option("--rejected", sy_rejected, "write filtered questions here");
  sy->add_option("--voices", sy_voices, "voice pool size")->capture_default_str();
  sy->add_option("--max-in-flight", sy_in_flight, "concurrent client calls (0 = --jobs)");
  sy->add_option("--rps", sy_rps, "request rate limit per second (0 = unthrottled)");
  sy->add_option("--max-attempts", sy_attempts, "tries per client call")->capture_default_str();
  sy->add_flag("--no-domain-filter", sy_no_filter, "skip the knowledge-domain allowlist");

  // decontam
  auto* de = app.add_subcommand("decontam", "find n-gram overlap between train text and a testset");
  std::string de_train, de_eval, de_out, de_report;
  std::int64_t de_nmin = 6, de_nmax = 13;
  de->add_option("--train", de_train, "texts.jsonl or a directory of shards")->required();
  de->add_option("--eval", de_eval, "testset.jsonl")->required();
  de->add_option("--out", de_out, "hits.jsonl")->required();
  de->add_option("--report", de_report, "contamination report json");
  de->add_option("--nmin", de_nmin, "smallest window")->capture_default_str();
  de->add_option("--nmax", de_nmax, "largest window")->capture_default_str();

  // significance
  auto* sig = app.add_subcommand("significance", "random-removal bootstrap significance test");
  std::string sig_correct, sig_hits, sig_out;
  std::int64_t sig_reps = 10000;
  sig->add_option("--correct", sig_correct, "correct.jsonl")->required();
  sig->add_option("--hits", sig_hits, "hits.jsonl")->required();
  sig->add_option("--out", sig_out, "significance.json")->required();
  sig->add_option("--replicates", sig_reps, "bootstrap replicates")->capture_default_str();

  // divergence
  auto* dv = app.add_subcommand("divergence", "modality-alignment divergences from dumps");
  std::string dv_in, dv_out;
  dv->add_option("--dumps", dv_in, "dump file or directory")->required();
  dv->add_option("--out", dv_out, "divergence.json")->required();

  // score
  auto* sc = app.add_subcommand("score", "accuracy of length-normalized cloze scoring");
  std::string sc_in, sc_out;
  sc->add_option("--choices", sc_in, "choices.jsonl")->required();
  sc->add_option("--out", sc_out, "acc.json")->required();

  // topics
  auto* tp = app.add_subcommand("topics", "topic label histograms and pairwise L1 distances");
  std::vector<std::string> tp_labels;
  std::string tp_out, tp_label_set;
  tp->add_option("--labels", tp_labels, "labels.jsonl, one per dataset")->required();
  tp->add_option("--out", tp_out, "topics.json")->required();
  tp->add_option("--label-set", tp_label_set, "closed label set, one label per line");

  // validate
  auto* va = app.add_subcommand("validate", "validate a manifest file against a schema");
  std::string va_in, va_schema;
  va->add_option("--in", va_in, "manifest file")->required();
  va->add_option("--schema", va_schema, "schema name")
      ->check(CLI::IsMember(forge::manifest::schema_names()))
      ->required();

  // run
  auto* rn = app.add_subcommand("run", "execute a declarative stage pipeline");
  std::string rn_config, rn_manifest = "run_manifest.json";
  rn->add_option("--config", rn_config, "run.json")->required();
  rn->add_option("--manifest", rn_manifest, "run manifest output")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // bad arguments are validation failures
  }

  forge::log::set_format(g.log_format == "json" ? forge::log::Format::kJson
                                                : forge::log::Format::kText);

  try {
    if (app.got_subcommand(chunk)) {
      json options{{"strategy", chunk_strategy}, {"min_duration_s", chunk_min_dur}};
      if (chunk_gap_opt->count()) options["max_gap_s"] = chunk_max_gap;
      return run_one(g, "chunk", {chunk_in}, {chunk_out}, options);
    }
    if (app.got_subcommand(ens)) return run_one(g, "ensemble", {ens_in}, {ens_out}, json::object());
    if (app.got_subcommand(filt))
      return run_one(g, "filter-repeats", {filt_in}, {filt_out},
                     {{"ngram", filt_ngram}, {"max_occurrences", filt_max_occ}});
    if (app.got_subcommand(att))
      return run_one(g, "attach", {att_diar, att_tr}, {att_out}, json::object());
    if (app.got_subcommand(asm_))
      return run_one(g, "assemble", {asm_in}, {asm_out}, {{"chunks_per_sample", asm_per_sample}});
    if (app.got_subcommand(rend))
      return run_one(g, "render", {rend_in}, {rend_out},
                     {{"scheme", rend_scheme},
                      {"audio_prob", rend_audio_prob},
                      {"mask_audio_loss", rend_mask == "on"}});
    if (app.got_subcommand(pk))
      return run_one(g, "pack", {pk_in}, {pk_out},
                     {{"sequence_length", pk_len}, {"pad_token", pk_pad}});
    if (app.got_subcommand(pl)) {
      json options = json::object();
      if (pl_params > 0) options["model_params"] = pl_params;
      return run_one(g, "plan", {pl_spec, pl_sources}, {pl_out}, options);
    }
    if (app.got_subcommand(sy)) {
      g.endpoints = sy_endpoints;
      json options{{"mode", sy_mode},
                   {"voice_count", sy_voices},
                   {"max_attempts", sy_attempts},
                   {"filter_domains", !sy_no_filter}};
      if (sy_in_flight > 0) options["max_in_flight"] = sy_in_flight;
      if (sy_rps > 0) options["requests_per_s"] = sy_rps;
      std::vector<std::string> outputs{sy_out};
      if (!sy_dead.empty()) outputs.push_back(sy_dead);
      if (!sy_rejected.empty()) {
        if (sy_dead.empty())
          throw forge::ValidationError("--rejected requires --dead-letters as well");
        outputs.push_back(sy_rejected);
      }
      return run_one(g, "synth", {sy_in}, outputs, options);
    }
    if (app.got_subcommand(de)) {
      std::vector<std::string> outputs{de_out};
      if (!de_report.empty()) outputs.push_back(de_report);
      return run_one(g, "decontam", {de_train, de_eval}, outputs,
                     {{"n_min", de_nmin}, {"n_max", de_nmax}});
    }
    if (app.got_subcommand(sig))
      return run_one(g, "significance", {sig_correct, sig_hits}, {sig_out},
                     {{"replicates", sig_reps}});
    if (app.got_subcommand(dv)) return run_one(g, "divergence", {dv_in}, {dv_out}, json::object());
    if (app.got_subcommand(sc)) return run_one(g, "score", {sc_in}, {sc_out}, json::object());
    if (app.got_subcommand(tp)) {
      json options = json::object();
      if (!tp_label_set.empty()) options["label_set"] = read_label_set(tp_label_set);
      return run_one(g, "topics", tp_labels, {tp_out}, options);
    }
    if (app.got_subcommand(va)) {
      std::size_t count = forge::manifest::validate(va_in, va_schema);
      forge::log::info("manifest valid",
                       {{"path", va_in}, {"schema", va_schema}, {"records", std::to_string(count)}});
      return 0;
    }
    if (app.got_subcommand(rn)) {
      RunConfig config = forge::pipeline::parse_run_config(rn_config);
      if (seed_opt->count()) config.seed = g.seed;
      if (jobs_opt->count()) config.jobs = g.jobs;
      forge::pipeline::RunManifest manifest = forge::pipeline::run(config);
      forge::pipeline::write_run_manifest(manifest, rn_manifest);
      if (!manifest.ok) {
        forge::log::error("pipeline failed", {{"manifest", rn_manifest}});
        return 2;
      }
      forge::log::info("pipeline ok", {{"manifest", rn_manifest},
                                       {"stages", std::to_string(manifest.stages.size())}});
      return 0;
    }
  } catch (const forge::ValidationError& e) {
    forge::log::error(e.what());
    return 1;
  } catch (const std::exception& e) {
    forge::log::error(e.what());
    return 2;
  }
  return 0;
}
