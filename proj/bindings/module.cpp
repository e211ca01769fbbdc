#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "forge/chunker.hpp"
#include "forge/decontam.hpp"
#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/evalkit.hpp"
#include "forge/interleave.hpp"
#include "forge/mixture.hpp"
#include "forge/records.hpp"
#include "forge/rng.hpp"
#include "forge/synth.hpp"
#include "forge/tokenize.hpp"

namespace py = pybind11;

namespace {

std::vector<forge::Modality> tags_from_str(const std::string& tags) {
  std::vector<forge::Modality> out;
  out.reserve(tags.size());
  for (char c : tags) out.push_back(forge::modality_from_char(c));
  return out;
}

std::string tags_to_str(const std::vector<forge::Modality>& tags) {
  std::string out;
  out.reserve(tags.size());
  for (forge::Modality m : tags) out.push_back(forge::modality_char(m));
  return out;
}

}  // namespace

PYBIND11_MODULE(_speechforge, m) {
  using namespace forge;

  m.doc() = "speech-text interleaved pretraining data toolkit";
  m.attr("__version__") = "1.0.0";
  m.attr("RNG_ALGORITHM") = std::string(rng::kAlgorithm);

  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<DiarizedSegment>(m, "DiarizedSegment")
      .def(py::init([](double start_s, double end_s, std::string speaker_id, std::string text,
                       std::vector<std::int64_t> audio_tokens) {
             DiarizedSegment s;
             s.start_s = start_s;
             s.end_s = end_s;
             s.speaker_id = std::move(speaker_id);
             s.text = std::move(text);
             s.audio_tokens = std::move(audio_tokens);
             return s;
           }),
           py::arg("start_s"), py::arg("end_s"), py::arg("speaker_id"), py::arg("text") = "",
           py::arg("audio_tokens") = std::vector<std::int64_t>{})
      .def_readwrite("start_s", &DiarizedSegment::start_s)
      .def_readwrite("end_s", &DiarizedSegment::end_s)
      .def_readwrite("speaker_id", &DiarizedSegment::speaker_id)
      .def_readwrite("text", &DiarizedSegment::text)
      .def_readwrite("audio_tokens", &DiarizedSegment::audio_tokens);

  py::class_<AudioTextChunk>(m, "AudioTextChunk")
      .def(py::init([](double start_s, double end_s, std::string speaker_id, std::string text,
                       std::vector<std::int64_t> audio_tokens,
                       std::vector<std::int64_t> text_tokens, std::string audio_ref) {
             AudioTextChunk c;
             c.start_s = start_s;
             c.end_s = end_s;
             c.speaker_id = std::move(speaker_id);
             c.text = std::move(text);
             c.audio_tokens = std::move(audio_tokens);
             c.text_tokens = std::move(text_tokens);
             c.audio_ref = std::move(audio_ref);
             return c;
           }),
           py::arg("start_s"), py::arg("end_s"), py::arg("speaker_id") = "", py::arg("text") = "",
           py::arg("audio_tokens") = std::vector<std::int64_t>{},
           py::arg("text_tokens") = std::vector<std::int64_t>{}, py::arg("audio_ref") = "")
      .def_readwrite("start_s", &AudioTextChunk::start_s)
      .def_readwrite("end_s", &AudioTextChunk::end_s)
      .def_readwrite("speaker_id", &AudioTextChunk::speaker_id)
      .def_readwrite("text", &AudioTextChunk::text)
      .def_readwrite("audio_ref", &AudioTextChunk::audio_ref)
      .def_readwrite("audio_tokens", &AudioTextChunk::audio_tokens)
      .def_readwrite("text_tokens", &AudioTextChunk::text_tokens)
      .def_property_readonly("duration_s", &AudioTextChunk::duration_s);

  py::class_<InterleavedSample>(m, "InterleavedSample")
      .def(py::init([](std::string sample_id, std::vector<AudioTextChunk> chunks) {
             return InterleavedSample{std::move(sample_id), std::move(chunks)};
           }),
           py::arg("sample_id"), py::arg("chunks"))
      .def_readwrite("sample_id", &InterleavedSample::sample_id)
      .def_readwrite("chunks", &InterleavedSample::chunks);

  py::class_<RenderedSequence>(m, "RenderedSequence")
      .def(py::init([](std::string sample_id, std::vector<std::int64_t> tokens,
                       const std::string& modality_tags, std::vector<bool> loss_mask) {
             RenderedSequence r;
             r.sample_id = std::move(sample_id);
             r.tokens = std::move(tokens);
             r.modality_tags = tags_from_str(modality_tags);
             r.loss_mask = std::move(loss_mask);
             return r;
           }),
           py::arg("sample_id"), py::arg("tokens"), py::arg("modality_tags"), py::arg("loss_mask"))
      .def_readwrite("sample_id", &RenderedSequence::sample_id)
      .def_readwrite("tokens", &RenderedSequence::tokens)
      .def_readwrite("loss_mask", &RenderedSequence::loss_mask)
      .def_property(
          "modality_tags", [](const RenderedSequence& r) { return tags_to_str(r.modality_tags); },
          [](RenderedSequence& r, const std::string& tags) { r.modality_tags = tags_from_str(tags); });

  py::class_<PackBoundary>(m, "PackBoundary")
      .def_readonly("sample_id", &PackBoundary::sample_id)
      .def_readonly("offset", &PackBoundary::offset)
      .def_readonly("length", &PackBoundary::length);

  py::class_<PackedSequence>(m, "PackedSequence")
      .def_readonly("pack_id", &PackedSequence::pack_id)
      .def_readonly("tokens", &PackedSequence::tokens)
      .def_readonly("loss_mask", &PackedSequence::loss_mask)
      .def_readonly("boundaries", &PackedSequence::boundaries)
      .def_readonly("pad_len", &PackedSequence::pad_len)
      .def_property_readonly(
          "modality_tags", [](const PackedSequence& p) { return tags_to_str(p.modality_tags); });

  py::class_<TestItem>(m, "TestItem")
      .def(py::init([](std::string item_id, std::string question,
                       std::array<std::string, 4> choices, int answer_index) {
             return TestItem{std::move(item_id), std::move(question), std::move(choices),
                             answer_index};
           }),
           py::arg("item_id"), py::arg("question"), py::arg("choices"), py::arg("answer_index"))
      .def_readwrite("item_id", &TestItem::item_id)
      .def_readwrite("question", &TestItem::question)
      .def_readwrite("choices", &TestItem::choices)
      .def_readwrite("answer_index", &TestItem::answer_index);

  py::class_<ContaminationHit>(m, "ContaminationHit")
      .def_readonly("train_id", &ContaminationHit::train_id)
      .def_readonly("test_id", &ContaminationHit::test_id)
      .def_readonly("n", &ContaminationHit::n)
      .def_readonly("span", &ContaminationHit::span);

  py::class_<BootstrapResult>(m, "BootstrapResult")
      .def_readonly("full_acc", &BootstrapResult::full_acc)
      .def_readonly("clean_acc", &BootstrapResult::clean_acc)
      .def_readonly("rand_mean", &BootstrapResult::rand_mean)
      .def_readonly("ci_low", &BootstrapResult::ci_low)
      .def_readonly("ci_high", &BootstrapResult::ci_high)
      .def_readonly("p", &BootstrapResult::p)
      .def_readonly("below_resolution", &BootstrapResult::below_resolution)
      .def_readonly("replicates", &BootstrapResult::replicates)
      .def_readonly("n_items", &BootstrapResult::n_items)
      .def_readonly("k_removed", &BootstrapResult::k_removed)
      .def("p_display", &BootstrapResult::p_display);

  m.def(
      "chunk",
      [](const std::vector<DiarizedSegment>& segments, const std::string& strategy,
         double min_duration_s, double max_gap_s) {
        ChunkingConfig cfg;
        cfg.strategy = chunk_strategy_from_name(strategy);
        cfg.min_duration_s = min_duration_s;
        cfg.max_gap_s = max_gap_s;
        return chunk(segments, cfg);
      },
      py::arg("segments"), py::arg("strategy") = "coarse", py::arg("min_duration_s") = 0.2,
      py::arg("max_gap_s") = std::numeric_limits<double>::infinity(),
      "Merge diarized segments into audio-text chunks.");

  m.def(
      "ensemble",
      [](const std::vector<std::pair<std::string, std::string>>& candidates) {
        std::vector<TranscriptCandidate> list;
        list.reserve(candidates.size());
        for (const auto& [source_id, text] : candidates)
          list.push_back(TranscriptCandidate{source_id, text});
        return ensemble(list);
      },
      py::arg("candidates"), "Combine (source_id, text) candidates, most trusted first.");

  m.def(
      "has_repetition",
      [](const std::string& text, int ngram, int max_occurrences) {
        return has_repetition(text, RepetitionConfig{ngram, max_occurrences});
      },
      py::arg("text"), py::arg("ngram") = 15, py::arg("max_occurrences") = 5);

  m.def(
      "render_modalities",
      [](std::size_t n, const std::string& scheme, double audio_prob, std::uint64_t seed,
         std::uint64_t stream) {
        SamplingConfig cfg;
        cfg.scheme = sampling_scheme_from_name(scheme);
        cfg.audio_prob = audio_prob;
        cfg.seed = seed;
        return tags_to_str(render_modalities(n, cfg, stream));
      },
      py::arg("n"), py::arg("scheme") = "stochastic", py::arg("audio_prob") = 0.5,
      py::arg("seed") = 0, py::arg("stream") = 0,
      "Modality tags ('A'/'T') for an n-chunk sample; position one is always audio.");

  m.def(
      "count_switches",
      [](const std::string& tags) { return count_switches(tags_from_str(tags)); },
      py::arg("modality_tags"));

  m.def(
      "render_tokens",
      [](const InterleavedSample& sample, const std::string& modalities, bool mask_audio_loss) {
        return render_tokens(sample, tags_from_str(modalities), mask_audio_loss);
      },
      py::arg("sample"), py::arg("modalities"), py::arg("mask_audio_loss") = true);

  m.def(
      "pack",
      [](const std::vector<RenderedSequence>& sequences, std::int64_t sequence_length,
         std::int64_t pad_token) {
        return pack(sequences, PackingConfig{sequence_length, pad_token});
      },
      py::arg("sequences"), py::arg("sequence_length") = 16384, py::arg("pad_token") = 0);

  m.def("total_tokens", &total_tokens, py::arg("steps"), py::arg("batch"), py::arg("seq_len"));
  m.def("estimate_flops", &estimate_flops, py::arg("params"), py::arg("tokens"),
        "Dense-transformer training cost, 6 * params * tokens.");

  m.def(
      "plan_mixture",
      [](std::int64_t total_steps, std::int64_t batch_size, std::int64_t sequence_length,
         const std::vector<std::pair<std::string, double>>& speech_weights,
         const std::vector<std::pair<std::string, std::int64_t>>& sources, double text_fraction,
         const std::string& text_source) {
        MixtureSpec spec;
        spec.text_fraction = text_fraction;
        spec.text_source = text_source;
        spec.total_steps = total_steps;
        spec.batch_size = batch_size;
        spec.sequence_length = sequence_length;
        for (const auto& [name, weight] : speech_weights)
          spec.speech_sources.push_back(SpeechSourceSpec{name, weight});
        std::vector<SourceStats> stats;
        for (const auto& [name, tokens] : sources)
          stats.push_back(SourceStats{name, std::nullopt, tokens});
        MixturePlan result = plan(spec, stats);
        py::dict out;
        out["total_tokens"] = result.total_tokens;
        py::list rows;
        for (const PlanRow& row : result.rows) {
          py::dict r;
          r["name"] = row.name;
          r["fraction"] = row.global_fraction;
          r["tokens"] = row.tokens_drawn;
          r["repeats"] = row.repeats;
          rows.append(r);
        }
        out["rows"] = rows;
        return out;
      },
      py::arg("total_steps"), py::arg("batch_size"), py::arg("sequence_length"),
      py::arg("speech_weights"), py::arg("sources"), py::arg("text_fraction") = 0.6,
      py::arg("text_source") = "text");

  m.def(
      "per_token_divergences",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        evalkit::Divergences d = evalkit::per_token_divergences(p, q);
        py::dict out;
        out["fkl"] = d.fkl;
        out["rkl"] = d.rkl;
        out["jsd"] = d.jsd;
        return out;
      },
      py::arg("p"), py::arg("q"), "Forward KL, reverse KL and JSD in nats.");

  m.def(
      "choose",
      [](const std::vector<std::pair<double, std::int64_t>>& scores) {
        if (scores.size() != 4)
          throw ValidationError("choose expects 4 (logprob_sum, token_len) pairs");
        std::array<ChoiceScore, 4> choices;
        for (std::size_t i = 0; i < 4; ++i)
          choices[i] = ChoiceScore{scores[i].first, scores[i].second};
        return evalkit::choose(choices);
      },
      py::arg("scores"), "Length-normalized argmax over 4 (logprob_sum, token_len) pairs.");

  m.def("accuracy", &evalkit::accuracy, py::arg("correct"));
  m.def("render_cloze", &evalkit::render_cloze, py::arg("question"), py::arg("answer"));
  m.def("eval_item_text", &eval_item_text, py::arg("item"),
        "Question joined with the correct choice, the unit the contamination scan matches.");

  m.def(
      "find_hits",
      [](const std::vector<std::pair<std::string, std::string>>& train,
         const std::vector<TestItem>& eval_items, int n_min, int n_max) {
        std::vector<TrainText> docs;
        docs.reserve(train.size());
        for (const auto& [id, text] : train) docs.push_back(TrainText{id, text});
        return find_hits(docs, eval_items, NgramRange{n_min, n_max});
      },
      py::arg("train"), py::arg("eval_items"), py::arg("n_min") = 6, py::arg("n_max") = 13,
      "Verbatim n-gram overlaps between (id, text) train docs and eval items.");

  m.def("clean_set", &clean_set, py::arg("items"), py::arg("hits"));

  m.def(
      "significance",
      [](const std::vector<bool>& correct, const std::vector<std::size_t>& contaminated,
         int replicates, std::uint64_t seed) {
        return significance(correct, contaminated, replicates, seed);
      },
      py::arg("correct"), py::arg("contaminated"), py::arg("replicates") = 10000,
      py::arg("seed") = 0);

  m.def(
      "split_sentences", [](const std::string& text) { return split_sentences(text); },
      py::arg("text"));
  m.def(
      "mine_questions", [](const std::string& text) { return mine_questions(text); },
      py::arg("text"));
  m.def(
      "stand_in_text_token_ids",
      [](const std::string& text) { return stand_in_text_token_ids(text); }, py::arg("text"),
      "Deterministic per-word stand-in ids used when no real text tokenizer is wired in.");
}
