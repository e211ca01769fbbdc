#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace forge {

// Every manifest line carries this schema version.
inline constexpr int kManifestVersion = 1;

// One diarized span of one recording. Transcription text and speech token ids
// are attached by upstream stages when available.
struct DiarizedSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string speaker_id;
  std::string text;
  std::vector<std::int64_t> audio_tokens;
};

// diarization.jsonl: one line per recording with its ordered segment list.
struct Recording {
  std::string recording_id;
  std::vector<DiarizedSegment> segments;
};

// A chunk pairs an audio span with its transcription. Invariants: end_s >
// start_s and, once transcripts are attached, non-empty text. Synthesized
// chunks carry the TTS job reference in audio_ref.
struct AudioTextChunk {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string speaker_id;
  std::string text;
  std::string audio_ref;
  std::vector<std::int64_t> audio_tokens;
  std::vector<std::int64_t> text_tokens;

  double duration_s() const { return end_s - start_s; }
};

// chunks.jsonl: one line per chunk, ordered by (recording_id, chunk_index).
struct ChunkRecord {
  std::string recording_id;
  int chunk_index = 0;
  AudioTextChunk chunk;
};

// One ASR system's transcription of one segment. Priority is positional:
// candidates[0] is the most trusted system.
struct TranscriptCandidate {
  std::string source_id;
  std::string text;
};

// candidates.jsonl: per-segment transcription candidates for ensembling.
struct CandidateRecord {
  std::string recording_id;
  int segment_index = 0;
  std::vector<TranscriptCandidate> candidates;
};

// transcripts.jsonl: ensembled text per segment.
struct TranscriptRecord {
  std::string recording_id;
  int segment_index = 0;
  std::string text;
};

// samples.jsonl: the unit of interleaved rendering. sample_id is the
// recording id plus a monotonically increasing index.
struct InterleavedSample {
  std::string sample_id;
  std::vector<AudioTextChunk> chunks;
};

enum class Modality : std::uint8_t { kAudio, kText };

char modality_char(Modality m);
Modality modality_from_char(char c);

// rendered.jsonl: token ids with per-position modality tags and loss mask
// (true = position contributes to the loss). The three vectors share length.
struct RenderedSequence {
  std::string sample_id;
  std::vector<std::int64_t> tokens;
  std::vector<Modality> modality_tags;
  std::vector<bool> loss_mask;
};

struct PackBoundary {
  std::string sample_id;
  std::int64_t offset = 0;
  std::int64_t length = 0;
};

// packed.jsonl: fixed-length training rows. Padding occupies the final
// pad_len positions, is loss-masked, and is tagged as text.
struct PackedSequence {
  std::string pack_id;
  std::vector<std::int64_t> tokens;
  std::vector<Modality> modality_tags;
  std::vector<bool> loss_mask;
  std::vector<PackBoundary> boundaries;
  std::int64_t pad_len = 0;
};

// Per-source corpus inventory. hours is optional; when both fields are
// present they must agree at 12.5 tokens per second (see mixture.hpp).
struct SourceStats {
  std::string name;
  std::optional<double> hours;
  std::int64_t tokens_available = 0;
};

// testset.jsonl: four-choice cloze items.
struct TestItem {
  std::string item_id;
  std::string question;
  std::array<std::string, 4> choices;
  int answer_index = 0;
};

// texts.jsonl: a train-corpus document for contamination scans.
struct TrainText {
  std::string id;
  std::string text;
};

// correct.jsonl: per-item grading, input to the significance test.
struct CorrectRecord {
  std::string item_id;
  bool correct = false;
};

// labels.jsonl: one topic label per sampled document.
struct LabelRecord {
  std::string label;
};

// docs.jsonl: a crawled page feeding synthetic corpus construction.
struct SeedDocument {
  std::string doc_id;
  std::string url;
  std::string html;
};

// hits.jsonl: one matched n-gram window per (train doc, eval item, n).
struct ContaminationHit {
  std::string train_id;
  std::string test_id;
  int n = 0;
  std::vector<std::string> span;

  friend bool operator==(const ContaminationHit&, const ContaminationHit&) = default;
};

struct ChoiceScore {
  double logprob_sum = 0.0;
  std::int64_t token_len = 0;
};

// choices.jsonl: per-item completion scores for the four cloze choices.
struct ChoiceRecord {
  std::string item_id;
  int answer_index = 0;
  std::array<ChoiceScore, 4> choices;
};

// Per-item distribution dump: o positions by V vocabulary entries for the
// audio-conditioned and text-conditioned runs, plus a padding flag per
// position. Rows are probability distributions (sum to 1 within 1e-6).
struct DistributionPairRecord {
  std::string item_id;
  std::vector<std::vector<double>> p_aud;
  std::vector<std::vector<double>> p_text;
  std::vector<bool> padded;
};

}  // namespace forge
