#include "forge/manifest.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "json.hpp"

#include "forge/error.hpp"

namespace forge::manifest {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& detail) {
  throw ValidationError(where + ": " + detail);
}

const json& need(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string need_str(const json& j, const char* key, const std::string& where,
                     bool allow_empty = false) {
  const json& v = need(j, key, where);
  if (!v.is_string()) fail(where, std::string("field '") + key + "' must be a string");
  std::string s = v.get<std::string>();
  if (s.empty() && !allow_empty) fail(where, std::string("field '") + key + "' must be non-empty");
  return s;
}

double need_num(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number()) fail(where, std::string("field '") + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(where, std::string("field '") + key + "' must be finite");
  return d;
}

std::int64_t need_int(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer()) fail(where, std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

bool need_bool(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_boolean()) fail(where, std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

const json& need_array(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_array()) fail(where, std::string("field '") + key + "' must be an array");
  return v;
}

void check_version(const json& j, const std::string& where) {
  const json& v = need(j, "v", where);
  if (!v.is_number_integer() || v.get<int>() != kManifestVersion)
    fail(where, "field 'v' must be " + std::to_string(kManifestVersion));
}

std::vector<std::int64_t> int_list(const json& j, const char* key, const std::string& where,
                                   bool required) {
  std::vector<std::int64_t> out;
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) fail(where, std::string("missing field '") + key + "'");
    return out;
  }
  if (!it->is_array()) fail(where, std::string("field '") + key + "' must be an array");
  out.reserve(it->size());
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& v = (*it)[i];
    if (!v.is_number_integer())
      fail(where, std::string("field '") + key + "[" + std::to_string(i) + "]' must be an integer");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

// '0'/'1' strings keep masks compact; modality tags use 'A'/'T'.
std::vector<bool> bits_from_string(const std::string& s, const char* key, const std::string& where) {
  std::vector<bool> out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1')
      fail(where, std::string("field '") + key + "' must contain only '0' and '1'");
    out.push_back(c == '1');
  }
  return out;
}

std::string bits_to_string(const std::vector<bool>& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

std::vector<Modality> tags_from_string(const std::string& s, const std::string& where) {
  std::vector<Modality> out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == 'A') {
      out.push_back(Modality::kAudio);
    } else if (c == 'T') {
      out.push_back(Modality::kText);
    } else {
      fail(where, std::string("field 'modality_tags' has unknown tag '") + c + "'");
    }
  }
  return out;
}

std::string tags_to_string(const std::vector<Modality>& tags) {
  std::string s(tags.size(), 'T');
  for (std::size_t i = 0; i < tags.size(); ++i) s[i] = modality_char(tags[i]);
  return s;
}

void span_fields(const json& j, const std::string& where, double& start_s, double& end_s) {
  start_s = need_num(j, "start_s", where);
  end_s = need_num(j, "end_s", where);
  if (start_s < 0) fail(where, "field 'start_s' must be >= 0");
  if (end_s <= start_s) fail(where, "field 'end_s' must be greater than start_s");
}

// ---- per-type parse / serialize ----

DiarizedSegment parse_segment(const json& j, const std::string& where) {
  DiarizedSegment s;
  span_fields(j, where, s.start_s, s.end_s);
  s.speaker_id = need_str(j, "speaker_id", where);
  if (j.contains("text")) s.text = need_str(j, "text", where, /*allow_empty=*/true);
  s.audio_tokens = int_list(j, "audio_tokens", where, /*required=*/false);
  return s;
}

json segment_json(const DiarizedSegment& s) {
  json j;
  j["start_s"] = s.start_s;
  j["end_s"] = s.end_s;
  j["speaker_id"] = s.speaker_id;
  if (!s.text.empty()) j["text"] = s.text;
  if (!s.audio_tokens.empty()) j["audio_tokens"] = s.audio_tokens;
  return j;
}

AudioTextChunk parse_chunk_body(const json& j, const std::string& where) {
  AudioTextChunk c;
  span_fields(j, where, c.start_s, c.end_s);
  c.speaker_id = need_str(j, "speaker_id", where);
  if (j.contains("text")) c.text = need_str(j, "text", where, /*allow_empty=*/true);
  if (j.contains("audio_ref")) c.audio_ref = need_str(j, "audio_ref", where, /*allow_empty=*/true);
  c.audio_tokens = int_list(j, "audio_tokens", where, /*required=*/false);
  c.text_tokens = int_list(j, "text_tokens", where, /*required=*/false);
  return c;
}

void chunk_body_json(json& j, const AudioTextChunk& c) {
  j["start_s"] = c.start_s;
  j["end_s"] = c.end_s;
  j["speaker_id"] = c.speaker_id;
  j["text"] = c.text;
  if (!c.audio_ref.empty()) j["audio_ref"] = c.audio_ref;
  if (!c.audio_tokens.empty()) j["audio_tokens"] = c.audio_tokens;
  if (!c.text_tokens.empty()) j["text_tokens"] = c.text_tokens;
}

template <typename T>
struct Codec;

template <>
struct Codec<Recording> {
  static constexpr const char* kSchema = "diarization";
  static Recording parse(const json& j, const std::string& where) {
    Recording r;
    r.recording_id = need_str(j, "recording_id", where);
    const json& segs = need_array(j, "segments", where);
    r.segments.reserve(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i)
      r.segments.push_back(parse_segment(segs[i], where + ": segments[" + std::to_string(i) + "]"));
    return r;
  }
  static json serialize(const Recording& r) {
    json j;
    j["v"] = kManifestVersion;
    j["recording_id"] = r.recording_id;
    json segs = json::array();
    for (const DiarizedSegment& s : r.segments) segs.push_back(segment_json(s));
    j["segments"] = std::move(segs);
    return j;
  }
};

template <>
struct Codec<ChunkRecord> {
  static constexpr const char* kSchema = "chunks";
  static ChunkRecord parse(const json& j, const std::string& where) {
    ChunkRecord r;
    r.recording_id = need_str(j, "recording_id", where);
    r.chunk_index = static_cast<int>(need_int(j, "chunk_index", where));
    if (r.chunk_index < 0) fail(where, "field 'chunk_index' must be >= 0");
    r.chunk = parse_chunk_body(j, where);
    return r;
  }
  static json serialize(const ChunkRecord& r) {
    json j;
    j["v"] = kManifestVersion;
    j["recording_id"] = r.recording_id;
    j["chunk_index"] = r.chunk_index;
    chunk_body_json(j, r.chunk);
    return j;
  }
};

template <>
struct Codec<CandidateRecord> {
  static constexpr const char* kSchema = "candidates";
  static CandidateRecord parse(const json& j, const std::string& where) {
    CandidateRecord r;
    r.recording_id = need_str(j, "recording_id", where);
    r.segment_index = static_cast<int>(need_int(j, "segment_index", where));
    const json& cands = need_array(j, "candidates", where);
    if (cands.empty()) fail(where, "field 'candidates' must be non-empty");
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const std::string w = where + ": candidates[" + std::to_string(i) + "]";
      TranscriptCandidate c;
      c.source_id = need_str(cands[i], "source_id", w);
      c.text = need_str(cands[i], "text", w, /*allow_empty=*/true);
      r.candidates.push_back(std::move(c));
    }
    return r;
  }
  static json serialize(const CandidateRecord& r) {
    json j;
    j["v"] = kManifestVersion;
    j["recording_id"] = r.recording_id;
    j["segment_index"] = r.segment_index;
    json cands = json::array();
    for (const TranscriptCandidate& c : r.candidates)
      cands.push_back(json{{"source_id", c.source_id}, {"text", c.text}});
    j["candidates"] = std::move(cands);
    return j;
  }
};

template <>
struct Codec<TranscriptRecord> {
  static constexpr const char* kSchema = "transcripts";
  static TranscriptRecord parse(const json& j, const std::string& where) {
    TranscriptRecord r;
    r.recording_id = need_str(j, "recording_id", where);
    r.segment_index = static_cast<int>(need_int(j, "segment_index", where));
    r.text = need_str(j, "text", where, /*allow_empty=*/true);
    return r;
  }
  static json serialize(const TranscriptRecord& r) {
    json j;
    j["v"] = kManifestVersion;
    j["recording_id"] = r.recording_id;
    j["segment_index"] = r.segment_index;
    j["text"] = r.text;
    return j;
  }
};

template <>
struct Codec<InterleavedSample> {
  static constexpr const char* kSchema = "samples";
  static InterleavedSample parse(const json& j, const std::string& where) {
    InterleavedSample s;
    s.sample_id = need_str(j, "sample_id", where);
    const json& chunks = need_array(j, "chunks", where);
    if (chunks.empty()) fail(where, "field 'chunks' must be non-empty");
    for (std::size_t i = 0; i < chunks.size(); ++i)
      s.chunks.push_back(parse_chunk_body(chunks[i], where + ": chunks[" + std::to_string(i) + "]"));
    return s;
  }
  static json serialize(const InterleavedSample& s) {
    json j;
    j["v"] = kManifestVersion;
    j["sample_id"] = s.sample_id;
    json chunks = json::array();
    for (const AudioTextChunk& c : s.chunks) {
      json cj;
      chunk_body_json(cj, c);
      chunks.push_back(std::move(cj));
    }
    j["chunks"] = std::move(chunks);
    return j;
  }
};

template <>
struct Codec<RenderedSequence> {
  static constexpr const char* kSchema = "rendered";
  static RenderedSequence parse(const json& j, const std::string& where) {
    RenderedSequence r;
    r.sample_id = need_str(j, "sample_id", where);
    r.tokens = int_list(j, "tokens", where, /*required=*/true);
    r.modality_tags = tags_from_string(need_str(j, "modality_tags", where, true), where);
    r.loss_mask = bits_from_string(need_str(j, "loss_mask", where, true), "loss_mask", where);
    if (r.modality_tags.size() != r.tokens.size() || r.loss_mask.size() != r.tokens.size())
      fail(where, "tokens, modality_tags and loss_mask must have equal length");
    return r;
  }
  static json serialize(const RenderedSequence& r) {
    json j;
    j["v"] = kManifestVersion;
    j["sample_id"] = r.sample_id;
    j["tokens"] = r.tokens;
    j["modality_tags"] = tags_to_string(r.modality_tags);
    j["loss_mask"] = bits_to_string(r.loss_mask);
    return j;
  }
};

template <>
struct Codec<PackedSequence> {
  static constexpr const char* kSchema = "packed";
  static PackedSequence parse(const json& j, const std::string& where) {
    PackedSequence p;
    p.pack_id = need_str(j, "pack_id", where);
    p.tokens = int_list(j, "tokens", where, /*required=*/true);
    p.modality_tags = tags_from_string(need_str(j, "modality_tags", where, true), where);
    p.loss_mask = bits_from_string(need_str(j, "loss_mask", where, true), "loss_mask", where);
    p.pad_len = need_int(j, "pad_len", where);
    if (p.modality_tags.size() != p.tokens.size() || p.loss_mask.size() != p.tokens.size())
      fail(where, "tokens, modality_tags and loss_mask must have equal length");
    if (p.pad_len < 0 || static_cast<std::size_t>(p.pad_len) > p.tokens.size())
      fail(where, "field 'pad_len' out of range");
    const json& bounds = need_array(j, "boundaries", where);
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      const std::string w = where + ": boundaries[" + std::to_string(i) + "]";
      PackBoundary b;
      b.sample_id = need_str(bounds[i], "sample_id", w);
      b.offset = need_int(bounds[i], "offset", w);
      b.length = need_int(bounds[i], "length", w);
      if (b.offset < 0 || b.length < 0 ||
          static_cast<std::size_t>(b.offset + b.length) > p.tokens.size())
        fail(w, "boundary out of range");
      p.boundaries.push_back(std::move(b));
    }
    return p;
  }
  static json serialize(const PackedSequence& p) {
    json j;
    j["v"] = kManifestVersion;
    j["pack_id"] = p.pack_id;
    j["tokens"] = p.tokens;
    j["modality_tags"] = tags_to_string(p.modality_tags);
    j["loss_mask"] = bits_to_string(p.loss_mask);
    json bounds = json::array();
    for (const PackBoundary& b : p.boundaries)
      bounds.push_back(json{{"sample_id", b.sample_id}, {"offset", b.offset}, {"length", b.length}});
    j["boundaries"] = std::move(bounds);
    j["pad_len"] = p.pad_len;
    return j;
  }
};

template <>
struct Codec<SourceStats> {
  static constexpr const char* kSchema = "sources";
  static SourceStats parse(const json& j, const std::string& where) {
    SourceStats s;
    s.name = need_str(j, "name", where);
    s.tokens_available = need_int(j, "tokens_available", where);
    if (s.tokens_available < 0) fail(where, "field 'tokens_available' must be >= 0");
    if (j.contains("hours")) {
      double h = need_num(j, "hours", where);
      if (h <= 0) fail(where, "field 'hours' must be positive");
      s.hours = h;
      // 12.5 speech tokens per second, 45000 per hour.
      double implied = h * 3600.0 * 12.5;
      double tol = 0.01 * implied;
      double diff = std::fabs(implied - static_cast<double>(s.tokens_available));
      if (diff > tol)
        fail(where, "hours and tokens_available disagree at 12.5 tokens/s: " +
                        std::to_string(h) + " h implies " + std::to_string(implied) + " tokens");
    }
    return s;
  }
  static json serialize(const SourceStats& s) {
    json j;
    j["v"] = kManifestVersion;
    j["name"] = s.name;
    if (s.hours) j["hours"] = *s.hours;
    j["tokens_available"] = s.tokens_available;
    return j;
  }
};

template <>
struct Codec<TestItem> {
  static constexpr const char* kSchema = "testset";
  static TestItem parse(const json& j, const std::string& where) {
    TestItem t;
    t.item_id = need_str(j, "item_id", where);
    t.question = need_str(j, "question", where);
    const json& choices = need_array(j, "choices", where);
    if (choices.size() != t.choices.size())
      fail(where, "field 'choices' must have exactly 4 entries");
    for (std::size_t i = 0; i < choices.size(); ++i) {
      if (!choices[i].is_string())
        fail(where, "field 'choices[" + std::to_string(i) + "]' must be a string");
      t.choices[i] = choices[i].get<std::string>();
    }
    t.answer_index = static_cast<int>(need_int(j, "answer_index", where));
    if (t.answer_index < 0 || t.answer_index >= 4)
      fail(where, "field 'answer_index' must be in [0, 4)");
    return t;
  }
  static json serialize(const TestItem& t) {
    json j;
    j["v"] = kManifestVersion;
    j["item_id"] = t.item_id;
    j["question"] = t.question;
    j["choices"] = t.choices;
    j["answer_index"] = t.answer_index;
    return j;
  }
};

template <>
struct Codec<TrainText> {
  static constexpr const char* kSchema = "texts";
  static TrainText parse(const json& j, const std::string& where) {
    TrainText t;
    t.id = need_str(j, "id", where);
    t.text = need_str(j, "text", where, /*allow_empty=*/true);
    return t;
  }
  static json serialize(const TrainText& t) {
    json j;
    j["v"] = kManifestVersion;
    j["id"] = t.id;
    j["text"] = t.text;
    return j;
  }
};

template <>
struct Codec<CorrectRecord> {
  static constexpr const char* kSchema = "correct";
  static CorrectRecord parse(const json& j, const std::string& where) {
    CorrectRecord c;
    c.item_id = need_str(j, "item_id", where);
    c.correct = need_bool(j, "correct", where);
    return c;
  }
  static json serialize(const CorrectRecord& c) {
    json j;
    j["v"] = kManifestVersion;
    j["item_id"] = c.item_id;
    j["correct"] = c.correct;
    return j;
  }
};

template <>
struct Codec<LabelRecord> {
  static constexpr const char* kSchema = "labels";
  static LabelRecord parse(const json& j, const std::string& where) {
    LabelRecord l;
    l.label = need_str(j, "label", where);
    return l;
  }
  static json serialize(const LabelRecord& l) {
    json j;
    j["v"] = kManifestVersion;
    j["label"] = l.label;
    return j;
  }
};

template <>
struct Codec<SeedDocument> {
  static constexpr const char* kSchema = "docs";
  static SeedDocument parse(const json& j, const std::string& where) {
    SeedDocument d;
    d.doc_id = need_str(j, "doc_id", where);
    d.url = need_str(j, "url", where, /*allow_empty=*/true);
    d.html = need_str(j, "html", where, /*allow_empty=*/true);
    return d;
  }
  static json serialize(const SeedDocument& d) {
    json j;
    j["v"] = kManifestVersion;
    j["doc_id"] = d.doc_id;
    j["url"] = d.url;
    j["html"] = d.html;
    return j;
  }
};

template <>
struct Codec<ContaminationHit> {
  static constexpr const char* kSchema = "hits";
  static ContaminationHit parse(const json& j, const std::string& where) {
    ContaminationHit h;
    h.train_id = need_str(j, "train_id", where);
    h.test_id = need_str(j, "test_id", where);
    h.n = static_cast<int>(need_int(j, "n", where));
    if (h.n < 1) fail(where, "field 'n' must be >= 1");
    const json& span = need_array(j, "span", where);
    if (span.size() != static_cast<std::size_t>(h.n))
      fail(where, "field 'span' must have exactly n tokens");
    for (const json& t : span) {
      if (!t.is_string()) fail(where, "field 'span' must contain strings");
      h.span.push_back(t.get<std::string>());
    }
    return h;
  }
  static json serialize(const ContaminationHit& h) {
    json j;
    j["v"] = kManifestVersion;
    j["train_id"] = h.train_id;
    j["test_id"] = h.test_id;
    j["n"] = h.n;
    j["span"] = h.span;
    return j;
  }
};

template <>
struct Codec<ChoiceRecord> {
  static constexpr const char* kSchema = "choices";
  static ChoiceRecord parse(const json& j, const std::string& where) {
    ChoiceRecord r;
    r.item_id = need_str(j, "item_id", where);
    r.answer_index = static_cast<int>(need_int(j, "answer_index", where));
    if (r.answer_index < 0 || r.answer_index >= 4)
      fail(where, "field 'answer_index' must be in [0, 4)");
    const json& choices = need_array(j, "choices", where);
    if (choices.size() != r.choices.size())
      fail(where, "field 'choices' must have exactly 4 entries");
    for (std::size_t i = 0; i < choices.size(); ++i) {
      const std::string w = where + ": choices[" + std::to_string(i) + "]";
      r.choices[i].logprob_sum = need_num(choices[i], "logprob_sum", w);
      r.choices[i].token_len = need_int(choices[i], "token_len", w);
      if (r.choices[i].token_len < 0) fail(w, "field 'token_len' must be >= 0");
    }
    return r;
  }
  static json serialize(const ChoiceRecord& r) {
    json j;
    j["v"] = kManifestVersion;
    j["item_id"] = r.item_id;
    j["answer_index"] = r.answer_index;
    json choices = json::array();
    for (const ChoiceScore& c : r.choices)
      choices.push_back(json{{"logprob_sum", c.logprob_sum}, {"token_len", c.token_len}});
    j["choices"] = std::move(choices);
    return j;
  }
};

std::vector<std::vector<double>> prob_matrix(const json& j, const char* key,
                                             const std::string& where) {
  const json& rows = need_array(j, key, where);
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  std::size_t width = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string w =
        where + ": " + key + "[" + std::to_string(r) + "]";
    if (!rows[r].is_array()) fail(w, "must be an array");
    std::vector<double> row;
    row.reserve(rows[r].size());
    double sum = 0;
    for (const json& v : rows[r]) {
      if (!v.is_number()) fail(w, "must contain numbers");
      double d = v.get<double>();
      if (!std::isfinite(d) || d < 0) fail(w, "probabilities must be finite and >= 0");
      row.push_back(d);
      sum += d;
    }
    if (row.empty()) fail(w, "rows must be non-empty");
    if (r == 0) {
      width = row.size();
    } else if (row.size() != width) {
      fail(w, "rows must share one width");
    }
    if (std::fabs(sum - 1.0) > 1e-6) fail(w, "row must sum to 1 within 1e-6");
    out.push_back(std::move(row));
  }
  return out;
}

template <>
struct Codec<DistributionPairRecord> {
  static constexpr const char* kSchema = "dists";
  static DistributionPairRecord parse(const json& j, const std::string& where) {
    DistributionPairRecord d;
    d.item_id = need_str(j, "item_id", where);
    d.p_aud = prob_matrix(j, "p_aud", where);
    d.p_text = prob_matrix(j, "p_text", where);
    d.padded = bits_from_string(need_str(j, "padded", where, true), "padded", where);
    if (d.p_aud.size() != d.p_text.size())
      fail(where, "p_aud and p_text must have the same number of rows");
    if (!d.p_aud.empty() && d.p_aud[0].size() != d.p_text[0].size())
      fail(where, "p_aud and p_text must share one width");
    if (d.padded.size() != d.p_aud.size())
      fail(where, "field 'padded' must have one flag per row");
    return d;
  }
  static json serialize(const DistributionPairRecord& d) {
    json j;
    j["v"] = kManifestVersion;
    j["item_id"] = d.item_id;
    j["p_aud"] = d.p_aud;
    j["p_text"] = d.p_text;
    j["padded"] = bits_to_string(d.padded);
    return j;
  }
};

}  // namespace

template <typename T>
T from_line(const std::string& line, const std::string& context) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) fail(context, "invalid JSON");
  if (!j.is_object()) fail(context, "record must be a JSON object");
  check_version(j, context);
  return Codec<T>::parse(j, context);
}

template <typename T>
std::string to_line(const T& record) {
  return Codec<T>::serialize(record).dump();
}

template <typename T>
std::vector<T> read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("cannot open " + path);
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(from_line<T>(line, path + ":" + std::to_string(lineno)));
  }
  return out;
}

template <typename T>
void write(const std::vector<T>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError("cannot open " + path + " for writing");
  for (const T& r : records) {
    out << to_line(r) << '\n';
  }
  if (!out) throw StageError("write failed for " + path);
}

template <typename T>
std::string schema_name() {
  return Codec<T>::kSchema;
}

#define FORGE_MANIFEST_INSTANTIATE(T)                                          \
  template std::vector<T> read<T>(const std::string&);                         \
  template void write<T>(const std::vector<T>&, const std::string&);           \
  template T from_line<T>(const std::string&, const std::string&);             \
  template std::string to_line<T>(const T&);                                   \
  template std::string schema_name<T>();

FORGE_MANIFEST_INSTANTIATE(Recording)
FORGE_MANIFEST_INSTANTIATE(ChunkRecord)
FORGE_MANIFEST_INSTANTIATE(CandidateRecord)
FORGE_MANIFEST_INSTANTIATE(TranscriptRecord)
FORGE_MANIFEST_INSTANTIATE(InterleavedSample)
FORGE_MANIFEST_INSTANTIATE(RenderedSequence)
FORGE_MANIFEST_INSTANTIATE(PackedSequence)
FORGE_MANIFEST_INSTANTIATE(SourceStats)
FORGE_MANIFEST_INSTANTIATE(TestItem)
FORGE_MANIFEST_INSTANTIATE(TrainText)
FORGE_MANIFEST_INSTANTIATE(CorrectRecord)
FORGE_MANIFEST_INSTANTIATE(LabelRecord)
FORGE_MANIFEST_INSTANTIATE(SeedDocument)
FORGE_MANIFEST_INSTANTIATE(ContaminationHit)
FORGE_MANIFEST_INSTANTIATE(ChoiceRecord)
FORGE_MANIFEST_INSTANTIATE(DistributionPairRecord)

#undef FORGE_MANIFEST_INSTANTIATE

namespace {

template <typename T>
std::size_t count_valid(const std::string& path) {
  return read<T>(path).size();
}

const std::map<std::string, std::size_t (*)(const std::string&)>& validators() {
  static const std::map<std::string, std::size_t (*)(const std::string&)> v = {
      {"diarization", &count_valid<Recording>},
      {"chunks", &count_valid<ChunkRecord>},
      {"candidates", &count_valid<CandidateRecord>},
      {"transcripts", &count_valid<TranscriptRecord>},
      {"samples", &count_valid<InterleavedSample>},
      {"rendered", &count_valid<RenderedSequence>},
      {"packed", &count_valid<PackedSequence>},
      {"sources", &count_valid<SourceStats>},
      {"testset", &count_valid<TestItem>},
      {"texts", &count_valid<TrainText>},
      {"correct", &count_valid<CorrectRecord>},
      {"labels", &count_valid<LabelRecord>},
      {"docs", &count_valid<SeedDocument>},
      {"hits", &count_valid<ContaminationHit>},
      {"choices", &count_valid<ChoiceRecord>},
      {"dists", &count_valid<DistributionPairRecord>},
  };
  return v;
}

}  // namespace

std::size_t validate(const std::string& path, const std::string& schema) {
  auto it = validators().find(schema);
  if (it == validators().end()) throw ValidationError("unknown schema '" + schema + "'");
  return it->second(path);
}

std::vector<std::string> schema_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : validators()) names.push_back(name);
  return names;
}

}  // namespace forge::manifest
