#include "forge/synth.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <regex>

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/parallel.hpp"
#include "forge/prompts.hpp"
#include "forge/resources.hpp"
#include "forge/rng.hpp"
#include "forge/tokenize.hpp"

namespace forge {

std::optional<UrlParts> parse_url(std::string_view url) {
  std::size_t sep = url.find("://");
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  UrlParts parts;
  parts.scheme = ascii_lower(url.substr(0, sep));
  if (parts.scheme != "http" && parts.scheme != "https") return std::nullopt;
  std::string_view rest = url.substr(sep + 3);
  std::size_t end = rest.find_first_of("/?#");
  std::string_view authority = end == std::string_view::npos ? rest : rest.substr(0, end);
  std::size_t at = authority.rfind('@');
  if (at != std::string_view::npos) authority = authority.substr(at + 1);
  std::size_t colon = authority.rfind(':');
  if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos)
    authority = authority.substr(0, colon);
  if (authority.empty()) return std::nullopt;
  parts.host = ascii_lower(authority);
  while (!parts.host.empty() && parts.host.back() == '.') parts.host.pop_back();
  if (parts.host.empty()) return std::nullopt;

  std::size_t last_dot = parts.host.rfind('.');
  if (last_dot == std::string::npos) {
    parts.registrable_domain = parts.host;
  } else {
    std::size_t prev_dot = parts.host.rfind('.', last_dot - 1);
    parts.registrable_domain =
        prev_dot == std::string::npos ? parts.host : parts.host.substr(prev_dot + 1);
  }
  return parts;
}

DomainAllowlist DomainAllowlist::from_urls(const std::vector<std::string>& urls) {
  DomainAllowlist list;
  for (const std::string& url : urls) {
    std::optional<UrlParts> parts = parse_url(url);
    if (!parts) throw ValidationError("allowlist entry is not a valid URL: " + url);
    list.domains_.insert(parts->registrable_domain);
  }
  return list;
}

const DomainAllowlist& DomainAllowlist::builtin() {
  static const DomainAllowlist list = [] {
    std::vector<std::string> urls;
    std::string_view raw = embedded_resource("knowledge_domains.txt");
    std::size_t pos = 0;
    while (pos <= raw.size()) {
      std::size_t eol = raw.find('\n', pos);
      std::string_view line = raw.substr(pos, eol == std::string_view::npos ? raw.size() - pos
                                                                            : eol - pos);
      if (!line.empty() && line.front() != '#') urls.emplace_back(line);
      if (eol == std::string_view::npos) break;
      pos = eol + 1;
    }
    return DomainAllowlist::from_urls(urls);
  }();
  return list;
}

bool DomainAllowlist::allows(std::string_view url) const {
  std::optional<UrlParts> parts = parse_url(url);
  if (!parts) {
    log::warn("unparseable URL, treated as not allowlisted", {{"url", std::string(url)}});
    return false;
  }
  return domains_.count(parts->registrable_domain) > 0;
}

const std::set<std::string>& builtin_abbreviations() {
  static const std::set<std::string> abbrevs = [] {
    std::set<std::string> out;
    std::string_view raw = embedded_resource("abbreviations.txt");
    std::size_t pos = 0;
    while (pos <= raw.size()) {
      std::size_t eol = raw.find('\n', pos);
      std::string_view line = raw.substr(pos, eol == std::string_view::npos ? raw.size() - pos
                                                                            : eol - pos);
      if (!line.empty() && line.front() != '#') out.insert(std::string(line));
      if (eol == std::string_view::npos) break;
      pos = eol + 1;
    }
    return out;
  }();
  return abbrevs;
}

namespace {

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}'; }

bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string trimmed(std::string_view text) {
  std::size_t a = 0;
  std::size_t b = text.size();
  while (a < b && is_space_byte(text[a])) ++a;
  while (b > a && is_space_byte(text[b - 1])) --b;
  return std::string(text.substr(a, b - a));
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  return split_sentences(text, builtin_abbreviations());
}

std::vector<std::string> split_sentences(std::string_view text,
                                         const std::set<std::string>& abbreviations) {
  std::vector<std::string> out;
  std::size_t chunk_start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i + 1;
    bool dots_only = text[i] == '.';
    while (run_end < text.size() && is_terminator(text[run_end])) {
      dots_only = dots_only && text[run_end] == '.';
      ++run_end;
    }
    std::size_t close_end = run_end;
    while (close_end < text.size() && is_closer(text[close_end])) ++close_end;
    bool boundary = close_end >= text.size() || is_space_byte(text[close_end]);
    if (boundary && dots_only) {
      // The token in front of a bare period can veto the boundary.
      std::size_t tb = i;
      while (tb > chunk_start && !is_space_byte(text[tb - 1])) --tb;
      std::string token = ascii_lower(text.substr(tb, i - tb));
      std::size_t lead = 0;
      while (lead < token.size() &&
             !(std::isalnum(static_cast<unsigned char>(token[lead])))) {
        ++lead;
      }
      token = token.substr(lead);
      if (!token.empty() && abbreviations.count(token) > 0) boundary = false;
    }
    if (boundary) {
      std::string chunk = trimmed(text.substr(chunk_start, close_end - chunk_start));
      if (!chunk.empty()) out.push_back(std::move(chunk));
      chunk_start = close_end;
    }
    i = close_end;
  }
  std::string tail = trimmed(text.substr(chunk_start));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::vector<std::string> mine_questions(std::string_view text) {
  std::vector<std::string> out;
  for (std::string& sentence : split_sentences(text)) {
    std::string_view s = sentence;
    while (!s.empty() && is_closer(s.back())) s.remove_suffix(1);
    if (!s.empty() && s.back() == '?') out.push_back(std::move(sentence));
  }
  return out;
}

QuestionValidation parse_validation_reply(std::string_view reply) {
  static const std::regex complete_re(R"((?:^|[^a-z_])complete\s*:\s*(true|false))");
  static const std::regex question_re(R"(is_question\s*:\s*(true|false))");
  const std::string lowered = ascii_lower(reply);

  auto last_match = [&](const std::regex& re) -> std::optional<bool> {
    std::optional<bool> value;
    auto begin = std::sregex_iterator(lowered.begin(), lowered.end(), re);
    for (auto it = begin; it != std::sregex_iterator(); ++it)
      value = (*it)[1].str() == "true";
    return value;
  };

  std::optional<bool> complete = last_match(complete_re);
  std::optional<bool> is_question = last_match(question_re);
  if (!complete || !is_question)
    throw ValidationError("validation reply lacks complete/is_question verdicts: " +
                          std::string(reply));
  return QuestionValidation{*complete, *is_question};
}

std::array<std::string, 3> parse_distractors(std::string_view reply) {
  std::size_t pos = 0;
  std::string line;
  while (pos <= reply.size()) {
    std::size_t eol = reply.find('\n', pos);
    std::string_view raw =
        reply.substr(pos, eol == std::string_view::npos ? reply.size() - pos : eol - pos);
    line = trimmed(raw);
    if (!line.empty()) break;
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t comma = line.find(',', start);
    std::string piece =
        trimmed(std::string_view(line).substr(start, comma == std::string::npos ? line.size() - start
                                                                                : comma - start));
    if (!piece.empty()) parts.push_back(std::move(piece));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3)
    throw ValidationError("expected exactly three comma-separated distractors, got " +
                          std::to_string(parts.size()) + " in reply: " + std::string(reply));
  return {parts[0], parts[1], parts[2]};
}

int assign_voice(std::uint64_t seed, std::uint64_t key, int voice_count) {
  if (voice_count < 1) throw ValidationError("assign_voice: voice_count must be >= 1");
  std::uint64_t v = rng::value(seed, rng::stream_of("voice-assignment"), key);
  return static_cast<int>(rng::to_below(v, static_cast<std::uint64_t>(voice_count)));
}

std::string extract_plaintext_reply(std::string_view reply) {
  constexpr std::string_view kFence = "```plaintext";
  std::size_t fence = reply.find(kFence);
  if (fence == std::string_view::npos) return trimmed(reply);
  std::size_t body_start = fence + kFence.size();
  if (body_start < reply.size() && reply[body_start] == '\n') ++body_start;
  std::size_t fence_end = reply.find("```", body_start);
  std::string_view body = fence_end == std::string_view::npos
                              ? reply.substr(body_start)
                              : reply.substr(body_start, fence_end - body_start);
  std::string text = trimmed(body);
  if (!text.empty() && text.front() == '{') text.erase(text.begin());
  if (!text.empty() && text.back() == '}') text.pop_back();
  return trimmed(text);
}

SynthMode synth_mode_from_name(const std::string& name) {
  if (name == "krist") return SynthMode::kKrist;
  if (name == "quest") return SynthMode::kQuest;
  throw ValidationError("unknown synthesis mode '" + name + "' (expected krist or quest)");
}

namespace {

// A sample waiting on speech synthesis for its chunk texts.
struct PendingSample {
  std::string doc_id;
  std::string sample_id;
  std::vector<std::string> chunk_texts;
};

struct Sink {
  std::mutex mutex;
  std::vector<DeadLetter> dead_letters;
  std::vector<RejectedQuestion> rejected;

  void dead(std::string doc_id, std::string stage, std::string detail) {
    std::lock_guard<std::mutex> lock(mutex);
    dead_letters.push_back(DeadLetter{std::move(doc_id), std::move(stage), std::move(detail)});
  }
  void reject(std::string doc_id, std::string question, QuestionValidation verdict) {
    std::lock_guard<std::mutex> lock(mutex);
    rejected.push_back(RejectedQuestion{std::move(doc_id), std::move(question), verdict});
  }
};

}  // namespace

SynthResult synth_corpus(const std::vector<SeedDocument>& docs, LlmClient& llm, TtsClient& tts,
                         const SynthConfig& config) {
  if (config.max_in_flight < 1) throw ValidationError("synth: max_in_flight must be >= 1");
  if (config.voice_count < 1) throw ValidationError("synth: voice_count must be >= 1");

  SynthResult result;
  Sink sink;
  std::atomic<std::int64_t> retries{0};
  RateLimiter llm_rate(config.requests_per_s);
  RateLimiter tts_rate(config.requests_per_s);

  auto note_retry = [&retries](int, const std::string& error) {
    ++retries;
    log::debug("retrying client call", {{"error", error}});
  };
  auto call_llm = [&](const std::string& prompt) {
    return with_retries<LlmResponse>(
        config.retry,
        [&] {
          llm_rate.acquire();
          return llm.complete(LlmRequest{prompt});
        },
        note_retry);
  };
  auto call_tts = [&](const std::string& text, const std::string& voice) {
    return with_retries<TtsResponse>(
        config.retry,
        [&] {
          tts_rate.acquire();
          return tts.synthesize(TtsRequest{text, voice});
        },
        note_retry);
  };

  // Stage 1: allowlist filter.
  std::vector<const SeedDocument*> kept;
  for (const SeedDocument& doc : docs) {
    if (config.filter_domains && !DomainAllowlist::builtin().allows(doc.url)) {
      ++result.docs_skipped_domain;
      continue;
    }
    kept.push_back(&doc);
  }

  // Stage 2: extraction, one LLM call per page.
  std::vector<std::string> extracted(kept.size());
  std::vector<bool> extract_ok(kept.size(), false);
  parallel_for(kept.size(), config.max_in_flight, [&](std::size_t i) {
    try {
      LlmResponse reply =
          call_llm(prompts::build("extraction", {{"html_content", kept[i]->html}}));
      extracted[i] = extract_plaintext_reply(reply.completion);
      extract_ok[i] = !extracted[i].empty();
      if (!extract_ok[i]) sink.dead(kept[i]->doc_id, "extract", "empty extraction");
    } catch (const ClientError& e) {
      sink.dead(kept[i]->doc_id, "extract", e.what());
    }
  });

  // Stage 3: mode-specific text assembly.
  std::vector<PendingSample> pending;
  if (config.mode == SynthMode::kKrist) {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!extract_ok[i]) continue;
      std::vector<std::string> sentences = split_sentences(extracted[i]);
      if (sentences.empty()) {
        sink.dead(kept[i]->doc_id, "extract", "no sentences");
        continue;
      }
      pending.push_back(
          PendingSample{kept[i]->doc_id, kept[i]->doc_id + "-0", std::move(sentences)});
    }
  } else {
    struct QuestionJob {
      std::size_t doc = 0;
      std::string question;
      bool valid = false;
      std::string answer;
      bool answered = false;
    };
    std::vector<QuestionJob> jobs;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!extract_ok[i]) continue;
      for (std::string& q : mine_questions(extracted[i]))
        jobs.push_back(QuestionJob{i, std::move(q), false, "", false});
    }
    parallel_for(jobs.size(), config.max_in_flight, [&](std::size_t j) {
      QuestionJob& job = jobs[j];
      const std::string& doc_id = kept[job.doc]->doc_id;
      try {
        LlmResponse reply = call_llm(prompts::build("validation", {{"question", job.question}}));
        QuestionValidation verdict = parse_validation_reply(reply.completion);
        if (!verdict.valid()) {
          sink.reject(doc_id, job.question, verdict);
          return;
        }
        job.valid = true;
        LlmResponse answer = call_llm(prompts::build("answer", {{"question", job.question}}));
        job.answer = trimmed(answer.completion);
        job.answered = !job.answer.empty();
        if (!job.answered) sink.dead(doc_id, "answer", "empty answer");
      } catch (const ClientError& e) {
        sink.dead(doc_id, job.valid ? "answer" : "validate", e.what());
      } catch (const ValidationError& e) {
        sink.dead(doc_id, "validate", e.what());
      }
    });
    std::vector<int> next_index(kept.size(), 0);
    for (QuestionJob& job : jobs) {
      if (!job.valid || !job.answered) continue;
      PendingSample sample;
      sample.doc_id = kept[job.doc]->doc_id;
      sample.sample_id = sample.doc_id + "-" + std::to_string(next_index[job.doc]++);
      sample.chunk_texts = split_sentences(job.question);
      std::vector<std::string> answer_chunks = split_sentences(job.answer);
      sample.chunk_texts.insert(sample.chunk_texts.end(), answer_chunks.begin(),
                                answer_chunks.end());
      if (sample.chunk_texts.empty()) continue;
      pending.push_back(std::move(sample));
    }
  }

  // Stage 4: speech synthesis over every (sample, chunk), then a
  // deterministic reduce in job-index order.
  struct TtsJob {
    std::size_t sample = 0;
    std::size_t chunk = 0;
  };
  std::vector<TtsJob> tts_jobs;
  for (std::size_t s = 0; s < pending.size(); ++s)
    for (std::size_t c = 0; c < pending[s].chunk_texts.size(); ++c) tts_jobs.push_back({s, c});

  std::vector<std::vector<std::optional<TtsResponse>>> speech(pending.size());
  for (std::size_t s = 0; s < pending.size(); ++s)
    speech[s].resize(pending[s].chunk_texts.size());

  std::vector<std::vector<std::string>> voices(pending.size());
  for (std::size_t s = 0; s < pending.size(); ++s) {
    voices[s].resize(pending[s].chunk_texts.size());
    for (std::size_t c = 0; c < pending[s].chunk_texts.size(); ++c) {
      std::uint64_t key = mix64(fnv1a64(pending[s].sample_id)) + c;
      voices[s][c] = "voice-" + std::to_string(assign_voice(config.seed, key, config.voice_count));
    }
  }

  parallel_for(tts_jobs.size(), config.max_in_flight, [&](std::size_t j) {
    const TtsJob& job = tts_jobs[j];
    const PendingSample& sample = pending[job.sample];
    try {
      speech[job.sample][job.chunk] =
          call_tts(sample.chunk_texts[job.chunk], voices[job.sample][job.chunk]);
    } catch (const ClientError& e) {
      sink.dead(sample.doc_id, "tts", e.what());
    }
  });

  for (std::size_t s = 0; s < pending.size(); ++s) {
    bool whole = true;
    for (const auto& r : speech[s]) whole = whole && r.has_value();
    if (!whole) continue;  // a chunk dead-lettered; the sample would be torn
    InterleavedSample sample;
    sample.sample_id = pending[s].sample_id;
    double clock = 0.0;
    for (std::size_t c = 0; c < pending[s].chunk_texts.size(); ++c) {
      const TtsResponse& r = *speech[s][c];
      AudioTextChunk chunk;
      chunk.start_s = clock;
      chunk.end_s = clock + std::max(r.duration_s, 0.001);
      clock = chunk.end_s;
      chunk.speaker_id = voices[s][c];
      chunk.text = pending[s].chunk_texts[c];
      chunk.audio_ref = r.audio_ref;
      chunk.audio_tokens = r.audio_tokens;
      chunk.text_tokens = stand_in_text_token_ids(chunk.text);
      sample.chunks.push_back(std::move(chunk));
    }
    result.samples.push_back(std::move(sample));
  }

  result.dead_letters = std::move(sink.dead_letters);
  result.rejected = std::move(sink.rejected);
  result.retries = retries.load();
  return result;
}

}  // namespace forge
