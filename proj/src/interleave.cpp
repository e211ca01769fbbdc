#include "forge/interleave.hpp"

#include <string>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge {

SamplingScheme sampling_scheme_from_name(const std::string& name) {
  if (name == "deterministic") return SamplingScheme::kDeterministic;
  if (name == "stochastic") return SamplingScheme::kStochastic;
  throw ValidationError("unknown sampling scheme '" + name +
                        "' (expected deterministic or stochastic)");
}

std::vector<Modality> render_modalities(std::size_t n, const SamplingConfig& config,
                                        std::uint64_t stream) {
  if (config.audio_prob < 0.0 || config.audio_prob > 1.0)
    throw ValidationError("audio_prob must be in [0, 1]");
  std::vector<Modality> tags;
  tags.reserve(n);
  if (n == 0) return tags;
  tags.push_back(Modality::kAudio);
  if (config.scheme == SamplingScheme::kDeterministic) {
    for (std::size_t i = 1; i < n; ++i)
      tags.push_back(i % 2 == 0 ? Modality::kAudio : Modality::kText);
  } else {
    rng::Counter draw(config.seed, stream);
    for (std::size_t i = 1; i < n; ++i)
      tags.push_back(draw.next_unit() < config.audio_prob ? Modality::kAudio : Modality::kText);
  }
  return tags;
}

int count_switches(const std::vector<Modality>& tags) {
  int switches = 0;
  for (std::size_t i = 1; i < tags.size(); ++i)
    if (tags[i] != tags[i - 1]) ++switches;
  return switches;
}

RenderedSequence render_tokens(const InterleavedSample& sample,
                               const std::vector<Modality>& modalities, bool mask_audio_loss) {
  if (modalities.size() != sample.chunks.size())
    throw ValidationError("render_tokens: sample '" + sample.sample_id + "' has " +
                          std::to_string(sample.chunks.size()) + " chunks but " +
                          std::to_string(modalities.size()) + " modality picks");
  RenderedSequence out;
  out.sample_id = sample.sample_id;
  for (std::size_t i = 0; i < sample.chunks.size(); ++i) {
    const AudioTextChunk& c = sample.chunks[i];
    const bool audio = modalities[i] == Modality::kAudio;
    const std::vector<std::int64_t>& tokens = audio ? c.audio_tokens : c.text_tokens;
    if (tokens.empty())
      throw ValidationError("render_tokens: sample '" + sample.sample_id + "' chunk " +
                            std::to_string(i) + " has no " + (audio ? "audio" : "text") +
                            " tokens");
    for (std::int64_t t : tokens) {
      out.tokens.push_back(t);
      out.modality_tags.push_back(modalities[i]);
      out.loss_mask.push_back(audio ? !mask_audio_loss : true);
    }
  }
  return out;
}

RenderedSequence render_sft(const std::vector<SftTurn>& turns, std::string_view sample_id) {
  RenderedSequence out;
  out.sample_id = std::string(sample_id);
  auto emit = [&out](const std::vector<std::int64_t>& tokens, Modality m, bool in_loss) {
    for (std::int64_t t : tokens) {
      out.tokens.push_back(t);
      out.modality_tags.push_back(m);
      out.loss_mask.push_back(in_loss);
    }
  };
  for (const SftTurn& turn : turns) {
    emit(turn.user_audio, Modality::kAudio, false);
    emit(turn.user_text, Modality::kText, true);
    emit(turn.assistant_text, Modality::kText, true);
    emit(turn.assistant_audio, Modality::kAudio, true);
  }
  return out;
}

namespace {

struct OpenPack {
  PackedSequence pack;
  std::int64_t fill = 0;
};

void close_pack(OpenPack& open, const PackingConfig& config, std::vector<PackedSequence>& out) {
  open.pack.pad_len = config.sequence_length - open.fill;
  for (std::int64_t i = open.fill; i < config.sequence_length; ++i) {
    open.pack.tokens.push_back(config.pad_token);
    open.pack.modality_tags.push_back(Modality::kText);
    open.pack.loss_mask.push_back(false);
  }
  out.push_back(std::move(open.pack));
  open = OpenPack{};
}

}  // namespace

std::vector<PackedSequence> pack(const std::vector<RenderedSequence>& sequences,
                                 const PackingConfig& config) {
  if (config.sequence_length < 1) throw ValidationError("pack: sequence_length must be >= 1");
  std::vector<PackedSequence> out;
  OpenPack open;
  bool open_active = false;
  for (const RenderedSequence& seq : sequences) {
    const std::int64_t len = static_cast<std::int64_t>(seq.tokens.size());
    if (len > config.sequence_length)
      throw ValidationError("pack: sample '" + seq.sample_id + "' is " + std::to_string(len) +
                            " tokens, above the sequence length " +
                            std::to_string(config.sequence_length));
    if (len == 0) continue;
    if (open_active && open.fill + len > config.sequence_length) {
      close_pack(open, config, out);
      open_active = false;
    }
    if (!open_active) {
      open.pack.pack_id = "pack-" + std::to_string(out.size());
      open_active = true;
    }
    open.pack.boundaries.push_back(PackBoundary{seq.sample_id, open.fill, len});
    open.pack.tokens.insert(open.pack.tokens.end(), seq.tokens.begin(), seq.tokens.end());
    open.pack.modality_tags.insert(open.pack.modality_tags.end(), seq.modality_tags.begin(),
                                   seq.modality_tags.end());
    open.pack.loss_mask.insert(open.pack.loss_mask.end(), seq.loss_mask.begin(),
                               seq.loss_mask.end());
    open.fill += len;
  }
  if (open_active) close_pack(open, config, out);
  return out;
}

}  // namespace forge
