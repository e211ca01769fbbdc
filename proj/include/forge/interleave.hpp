#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "forge/records.hpp"

namespace forge {

enum class SamplingScheme { kDeterministic, kStochastic };

SamplingScheme sampling_scheme_from_name(const std::string& name);

struct SamplingConfig {
  SamplingScheme scheme = SamplingScheme::kDeterministic;
  double audio_prob = 0.5;  // stochastic draws for positions after the first
  std::uint64_t seed = 0;
};

// Picks one modality per chunk. Position one is always audio; deterministic
// alternates from there, stochastic draws the rest iid from the seeded
// counter generator on the given stream (derive it from the sample id so
// samples are independent and replayable).
std::vector<Modality> render_modalities(std::size_t n, const SamplingConfig& config,
                                        std::uint64_t stream = 0);

int count_switches(const std::vector<Modality>& tags);

// Concatenates each chunk's tokens for its selected modality. Audio positions
// are loss-masked when mask_audio_loss is set; a chunk with no tokens for its
// selected modality is a ValidationError naming the chunk index.
RenderedSequence render_tokens(const InterleavedSample& sample,
                               const std::vector<Modality>& modalities, bool mask_audio_loss);

// One supervised turn: user audio, user text, assistant text, assistant
// audio, rendered in that order. Only user audio is loss-masked.
struct SftTurn {
  std::vector<std::int64_t> user_audio;
  std::vector<std::int64_t> user_text;
  std::vector<std::int64_t> assistant_text;
  std::vector<std::int64_t> assistant_audio;
};

RenderedSequence render_sft(const std::vector<SftTurn>& turns, std::string_view sample_id);

struct PackingConfig {
  std::int64_t sequence_length = 16384;
  std::int64_t pad_token = 0;
};

// Next-fit packing in arrival order: one open pack; a sequence that does not
// fit closes it (padding the remainder, loss-masked) and opens the next.
// Sequences never split; one longer than sequence_length is a
// ValidationError naming its sample id.
std::vector<PackedSequence> pack(const std::vector<RenderedSequence>& sequences,
                                 const PackingConfig& config);

}  // namespace forge
