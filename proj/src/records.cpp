#include "forge/records.hpp"

#include "forge/error.hpp"

namespace forge {

char modality_char(Modality m) { return m == Modality::kAudio ? 'A' : 'T'; }

Modality modality_from_char(char c) {
  if (c == 'A') return Modality::kAudio;
  if (c == 'T') return Modality::kText;
  throw ValidationError(std::string("unknown modality tag '") + c + "'");
}

}  // namespace forge
