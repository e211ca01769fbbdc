#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// Tokenizers are injectable wherever token identity matters (repetition
// filtering, contamination scans). The default is ASCII lowercasing plus a
// split on Unicode whitespace.
using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

std::string ascii_lower(std::string_view text);

// Splits on Unicode whitespace (ASCII space/tab/newlines, NBSP, the general
// punctuation spaces, ideographic space). Invalid UTF-8 bytes pass through as
// ordinary characters.
std::vector<std::string> split_whitespace(std::string_view text);

std::vector<std::string> lower_tokens(std::string_view text);

Tokenizer default_tokenizer();

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

// Stand-in text token ids: one id per whitespace word, hashed into [0, 2^20).
// Deployments with a real LM tokenizer attach their own ids; downstream
// stages only need stable opaque integers.
std::vector<std::int64_t> stand_in_text_token_ids(std::string_view text);

}  // namespace forge
