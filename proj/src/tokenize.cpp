#include "forge/tokenize.hpp"

#include <cstdint>

#include "forge/hash.hpp"

namespace forge {

namespace {

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case U'\t':
    case U'\n':
    case U'\v':
    case U'\f':
    case U'\r':
    case U' ':
    case 0x0085:  // next line
    case 0x00A0:  // no-break space
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes one UTF-8 code point at text[i]; advances i. Invalid bytes decode
// as themselves so malformed input still tokenizes.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  unsigned char c0 = text[i];
  auto cont = [&](std::size_t k) {
    return i + k < text.size() && (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
  };
  if (c0 < 0x80) {
    i += 1;
    return c0;
  }
  if ((c0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (c0 & 0x1F) << 6 | (text[i + 1] & 0x3F);
    i += 2;
    return cp;
  }
  if ((c0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (c0 & 0x0F) << 12 | (text[i + 1] & 0x3F) << 6 | (text[i + 2] & 0x3F);
    i += 3;
    return cp;
  }
  if ((c0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (c0 & 0x07) << 18 | (text[i + 1] & 0x3F) << 12 | (text[i + 2] & 0x3F) << 6 |
                  (text[i + 3] & 0x3F);
    i += 4;
    return cp;
  }
  i += 1;
  return c0;
}

}  // namespace

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  std::size_t start = 0;
  bool in_token = false;
  while (i < text.size()) {
    std::size_t at = i;
    char32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp)) {
      if (in_token) {
        tokens.emplace_back(text.substr(start, at - start));
        in_token = false;
      }
    } else if (!in_token) {
      start = at;
      in_token = true;
    }
  }
  if (in_token) tokens.emplace_back(text.substr(start));
  return tokens;
}

std::vector<std::string> lower_tokens(std::string_view text) {
  std::vector<std::string> tokens = split_whitespace(text);
  for (std::string& t : tokens) t = ascii_lower(t);
  return tokens;
}

Tokenizer default_tokenizer() {
  return [](std::string_view text) { return lower_tokens(text); };
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::vector<std::int64_t> stand_in_text_token_ids(std::string_view text) {
  std::vector<std::int64_t> ids;
  for (const std::string& word : split_whitespace(text))
    ids.push_back(static_cast<std::int64_t>(fnv1a64(word) & 0xFFFFF));
  return ids;
}

}  // namespace forge
