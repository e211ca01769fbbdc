#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace forge::prompts {

// Prompt templates are versioned resource files baked in at build time.
// Slots use {identifier}; braces that do not wrap an identifier are literal.
struct Template {
  std::string id;
  std::string version;
  std::string text;
  std::vector<std::string> slots;
};

const Template& get(std::string_view id);  // ValidationError for unknown ids
std::vector<std::string> ids();

// Byte-exact slot substitution. A placeholder without a value is a
// ValidationError naming the slot; unused values are ignored.
std::string build(std::string_view template_id, const std::map<std::string, std::string>& slots);

std::string render(const Template& tpl, const std::map<std::string, std::string>& slots);

}  // namespace forge::prompts
