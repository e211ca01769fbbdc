#include "forge/prompts.hpp"

#include <cctype>

#include "forge/error.hpp"
#include "forge/resources.hpp"

namespace forge::prompts {

namespace {

std::vector<std::string> scan_slots(std::string_view text) {
  std::vector<std::string> slots;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
      ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      std::string name(text.substr(i + 1, j - i - 1));
      bool seen = false;
      for (const std::string& s : slots) seen = seen || s == name;
      if (!seen) slots.push_back(std::move(name));
      i = j;
    }
  }
  return slots;
}

Template make(std::string id, std::string_view key) {
  Template t;
  t.id = std::move(id);
  t.version = "v1";
  t.text = std::string(embedded_resource(key));
  t.slots = scan_slots(t.text);
  return t;
}

const std::vector<Template>& registry() {
  static const std::vector<Template> templates = {
      make("extraction", "prompts/extraction.txt"),
      make("validation", "prompts/validation.txt"),
      make("answer", "prompts/answer.txt"),
      make("distractor", "prompts/distractor.txt"),
      make("distractor_multi_answer", "prompts/distractor_multi_answer.txt"),
      make("cloze", "prompts/cloze.txt"),
  };
  return templates;
}

}  // namespace

const Template& get(std::string_view id) {
  for (const Template& t : registry()) {
    if (t.id == id) return t;
  }
  throw ValidationError("unknown prompt template '" + std::string(id) + "'");
}

std::vector<std::string> ids() {
  std::vector<std::string> out;
  for (const Template& t : registry()) out.push_back(t.id);
  return out;
}

std::string render(const Template& tpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tpl.text.size());
  std::string_view text = tpl.text;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      if (j > i + 1 && j < text.size() && text[j] == '}') {
        std::string name(text.substr(i + 1, j - i - 1));
        auto it = slots.find(name);
        if (it == slots.end())
          throw ValidationError("template '" + tpl.id + "': no value for slot '" + name + "'");
        out += it->second;
        i = j;
        continue;
      }
    }
    out.push_back(text[i]);
  }
  return out;
}

std::string build(std::string_view template_id, const std::map<std::string, std::string>& slots) {
  return render(get(template_id), slots);
}

}  // namespace forge::prompts
