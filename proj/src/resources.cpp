#include "forge/resources.hpp"

#include <string>

#include "embedded_resources.hpp"
#include "forge/error.hpp"

namespace forge {

std::string_view embedded_resource(std::string_view key) {
  for (const auto& [name, content] : detail::kEmbeddedResources) {
    if (name == key) return content;
  }
  throw StageError("missing embedded resource '" + std::string(key) + "'");
}

std::vector<std::string_view> embedded_resource_keys() {
  std::vector<std::string_view> keys;
  for (const auto& [name, content] : detail::kEmbeddedResources) keys.push_back(name);
  return keys;
}

}  // namespace forge
