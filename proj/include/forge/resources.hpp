#pragma once

#include <string_view>
#include <vector>

namespace forge {

// Build-time embedded resource by key, e.g. "prompts/extraction.txt".
// Unknown keys are a StageError.
std::string_view embedded_resource(std::string_view key);

std::vector<std::string_view> embedded_resource_keys();

}  // namespace forge
