#include "forge/log.hpp"

#include <cstdio>
#include <mutex>

#include "json.hpp"

namespace forge::log {

namespace {

Format g_format = Format::kText;
Level g_level = Level::kInfo;
std::mutex g_mutex;

const char* level_name(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
  }
  return "info";
}

}  // namespace

void set_format(Format format) { g_format = format; }
void set_level(Level level) { g_level = level; }

void emit(Level level, std::string_view msg, std::initializer_list<Field> fields) {
  if (static_cast<int>(level) < static_cast<int>(g_level)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  if (g_format == Format::kJson) {
    nlohmann::ordered_json j;
    j["level"] = level_name(level);
    j["msg"] = std::string(msg);
    for (const Field& f : fields) j[std::string(f.first)] = f.second;
    std::fprintf(stderr, "%s\n", j.dump().c_str());
  } else {
    std::string line = std::string(level_name(level)) + ": " + std::string(msg);
    for (const Field& f : fields) {
      line += " ";
      line += f.first;
      line += "=";
      line += f.second;
    }
    std::fprintf(stderr, "%s\n", line.c_str());
  }
}

}  // namespace forge::log
