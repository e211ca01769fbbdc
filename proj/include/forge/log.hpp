#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace forge::log {

enum class Format { kText, kJson };
enum class Level { kDebug, kInfo, kWarn, kError };

void set_format(Format format);
void set_level(Level level);

using Field = std::pair<std::string_view, std::string>;

void emit(Level level, std::string_view msg, std::initializer_list<Field> fields = {});

inline void debug(std::string_view msg, std::initializer_list<Field> fields = {}) {
  emit(Level::kDebug, msg, fields);
}
inline void info(std::string_view msg, std::initializer_list<Field> fields = {}) {
  emit(Level::kInfo, msg, fields);
}
inline void warn(std::string_view msg, std::initializer_list<Field> fields = {}) {
  emit(Level::kWarn, msg, fields);
}
inline void error(std::string_view msg, std::initializer_list<Field> fields = {}) {
  emit(Level::kError, msg, fields);
}

}  // namespace forge::log
