#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "forge/records.hpp"

namespace forge::manifest {

// JSONL manifests: one UTF-8 JSON object per line, every line carrying
// "v": 1. Readers validate totally; the first malformed record raises a
// ValidationError naming the file, 1-based line number, and field.

template <typename T>
std::vector<T> read(const std::string& path);

template <typename T>
void write(const std::vector<T>& records, const std::string& path);

template <typename T>
std::string to_line(const T& record);

template <typename T>
T from_line(const std::string& line, const std::string& context = "record");

// Schema name for a record type ("diarization", "chunks", "samples", ...).
template <typename T>
std::string schema_name();

// Validates a file against a schema by name; returns the record count.
std::size_t validate(const std::string& path, const std::string& schema);

std::vector<std::string> schema_names();

}  // namespace forge::manifest
