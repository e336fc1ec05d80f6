#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace botgraph {

// printf-style formatting into a std::string.
std::string strfmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

// Fixed 9-significant-digit form used by the feature cache.
std::string format_sig9(double v);

// Strict numeric parsers; return false on trailing garbage or empty input.
bool parse_double(std::string_view s, double& out);
bool parse_u64(std::string_view s, uint64_t& out);
bool parse_i64(std::string_view s, int64_t& out);

std::vector<std::string_view> split_view(std::string_view line, char sep);
std::string_view trim_view(std::string_view s);

// FNV-1a, used to derive per-dataset sub-seeds from names.
uint64_t fnv1a(std::string_view s);

}  // namespace botgraph
