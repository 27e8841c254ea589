#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace faultcast {

// All numeric text in generated files goes through these helpers so that a
// given double always renders to the same bytes.

/// 9 significant digits, shortest form ("%.9g").
std::string fmt_g9(double v);

/// Round-trip exact rendering of a double literal; always contains '.' or
/// an exponent so it re-parses as a float, not an int.
std::string fmt_f64_literal(double v);

std::string hex32(uint32_t v);  // 8 lowercase hex digits
std::string hex64(uint64_t v);  // 16 lowercase hex digits

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Split on runs of spaces/tabs; no empty fields.
std::vector<std::string_view> split_ws(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

/// FNV-1a 64-bit, used for content hashes of labeling inputs.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 14695981039346656037ull);

std::string read_file(const std::filesystem::path& p);
/// Write via temp file + rename so readers never observe partial content.
void write_file_atomic(const std::filesystem::path& p, std::string_view data);

}  // namespace faultcast
