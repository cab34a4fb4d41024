#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace picl {

/// FNV-1a 64-bit hash; the project's one canonical string hash (cache keys,
/// trigram buckets, seed salts).
uint64_t fnv1a64(std::string_view data);

std::string to_hex(uint64_t value);

std::string trim_copy(std::string_view s);
bool is_blank(std::string_view s);

/// Splits on runs of spaces/tabs; never returns empty fields.
std::vector<std::string> split_ws(std::string_view line);

std::vector<std::string> split_lines(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

/// Write-then-rename so readers never observe a partial file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Fixed-precision decimal rendering; used everywhere a float reaches a
/// report so replays stay byte-identical.
std::string format_double(double v, int precision = 6);

}  // namespace picl
