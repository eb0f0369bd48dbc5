#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wuglab {

uint64_t fnv1a64(std::string_view s);
uint64_t fnv1a64(const std::vector<std::string>& lines);

std::string lowercase(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

// Lines are split on '\n'; a trailing newline does not produce an empty line.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

// Writes go to <path>.tmp first, then rename (atomic on POSIX).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_lines_atomic(const std::filesystem::path& path, const std::vector<std::string>& lines);

void ensure_dir(const std::filesystem::path& dir);

std::string format_double(double v, int precision);

} // namespace wuglab
