#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gr {

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

// Percent-escapes '%', tab, CR, LF and space so a value survives a
// whitespace-delimited line format.
std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view escaped);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, fsyncs, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace gr
