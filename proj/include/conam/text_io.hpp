// SPDX-License-Identifier: Apache-2.0
//
// Small text and file helpers shared by the CSV/JSON writers.

#ifndef CONAM_TEXT_IO_HPP
#define CONAM_TEXT_IO_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace conam::text {

// Shortest representation that parses back to the identical double.
std::string format_double(double v);

// Strict parse of a whole field; throws std::runtime_error on junk.
double parse_double(std::string_view field);
long long parse_integer(std::string_view field);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

// Reads one line, stripping a trailing '\r'. Returns false at EOF.
bool read_line(std::istream& in, std::string& line);

// Writes via a sibling temporary file followed by rename.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer,
                       bool binary = false);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

std::string hex64(std::uint64_t v);

} // namespace conam::text

#endif // CONAM_TEXT_IO_HPP
