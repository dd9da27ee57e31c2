#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace weaklabel::io {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

double parse_double(std::string_view text, std::size_t line = 0);
long long parse_int(std::string_view text, std::size_t line = 0);
std::uint64_t parse_u64(std::string_view text, std::size_t line = 0);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Strips a trailing '\r'; returns true for blank and '#'-comment lines.
bool is_skippable(std::string& line);

std::string join_doubles(const std::vector<double>& values, char sep = ',');
std::vector<double> parse_doubles(std::string_view text, std::size_t line = 0, char sep = ',');

}  // namespace weaklabel::io
