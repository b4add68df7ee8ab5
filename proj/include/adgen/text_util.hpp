#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adgen::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Lowercased alphanumeric words; apostrophes and hyphens stay inside words.
std::vector<std::string> words(std::string_view s);

std::string join(const std::vector<std::string> &parts, std::string_view sep);

bool contains_ci(std::string_view haystack, std::string_view needle);

/// "key: value" lines -> map. Lines without a colon are ignored; later keys win.
std::map<std::string, std::string> parse_field_lines(std::string_view content);

} // namespace adgen::text
