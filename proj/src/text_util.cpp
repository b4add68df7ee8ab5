#include "adgen/text_util.hpp"

#include <algorithm>
#include <cctype>

namespace adgen::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && (cur.back() == '\'' || cur.back() == '-'))
      cur.pop_back();
    if (!cur.empty())
      out.push_back(std::move(cur));
    cur.clear();
  };
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if ((c == '\'' || c == '-') && !cur.empty()) {
      cur.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string join(const std::vector<std::string> &parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i)
      out += sep;
    out += parts[i];
  }
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::map<std::string, std::string> parse_field_lines(std::string_view content) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos)
      end = content.size();
    auto line = content.substr(pos, end - pos);
    auto colon = line.find(':');
    if (colon != std::string_view::npos)
      out[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
    pos = end + 1;
  }
  return out;
}

} // namespace adgen::text
