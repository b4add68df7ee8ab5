#include "adgen/prompts.hpp"

#include <map>
#include <stdexcept>

namespace adgen::prompts {

namespace detail {
const std::map<std::string, std::string> &table();
}

const std::string &get(std::string_view name) {
  const auto &t = detail::table();
  auto it = t.find(std::string(name));
  if (it == t.end())
    throw std::out_of_range("unknown prompt template '" + std::string(name) + "'");
  return it->second;
}

} // namespace adgen::prompts
