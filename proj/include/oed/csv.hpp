#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>

namespace oed {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Writes each line of `text` prefixed with "# ".
inline void write_comment_block(std::ostream& out, std::string_view text) {
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    const auto line = text.substr(start, end == std::string_view::npos ? end : end - start);
    if (!line.empty() || end != std::string_view::npos) out << "# " << line << '\n';
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
}

}  // namespace oed
