#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace mlmlm {

/// Shortest decimal text that parses back to the same double; locale-free.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace mlmlm
