#pragma once

#include <charconv>
#include <string>

namespace ces {

// Shortest round-trip decimal form; locale-independent so CSV output is
// byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace ces
