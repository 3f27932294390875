#pragma once

#include <charconv>
#include <string>

namespace opinion_nav {

/// Shortest round-trip decimal form, so text exports are byte-stable.
inline std::string format_number(double value) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

}  // namespace opinion_nav
