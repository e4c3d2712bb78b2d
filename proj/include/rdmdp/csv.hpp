#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace rdmdp {

/// Shortest round-trip decimal form, independent of the global locale.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) return "nan";
  return std::string(buf, res.ptr);
}

}  // namespace rdmdp
