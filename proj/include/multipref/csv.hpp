#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>

namespace multipref::csv {

// Shortest decimal that round-trips, so re-runs produce identical bytes.
inline std::string format(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

template <typename T>
std::string cell(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return format(static_cast<double>(v));
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_arithmetic_v<T>) {
    return std::to_string(v);
  } else {
    return std::string(v);
  }
}

template <typename... Ts>
void row(std::ostream& out, const Ts&... values) {
  bool first = true;
  ((out << (first ? "" : ",") << cell(values), first = false), ...);
  out << '\n';
}

}  // namespace multipref::csv
