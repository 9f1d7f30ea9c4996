#pragma once

#include <array>
#include <string>
#include <string_view>

#include <fmt/core.h>

namespace legendforge {

// Wire formats in this project pin coordinates to exactly two decimals.
inline std::string fmt_coord(double v) { return fmt::format("{:.2f}", v); }

inline std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20)
          out += fmt::format("\\u{:04x}", c);
        else
          out += static_cast<char>(c);
    }
  }
  return out;
}

inline std::string json_string(std::string_view s) { return "\"" + json_escape(s) + "\""; }

/// "[x1, y1, x2, y2]" with 2-decimal coordinates.
inline std::string coord_array(const std::array<double, 4>& c) {
  return fmt::format("[{}, {}, {}, {}]", fmt_coord(c[0]), fmt_coord(c[1]), fmt_coord(c[2]),
                     fmt_coord(c[3]));
}

}  // namespace legendforge
