#pragma once

#include <charconv>
#include <string>

// Locale-independent numeric formatting for CSV/JSON output. Shortest
// round-trippable form, so re-parsing reproduces the exact double.

namespace chainforge {

inline std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace chainforge
