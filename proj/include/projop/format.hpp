#pragma once

#include <cstdio>
#include <string>

namespace projop {

/// Shortest form that round-trips any double: 17 significant digits.
inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace projop
