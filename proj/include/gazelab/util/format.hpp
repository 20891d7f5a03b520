// Numeric formatting for report tables and data files.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace gazelab {

/// Formats x with the given number of significant digits ("%.*g").
inline std::string format_sig(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
    return buf;
}

/// Round-trippable representation for data files.
inline std::string format_full(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    // Prefer the shortest representation that parses back exactly.
    for (int digits = 1; digits <= 16; ++digits) {
        char shorter[64];
        std::snprintf(shorter, sizeof(shorter), "%.*g", digits, x);
        if (std::strtod(shorter, nullptr) == x) return shorter;
    }
    return buf;
}

}  // namespace gazelab
