#pragma once

#include <cstdio>
#include <string>

namespace fcc {

// Numeric formatting for CSV bodies. %.9g round-trips every float32 value;
// glibc prints infinities as "inf", which is the documented serialization of
// unbounded radii. Deterministic given the value, so seeded runs emit
// byte-identical files.
inline std::string csv_num(float v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

inline std::string csv_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace fcc
