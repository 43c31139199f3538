#pragma once

#include <cstdio>
#include <string>

namespace fedae {

/// Shortest-round-trip-ish decimal for CSV/JSON output. %.9g reproduces any
/// float32 exactly and keeps files byte-stable across runs and platforms.
inline std::string g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace fedae
