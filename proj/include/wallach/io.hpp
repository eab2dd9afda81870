#pragma once

#include <cstdio>
#include <string>

namespace wallach {

// Full 17-significant-digit decimal serialization so downstream tooling can
// reproduce event geometry without re-running.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace wallach
