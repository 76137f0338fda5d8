#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace hbmo {

/// Receives non-fatal diagnostics. Defaults to stderr; tests may swap it out.
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::clog << "[hbmo] warning: " << msg << '\n';
    };
    return sink;
}

inline void warn(const std::string& msg) {
    if (warning_sink()) warning_sink()(msg);
}

} // namespace hbmo
